#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace lqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// One disturbance vector per time step, w_0 ... w_{T-1}.
using NoiseSequence = std::vector<Vector>;

// Number of control steps; always >= 1.
class Horizon {
 public:
  explicit Horizon(std::size_t steps);
  std::size_t steps() const noexcept { return steps_; }
  operator std::size_t() const noexcept { return steps_; }

 private:
  std::size_t steps_;
};

}  // namespace lqr
