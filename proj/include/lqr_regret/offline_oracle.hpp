#pragma once

#include "lqr_regret/model.hpp"
#include "lqr_regret/types.hpp"

namespace lqr {

// Offline cost written as uᵀHu + 2gᵀu + c0 over the stacked controls
// u = (u_0; ...; u_{T-1}). Built directly from the dynamics; shares no code
// with the Riccati machinery.
struct StackedProblem {
  Matrix H;
  Vector g;
  double c0 = 0.0;
  Eigen::Index control_dim = 0;

  double evaluate(const Vector& u) const;
};

struct QpSolution {
  Vector u_star;
  double cost_star = 0.0;
  // ‖2Hu* + 2g‖.
  double gradient_residual = 0.0;
};

// Largest supported m·T for the dense assembly.
inline constexpr Eigen::Index kMaxStackedSize = 2000;

StackedProblem assemble(const SystemSpec& spec, const NoiseSequence& w);

QpSolution solve_qp(const StackedProblem& problem);

// Splits a stacked vector into per-step controls.
std::vector<Vector> unstack(const Vector& u, Eigen::Index control_dim);

}  // namespace lqr
