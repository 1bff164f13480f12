#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lqr_regret/errors.hpp"
#include "lqr_regret/rng.hpp"
#include "lqr_regret/types.hpp"

namespace lqr {

// Dynamics x_{t+1} = A x_t + B u_t + w_t with stage cost xᵀQx + uᵀRu and
// terminal cost x_Tᵀ Qf x_T. Dimensions are checked on construction.
class SystemSpec {
 public:
  SystemSpec(Matrix A, Matrix B, Matrix Q, Matrix R, std::optional<Matrix> Qf = std::nullopt);

  const Matrix& A() const noexcept { return A_; }
  const Matrix& B() const noexcept { return B_; }
  const Matrix& Q() const noexcept { return Q_; }
  const Matrix& R() const noexcept { return R_; }
  const Matrix& Qf() const noexcept { return Qf_; }
  Eigen::Index n() const noexcept { return A_.rows(); }
  Eigen::Index m() const noexcept { return B_.cols(); }

  // Same dynamics and stage costs with a different terminal cost.
  SystemSpec with_terminal_cost(Matrix Qf) const;

 private:
  Matrix A_, B_, Q_, R_, Qf_;
};

enum class NoiseKind { UniformBox, TruncatedGaussian, ScaledRademacher, Empirical };

std::string_view noise_kind_name(NoiseKind kind) noexcept;
NoiseKind parse_noise_kind(std::string_view name);

// Zero-mean i.i.d. disturbance distribution with bounded support.
//
//   UniformBox         params = {c}: each coordinate uniform on [-c, c].
//   ScaledRademacher   params = {c}: each coordinate ±c with equal odds.
//   TruncatedGaussian  params = {radius, sigma} or {radius, sigma_1..sigma_n}:
//                      N(0, diag(sigma²)) conditioned on ‖w‖₂ ≤ radius.
//   Empirical          atoms:  uniform resampling of the given vectors after
//                      subtracting their mean.
class NoiseModel {
 public:
  static NoiseModel uniform_box(Eigen::Index dim, double half_width);
  static NoiseModel scaled_rademacher(Eigen::Index dim, double scale);
  static NoiseModel truncated_gaussian(Eigen::Index dim, double radius, std::vector<double> sigmas);
  static NoiseModel empirical(std::vector<Vector> atoms);

  NoiseKind kind() const noexcept { return kind_; }
  const std::vector<double>& params() const noexcept { return params_; }
  const std::vector<Vector>& atoms() const noexcept { return atoms_; }
  Eigen::Index dim() const noexcept { return dim_; }
  // Sup of ‖w‖₂ over the support.
  double bound() const noexcept { return bound_; }
  // Covariance of one draw.
  const Matrix& covariance() const noexcept { return W_; }

  // One draw; throws InvalidModel if the draw escapes the support bound.
  Vector sample(Rng& rng) const;

 private:
  NoiseModel() = default;
  Vector draw(Rng& rng) const;

  NoiseKind kind_ = NoiseKind::UniformBox;
  Eigen::Index dim_ = 0;
  std::vector<double> params_;
  std::vector<Vector> atoms_;
  double bound_ = 0.0;
  Matrix W_;
};

// T i.i.d. draws, a pure function of (model, T, seed).
NoiseSequence sample_noise(const NoiseModel& model, Horizon T, std::uint64_t seed);

struct ValidationReport {
  bool q_psd = false;
  bool r_pd = false;
  bool qf_psd = false;
  bool stabilizable = false;
  double q_min_eig = 0.0;
  double r_min_eig = 0.0;
  double qf_min_eig = 0.0;
  // Stabilizing gain from the DARE and ρ(A − B·K); set when stabilizable.
  std::optional<Matrix> witness_gain;
  double witness_radius = 0.0;
  // First failing invariant, if any.
  std::optional<ErrorKind> failure;
  std::string message;

  bool passed() const noexcept { return !failure.has_value(); }
};

// Negative values select the defaults tol_psd = 1e-9·‖Q‖₂ and tol_pd = 1e-12.
ValidationReport validate_spec(const SystemSpec& spec, double tol_psd = -1.0, double tol_pd = 1e-12);

// Throws the report's failure as an LqrError.
void require_valid(const SystemSpec& spec);

struct ProblemInstance {
  SystemSpec system;
  NoiseModel noise;
};

// JSON schema: {"A": [[..]], "B": [[..]], "Q": [[..]], "R": [[..]],
// "Qf": [[..]] (optional), "noise": {"kind": .., "params": .., "path": ..}}.
// Errors carry the JSON pointer of the offending field.
ProblemInstance parse_problem(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ProblemInstance load_problem(const std::filesystem::path& path);

// Reads one atom per line, comma separated.
std::vector<Vector> load_atoms_csv(const std::filesystem::path& path);

struct RandomSystemOptions {
  Eigen::Index min_n = 1, max_n = 4;
  Eigen::Index min_m = 1, max_m = 4;
  // ρ(A) is drawn uniformly from this range before B is chosen.
  double min_open_loop_radius = 0.2, max_open_loop_radius = 1.3;
  // Reject instances whose DARE closed loop exceeds this radius.
  double max_closed_loop_radius = 0.95;
  bool zero_terminal_cost = true;
};

// Random stabilizable instance; Q = LLᵀ (possibly rank deficient), R = LLᵀ + 0.1·I.
SystemSpec random_system(Rng& rng, const RandomSystemOptions& options = {});

}  // namespace lqr
