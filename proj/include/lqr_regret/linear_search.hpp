#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "lqr_regret/model.hpp"
#include "lqr_regret/riccati.hpp"
#include "lqr_regret/types.hpp"

namespace lqr {

struct CostTEval {
  // (1/T) Σ_{t<T} x_tᵀ(Q + KᵀRK)x_t along x_{t+1} = (A − BK)x_t + w_t, x_0 = 0;
  // +∞ once any ‖x_t‖ exceeds the overflow guard.
  double value = 0.0;
  std::optional<Matrix> gradient;
};

inline constexpr double kStateOverflow = 1e100;

// Forward rollout plus an adjoint pass for the gradient with respect to K.
CostTEval cost_T(const Matrix& K, const SystemSpec& spec, const NoiseSequence& w, bool want_gradient = false);

struct LinearSearchOptions {
  std::size_t starts = 4;
  std::uint64_t seed = 0;
  double grad_tol = 1e-7;
  std::size_t max_iter = 1000;
  double armijo = 1e-4;
  double shrink = 0.5;
  double initial_step = 1.0;
  // Random starts are K_∞ + perturbation_scale·‖K_∞‖_F·N(0, 1) entrywise.
  double perturbation_scale = 0.1;
};

struct LinearSearchResult {
  // Best stable terminal point found; not certified globally optimal.
  Matrix K_star;
  double cost = std::numeric_limits<double>::infinity();
  std::size_t starts = 0;
  std::size_t best_start = 0;
  // Terminal cost per start; +∞ for discarded (unstable or diverged) starts.
  std::vector<double> per_start_costs;
  // Initial cost per start.
  std::vector<double> per_start_initial_costs;
  double grad_norm_at_opt = 0.0;
  double spectral_radius = 0.0;
  // Whether the winning start reached grad_tol.
  bool converged = false;
  // cost_T at the DARE gain, always start 0.
  double dare_gain_cost = 0.0;
};

// Multi-start gradient descent with Armijo backtracking over constant gains.
LinearSearchResult optimize(const SystemSpec& spec, const NoiseSequence& w, const LinearSearchOptions& options = {});
LinearSearchResult optimize(const SystemSpec& spec, const DareSolution& dare, const NoiseSequence& w,
                            const LinearSearchOptions& options = {});

// Similarity A − BK = M L M⁻¹ with ‖L‖₂ ≤ ρ + δ, δ = (1 − ρ)/2, from a
// complex Schur form rescaled by diag(1, s, s², ...).
struct ContractionWitness {
  double spectral_radius = 0.0;
  double delta = 0.0;
  double contraction_norm = 0.0;  // ρ + δ
  double achieved_norm = 0.0;     // actual ‖L‖₂ ≤ contraction_norm
  double gamma = 0.0;             // 1 − contraction_norm
  double condition = 1.0;         // κ(M)
  double scaling = 1.0;           // s
};

ContractionWitness contraction_witness(const Matrix& closed_loop);

struct ConcentrationConstants {
  ContractionWitness witness;
  double noise_bound = 0.0;
  double sigma_max = 0.0;  // σ_max(Q + KᵀRK)
};

ConcentrationConstants concentration_constants(const SystemSpec& spec, const Matrix& K, double noise_bound);

// 2·exp(−2ε²γ⁴T / (25·B⁴·κ⁴(M)·σ²_max(Q + KᵀRK))).
double mcdiarmid_bound(const ConcentrationConstants& constants, double epsilon, std::size_t T);

}  // namespace lqr
