#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "lqr_regret/linear_search.hpp"
#include "lqr_regret/model.hpp"
#include "lqr_regret/riccati.hpp"
#include "lqr_regret/sim.hpp"

namespace lqr {

// Infinite-horizon costs per step for a system and noise covariance W.
struct CostFormulas {
  DareSolution dare;
  double online_cost = 0.0;  // Tr(PW)
  double trace_WS = 0.0;     // Tr(WS)
  // V = 4AᵀSWSA + (A − BK)ᵀV(A − BK).
  Matrix V;
  double V_residual = 0.0;
  // ¼·Tr(B(R + BᵀPB)⁻¹Bᵀ·V).
  double series_correction = 0.0;
  double offline_cost = 0.0;  // Tr(WS) − series_correction

  // Σ_i Tr(W·SA·F^i·B(R + BᵀPB)⁻¹Bᵀ·(Fᵀ)^i·AᵀS) with F = A − BK, truncated once
  // a term drops below 1e-12 of the running sum. Equals series_correction.
  double series_truncated = 0.0;
  std::size_t series_terms = 0;
  bool series_agrees = false;  // within 1e-9 relative

  // The same sum with F and Fᵀ exchanged: Σ_i Tr(W·SA·(Fᵀ)^i·B(..)⁻¹Bᵀ·F^i·AᵀS).
  // Coincides with series_correction for scalar or normal closed loops only;
  // kept as a diagnostic.
  double swapped_series = 0.0;
  double swapped_series_gap = 0.0;  // |swapped_series − series_correction|
};

CostFormulas closed_form_costs(const SystemSpec& spec, const Matrix& W, const DareOptions& options = {});
CostFormulas closed_form_costs(const SystemSpec& spec, const NoiseModel& model, const DareOptions& options = {});

struct EmpiricalRegret {
  double mean = 0.0;
  double combined_ci = 0.0;  // sqrt(ci_a² + ci_b²)
  double expected = 0.0;
  bool agrees = true;        // |mean − expected| ≤ 3·combined_ci
};

struct EmpiricalCosts {
  MonteCarloSummary online;
  MonteCarloSummary linear;
  MonteCarloSummary offline;
};

struct RegretReport {
  CostFormulas formulas;
  // Asymptotic per-step regrets.
  double online_vs_offline = 0.0;  // Tr(W(P − S)) + series_correction
  double linear_vs_offline = 0.0;  // same limit
  double online_vs_linear = 0.0;   // exactly 0
  std::optional<EmpiricalRegret> empirical_online_vs_offline;
  std::optional<EmpiricalRegret> empirical_linear_vs_offline;
  std::optional<EmpiricalRegret> empirical_online_vs_linear;
};

RegretReport regret_report(const SystemSpec& spec, const NoiseModel& model,
                           const std::optional<EmpiricalCosts>& empirical = std::nullopt);

// All three policies on one noise realization (terminal cost set to zero).
struct TrialEvaluation {
  double online = 0.0;   // steady-state Riccati gain, time averaged
  double offline = 0.0;  // clairvoyant recursion, time averaged
  double linear = 0.0;   // best-found constant gain, time averaged
  double dare_gain = 0.0;
  SandwichCheck sandwich;
};

TrialEvaluation evaluate_policies(const SystemSpec& spec, const std::shared_ptr<const RiccatiSolution>& ric,
                                  const NoiseSequence& w, const LinearSearchOptions& linear);

struct StudyOptions {
  std::size_t trials = 20;
  std::uint64_t base_seed = 0;
  std::size_t jobs = 1;
  LinearSearchOptions linear;
};

struct ConvergenceRow {
  std::size_t T = 0;
  MonteCarloSummary online;
  MonteCarloSummary linear;
  MonteCarloSummary offline;
  double online_formula = 0.0;
  double offline_formula = 0.0;
  // Mean over trials of |linear_i − online_formula|.
  double linear_abs_gap = 0.0;
  std::size_t sandwich_violations = 0;
};

// One row per horizon; trial k at every horizon uses seed base_seed + k.
std::vector<ConvergenceRow> convergence_study(const SystemSpec& spec, const NoiseModel& model,
                                              const std::vector<std::size_t>& T_grid, const StudyOptions& options);

struct ConcentrationRow {
  std::size_t T = 0;
  std::size_t trials = 0;
  double mean = 0.0;
  double std = 0.0;
  double epsilon = 0.0;
  double deviation_frequency = 0.0;
  double bound = 0.0;
  double binomial_se = 0.0;
  bool within_bound = false;  // frequency ≤ bound + 3·binomial_se
};

struct ConcentrationStudy {
  ConcentrationConstants constants;
  std::vector<ConcentrationRow> rows;
  // Least-squares fit std ≈ c/√T and its R².
  double fit_c = 0.0;
  double fit_r_squared = 0.0;
};

// cost_T(K; w) over `trials` seeds per horizon, ε = epsilon_fraction·mean.
ConcentrationStudy concentration_study(const SystemSpec& spec, const NoiseModel& model, const Matrix& K,
                                       const std::vector<std::size_t>& T_grid, std::size_t trials,
                                       std::uint64_t base_seed, double epsilon_fraction = 0.05,
                                       std::size_t jobs = 1);

struct InverseSqrtFit {
  double c = 0.0;
  double r_squared = 0.0;
};
InverseSqrtFit fit_inverse_sqrt(const std::vector<std::size_t>& T, const std::vector<double>& values);

struct OfflineCheckRow {
  std::size_t instance = 0;
  Eigen::Index n = 0, m = 0;
  std::size_t T = 0;
  bool terminal_cost = false;
  double recursive_cost = 0.0;
  double qp_cost = 0.0;
  double aux_cost = 0.0;  // q_0 accumulator
  double relative_cost_deviation = 0.0;
  double max_action_deviation = 0.0;
};

struct OfflineCheckReport {
  std::vector<OfflineCheckRow> rows;
  double max_relative_cost_deviation = 0.0;
  double max_action_deviation = 0.0;
};

// Clairvoyant recursion against the stacked QP on random instances with
// n, m ≤ 4, T ≤ 30 and Qf alternating between 0 and Q.
OfflineCheckReport offline_equivalence_check(std::size_t instances, std::uint64_t seed, std::size_t jobs = 1);

}  // namespace lqr
