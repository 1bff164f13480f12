#include "lqr_regret/analysis.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "lqr_regret/errors.hpp"
#include "lqr_regret/linalg.hpp"
#include "lqr_regret/offline_oracle.hpp"
#include "lqr_regret/parallel.hpp"

namespace lqr {

namespace {

constexpr std::size_t kMaxSeriesTerms = 10000000;

double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), std::numeric_limits<double>::min()});
}

EmpiricalRegret empirical_difference(const MonteCarloSummary& a, const MonteCarloSummary& b, double expected) {
  EmpiricalRegret out;
  out.mean = a.mean - b.mean;
  out.combined_ci = std::hypot(a.ci95_halfwidth, b.ci95_halfwidth);
  out.expected = expected;
  out.agrees = std::abs(out.mean - expected) <= 3.0 * out.combined_ci;
  return out;
}

void require_ascending(const std::vector<std::size_t>& grid) {
  if (grid.empty()) throw LqrError(ErrorKind::InvalidArgument, "empty horizon grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] == 0 || (i > 0 && grid[i] <= grid[i - 1])) {
      throw LqrError(ErrorKind::InvalidArgument, "horizon grid must be positive and strictly ascending");
    }
  }
}

}  // namespace

CostFormulas closed_form_costs(const SystemSpec& spec, const Matrix& W, const DareOptions& options) {
  if (W.rows() != spec.n() || W.cols() != spec.n()) {
    throw LqrError(ErrorKind::DimensionMismatch, "noise covariance must be n x n");
  }
  CostFormulas out;
  out.dare = solve_dare(spec, options);
  const Matrix& P = out.dare.P;
  const Matrix& S = out.dare.S;
  const Matrix& A = spec.A();
  const Matrix& B = spec.B();
  const Matrix F = A - B * out.dare.K;

  out.online_cost = (P * W).trace();
  out.trace_WS = (W * S).trace();

  const Matrix SA = S * A;
  const Matrix forcing = linalg::symmetrize(4.0 * SA.transpose() * W * SA);
  out.V = solve_dlyap(F, forcing);
  out.V_residual = dlyap_residual(F, forcing, out.V);

  const Eigen::LLT<Matrix> inner(linalg::symmetrize(spec.R() + B.transpose() * P * B));
  const Matrix gain_map = B * inner.solve(B.transpose());  // B(R + BᵀPB)⁻¹Bᵀ
  out.series_correction = 0.25 * (gain_map * out.V).trace();
  out.offline_cost = out.trace_WS - out.series_correction;

  // Series forms, summed term by term.
  const Matrix left = W * SA;             // W·SA
  const Matrix right = SA.transpose();    // AᵀS
  Matrix Fi = Matrix::Identity(spec.n(), spec.n());
  double sum = 0.0;
  double swapped = 0.0;
  std::size_t terms = 0;
  for (; terms < kMaxSeriesTerms; ++terms) {
    const double term = (left * Fi * gain_map * Fi.transpose() * right).trace();
    const double swapped_term = (left * Fi.transpose() * gain_map * Fi * right).trace();
    sum += term;
    swapped += swapped_term;
    const bool negligible = std::abs(term) < 1e-12 * std::abs(sum) || (term == 0.0 && sum == 0.0);
    if (negligible && terms + 1 >= static_cast<std::size_t>(spec.n())) {
      ++terms;
      break;
    }
    Fi = F * Fi;
  }
  out.series_truncated = sum;
  out.series_terms = terms;
  out.series_agrees = relative_gap(sum, out.series_correction) <= 1e-9 ||
                      std::abs(sum - out.series_correction) <= 1e-14 * std::max(1.0, out.trace_WS);
  out.swapped_series = swapped;
  out.swapped_series_gap = std::abs(swapped - out.series_correction);
  return out;
}

CostFormulas closed_form_costs(const SystemSpec& spec, const NoiseModel& model, const DareOptions& options) {
  return closed_form_costs(spec, model.covariance(), options);
}

RegretReport regret_report(const SystemSpec& spec, const NoiseModel& model,
                           const std::optional<EmpiricalCosts>& empirical) {
  RegretReport report;
  report.formulas = closed_form_costs(spec, model);
  const CostFormulas& f = report.formulas;
  const double gap = (model.covariance() * (f.dare.P - f.dare.S)).trace() + f.series_correction;
  report.online_vs_offline = gap;
  report.linear_vs_offline = gap;
  report.online_vs_linear = 0.0;
  if (empirical) {
    report.empirical_online_vs_offline = empirical_difference(empirical->online, empirical->offline, gap);
    report.empirical_linear_vs_offline = empirical_difference(empirical->linear, empirical->offline, gap);
    report.empirical_online_vs_linear = empirical_difference(empirical->online, empirical->linear, 0.0);
  }
  return report;
}

TrialEvaluation evaluate_policies(const SystemSpec& spec, const std::shared_ptr<const RiccatiSolution>& ric,
                                  const NoiseSequence& w, const LinearSearchOptions& linear) {
  if (!spec.Qf().isZero(0.0)) {
    throw LqrError(ErrorKind::InvalidArgument, "policy comparison expects a zero terminal cost");
  }
  TrialEvaluation out;
  const std::size_t T = w.size();
  out.online = rollout(spec, make_online(spec, ric, /*steady=*/true), w).time_averaged;
  const Trajectory offline = rollout(spec, make_offline_optimal(spec, ric, w), w);
  out.offline = offline.time_averaged;
  const LinearSearchResult best = optimize(spec, ric->steady, w, linear);
  out.linear = best.cost;
  out.dare_gain = best.dare_gain_cost;
  out.sandwich = check_sandwich(offline.total, out.linear, out.dare_gain, T);
  return out;
}

std::vector<ConvergenceRow> convergence_study(const SystemSpec& base_spec, const NoiseModel& model,
                                              const std::vector<std::size_t>& T_grid, const StudyOptions& options) {
  require_ascending(T_grid);
  if (options.trials == 0) throw LqrError(ErrorKind::InvalidArgument, "need at least one trial");
  const SystemSpec spec = base_spec.with_terminal_cost(Matrix::Zero(base_spec.n(), base_spec.n()));
  const CostFormulas formulas = closed_form_costs(spec, model);

  std::vector<std::shared_ptr<const RiccatiSolution>> riccati;
  for (std::size_t T : T_grid) {
    riccati.push_back(std::make_shared<const RiccatiSolution>(RiccatiSolution{backward_riccati(spec, Horizon(T)),
                                                                              formulas.dare}));
  }

  const std::size_t trials = options.trials;
  std::vector<TrialEvaluation> cells(T_grid.size() * trials);
  parallel_for(cells.size(), options.jobs, [&](std::size_t cell) {
    const std::size_t row = cell / trials;
    const std::size_t k = cell % trials;
    const std::uint64_t seed = options.base_seed + k;
    try {
      const NoiseSequence w = sample_noise(model, Horizon(T_grid[row]), seed);
      LinearSearchOptions linear = options.linear;
      linear.seed = seed;
      cells[cell] = evaluate_policies(spec, riccati[row], w, linear);
    } catch (const LqrError& e) {
      throw LqrError(e.kind(), "T=" + std::to_string(T_grid[row]) + " trial " + std::to_string(k) + ": " + e.what());
    }
  });

  std::vector<ConvergenceRow> rows;
  for (std::size_t r = 0; r < T_grid.size(); ++r) {
    std::vector<double> online, linear, offline;
    ConvergenceRow row;
    row.T = T_grid[r];
    double gap = 0.0;
    for (std::size_t k = 0; k < trials; ++k) {
      const TrialEvaluation& e = cells[r * trials + k];
      online.push_back(e.online);
      linear.push_back(e.linear);
      offline.push_back(e.offline);
      gap += std::abs(e.linear - formulas.online_cost);
      if (!e.sandwich.holds) ++row.sandwich_violations;
    }
    row.online = summarize(std::move(online));
    row.linear = summarize(std::move(linear));
    row.offline = summarize(std::move(offline));
    row.online_formula = formulas.online_cost;
    row.offline_formula = formulas.offline_cost;
    row.linear_abs_gap = gap / static_cast<double>(trials);
    rows.push_back(std::move(row));
  }
  return rows;
}

InverseSqrtFit fit_inverse_sqrt(const std::vector<std::size_t>& T, const std::vector<double>& values) {
  if (T.size() != values.size() || T.empty()) throw LqrError(ErrorKind::InvalidArgument, "fit needs paired data");
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < T.size(); ++i) {
    const double x = 1.0 / std::sqrt(static_cast<double>(T[i]));
    sxy += x * values[i];
    sxx += x * x;
  }
  InverseSqrtFit fit;
  fit.c = sxy / sxx;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < T.size(); ++i) {
    const double predicted = fit.c / std::sqrt(static_cast<double>(T[i]));
    ss_res += (values[i] - predicted) * (values[i] - predicted);
    ss_tot += (values[i] - mean) * (values[i] - mean);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

ConcentrationStudy concentration_study(const SystemSpec& spec, const NoiseModel& model, const Matrix& K,
                                       const std::vector<std::size_t>& T_grid, std::size_t trials,
                                       std::uint64_t base_seed, double epsilon_fraction, std::size_t jobs) {
  require_ascending(T_grid);
  if (trials < 2) throw LqrError(ErrorKind::InvalidArgument, "need at least two trials");
  ConcentrationStudy study;
  study.constants = concentration_constants(spec, K, model.bound());

  std::vector<double> costs(T_grid.size() * trials);
  parallel_for(costs.size(), jobs, [&](std::size_t cell) {
    const std::size_t row = cell / trials;
    const std::size_t k = cell % trials;
    const NoiseSequence w = sample_noise(model, Horizon(T_grid[row]), base_seed + k);
    costs[cell] = cost_T(K, spec, w, false).value;
  });

  std::vector<double> stds;
  for (std::size_t r = 0; r < T_grid.size(); ++r) {
    std::vector<double> values(costs.begin() + static_cast<std::ptrdiff_t>(r * trials),
                               costs.begin() + static_cast<std::ptrdiff_t>((r + 1) * trials));
    const MonteCarloSummary summary = summarize(values);
    ConcentrationRow row;
    row.T = T_grid[r];
    row.trials = trials;
    row.mean = summary.mean;
    row.std = summary.std;
    row.epsilon = epsilon_fraction * summary.mean;
    std::size_t hits = 0;
    for (double v : summary.per_trial) {
      if (std::abs(v - summary.mean) >= row.epsilon) ++hits;
    }
    row.deviation_frequency = static_cast<double>(hits) / static_cast<double>(trials);
    row.bound = mcdiarmid_bound(study.constants, row.epsilon, row.T);
    row.binomial_se =
        std::sqrt(row.deviation_frequency * (1.0 - row.deviation_frequency) / static_cast<double>(trials));
    row.within_bound = row.deviation_frequency <= row.bound + 3.0 * row.binomial_se;
    stds.push_back(row.std);
    study.rows.push_back(row);
  }
  const InverseSqrtFit fit = fit_inverse_sqrt(T_grid, stds);
  study.fit_c = fit.c;
  study.fit_r_squared = fit.r_squared;
  return study;
}

OfflineCheckReport offline_equivalence_check(std::size_t instances, std::uint64_t seed, std::size_t jobs) {
  OfflineCheckReport report;
  report.rows.resize(instances);
  parallel_for(instances, jobs, [&](std::size_t i) {
    Rng rng(seed * 0x9E3779B97F4A7C15ULL + i);
    RandomSystemOptions options;
    options.zero_terminal_cost = (i % 2 == 0);
    options.max_closed_loop_radius = 0.999;
    const SystemSpec spec = random_system(rng, options);
    const std::size_t T = 1 + rng.below(30);
    const NoiseModel noise = NoiseModel::uniform_box(spec.n(), 1.0);
    const NoiseSequence w = sample_noise(noise, Horizon(T), rng.below(1ULL << 62));

    auto ric = std::make_shared<const RiccatiSolution>(RiccatiSolution{backward_riccati(spec, Horizon(T)),
                                                                       solve_dare(spec)});
    const Policy policy = make_offline_optimal(spec, ric, w);
    const Trajectory traj = rollout(spec, policy, w);
    const QpSolution qp = solve_qp(assemble(spec, w));
    const std::vector<Vector> u_qp = unstack(qp.u_star, spec.m());

    OfflineCheckRow& row = report.rows[i];
    row.instance = i;
    row.n = spec.n();
    row.m = spec.m();
    row.T = T;
    row.terminal_cost = !options.zero_terminal_cost;
    row.recursive_cost = traj.total;
    row.qp_cost = qp.cost_star;
    row.aux_cost = policy.offline_aux()->q0;
    row.relative_cost_deviation = relative_gap(traj.total, qp.cost_star);
    for (std::size_t t = 0; t < T; ++t) {
      row.max_action_deviation =
          std::max(row.max_action_deviation, (traj.controls[t] - u_qp[t]).cwiseAbs().maxCoeff());
    }
  });
  for (const auto& row : report.rows) {
    report.max_relative_cost_deviation = std::max(report.max_relative_cost_deviation, row.relative_cost_deviation);
    report.max_action_deviation = std::max(report.max_action_deviation, row.max_action_deviation);
  }
  return report;
}

}  // namespace lqr
