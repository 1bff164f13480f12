#include "cli.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "lqr_regret/analysis.hpp"
#include "lqr_regret/errors.hpp"
#include "lqr_regret/linalg.hpp"
#include "lqr_regret/linear_search.hpp"
#include "lqr_regret/model.hpp"
#include "lqr_regret/policies.hpp"
#include "lqr_regret/riccati.hpp"
#include "lqr_regret/sim.hpp"

namespace lqr::cli {
namespace {

constexpr std::array<std::pair<Command, const char*>, 9> kCommands{{
    {Command::Validate, "validate"},
    {Command::Dare, "dare"},
    {Command::Simulate, "simulate"},
    {Command::OfflineCheck, "offline-check"},
    {Command::LinearOpt, "linear-opt"},
    {Command::Costs, "costs"},
    {Command::Regret, "regret"},
    {Command::Converge, "converge"},
    {Command::Concentrate, "concentrate"},
}};

std::string cell(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}
std::string cell(std::size_t v) { return std::to_string(v); }
std::string cell(bool v) { return v ? "1" : "0"; }
std::string cell(const std::string& v) { return v; }
std::string cell(const char* v) { return v; }

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

  template <typename... Ts>
  void add(const Ts&... values) {
    rows_.push_back({cell(values)...});
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw LqrError(ErrorKind::ParseError, path.string() + ": cannot open for writing");
    write_row(file, header_);
    for (const auto& row : rows_) write_row(file, row);
    if (!file) throw LqrError(ErrorKind::ParseError, path.string() + ": write failed");
  }

 private:
  static void write_row(std::ostream& os, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

void maybe_write(const ExperimentConfig& config, const Csv& csv, std::ostream& out) {
  if (!config.out_path) return;
  csv.write(*config.out_path);
  out << "wrote " << config.out_path->string() << '\n';
}

std::string fixed6(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

std::string format_matrix(const Matrix& M) {
  if (M.size() == 1) return fixed6(M(0, 0));
  std::string s = "[";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    s += i ? ", [" : "[";
    for (Eigen::Index j = 0; j < M.cols(); ++j) s += (j ? ", " : "") + fixed6(M(i, j));
    s += "]";
  }
  return s + "]";
}

void add_matrix(Csv& csv, const std::string& name, const Matrix& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      csv.add(name, static_cast<std::size_t>(i), static_cast<std::size_t>(j), M(i, j));
}

ProblemInstance load(const ExperimentConfig& config) {
  if (config.spec_path.empty()) throw LqrError(ErrorKind::InvalidArgument, "--spec is required for this command");
  return load_problem(config.spec_path);
}

ProblemInstance load_valid(const ExperimentConfig& config) {
  ProblemInstance problem = load(config);
  require_valid(problem.system);
  return problem;
}

DareOptions dare_options(const ExperimentConfig& config) {
  DareOptions opts;
  opts.tol = config.tol;
  return opts;
}

LinearSearchOptions linear_options(const ExperimentConfig& config) {
  LinearSearchOptions opts;
  opts.starts = config.starts;
  opts.seed = config.seed;
  return opts;
}

int cmd_validate(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  const ProblemInstance problem = load(config);
  const ValidationReport report = validate_spec(problem.system);
  out << "n=" << problem.system.n() << " m=" << problem.system.m() << '\n';
  out << "min eig Q=" << cell(report.q_min_eig) << " R=" << cell(report.r_min_eig) << " Qf=" << cell(report.qf_min_eig)
      << '\n';
  out << "noise=" << noise_kind_name(problem.noise.kind()) << " bound=" << cell(problem.noise.bound()) << '\n';
  if (!report.passed()) {
    err << error_name(*report.failure) << ": " << report.message << '\n';
    return 2;
  }
  out << "closed-loop spectral radius=" << cell(report.witness_radius) << '\n';
  out << "valid\n";
  return 0;
}

int cmd_dare(const ExperimentConfig& config, std::ostream& out) {
  const ProblemInstance problem = load_valid(config);
  const DareSolution dare = solve_dare(problem.system, dare_options(config));
  out << "P=" << format_matrix(dare.P) << '\n';
  out << "K=" << format_matrix(dare.K) << '\n';
  out << "S=" << format_matrix(dare.S) << '\n';
  out << "residual=" << cell(dare.residual) << '\n';
  out << "spectral radius=" << cell(dare.closed_loop_radius) << '\n';
  out << "iterations=" << dare.iterations << '\n';
  Csv csv({"matrix", "row", "col", "value"});
  add_matrix(csv, "P", dare.P);
  add_matrix(csv, "K", dare.K);
  add_matrix(csv, "S", dare.S);
  maybe_write(config, csv, out);
  return 0;
}

int cmd_simulate(const ExperimentConfig& config, std::ostream& out) {
  const ProblemInstance problem = load_valid(config);
  const SystemSpec& spec = problem.system;
  const Horizon T(config.T.value_or(1000));
  const std::size_t trials = config.trials.value_or(20);
  if (trials == 0) throw LqrError(ErrorKind::InvalidArgument, "--trials must be positive");
  auto ric = std::make_shared<const RiccatiSolution>(solve_riccati(spec, T, dare_options(config)));
  const LinearSearchOptions linear = linear_options(config);

  PolicyFactory factory;
  if (config.policy == "online") {
    factory = [&](const NoiseSequence&, std::uint64_t) { return make_online(spec, ric, true); };
  } else if (config.policy == "online-tv") {
    factory = [&](const NoiseSequence&, std::uint64_t) { return make_online(spec, ric, false); };
  } else if (config.policy == "offline") {
    factory = [&](const NoiseSequence& w, std::uint64_t) { return make_offline_optimal(spec, ric, w); };
  } else if (config.policy == "linear") {
    factory = [&](const NoiseSequence& w, std::uint64_t seed) {
      LinearSearchOptions opts = linear;
      opts.seed = seed;
      return make_constant_linear(spec, optimize(spec, ric->steady, w, opts).K_star);
    };
  } else {
    throw LqrError(ErrorKind::InvalidArgument, "unknown policy '" + config.policy + "'");
  }

  MonteCarloSummary summary;
  if (trials == 1) {
    const NoiseSequence w = sample_noise(problem.noise, T, config.seed);
    summary = summarize({rollout(spec, factory(w, config.seed), w).time_averaged});
  } else {
    summary = monte_carlo(spec, factory, problem.noise, T, trials, config.seed, config.jobs);
  }
  out << "policy=" << config.policy << " T=" << T.steps() << " trials=" << trials << '\n';
  out << "mean=" << cell(summary.mean) << " std=" << cell(summary.std) << " ci95=" << cell(summary.ci95_halfwidth)
      << '\n';
  Csv csv({"trial", "seed", "cost"});
  for (std::size_t k = 0; k < summary.per_trial.size(); ++k)
    csv.add(k, static_cast<std::size_t>(config.seed + k), summary.per_trial[k]);
  maybe_write(config, csv, out);
  return 0;
}

int cmd_offline_check(const ExperimentConfig& config, std::ostream& out) {
  const OfflineCheckReport report = offline_equivalence_check(config.instances, config.seed, config.jobs);
  const bool cost_ok = report.max_relative_cost_deviation <= 1e-8;
  const bool action_ok = report.max_action_deviation <= 1e-7;
  out << "instances=" << report.rows.size() << '\n';
  out << "max relative cost deviation = " << cell(report.max_relative_cost_deviation) << (cost_ok ? " <= " : " > ")
      << "1e-08\n";
  out << "max action deviation = " << cell(report.max_action_deviation) << (action_ok ? " <= " : " > ") << "1e-07\n";
  Csv csv({"instance", "n", "m", "T", "terminal_cost", "recursive_cost", "qp_cost", "aux_cost",
           "relative_cost_deviation", "max_action_deviation"});
  for (const auto& row : report.rows)
    csv.add(row.instance, static_cast<std::size_t>(row.n), static_cast<std::size_t>(row.m), row.T, row.terminal_cost,
            row.recursive_cost, row.qp_cost, row.aux_cost, row.relative_cost_deviation, row.max_action_deviation);
  maybe_write(config, csv, out);
  return cost_ok && action_ok ? 0 : 3;
}

int cmd_linear_opt(const ExperimentConfig& config, std::ostream& out) {
  const ProblemInstance problem = load_valid(config);
  const SystemSpec& spec = problem.system;
  const Horizon T(config.T.value_or(1000));
  const DareSolution dare = solve_dare(spec, dare_options(config));
  const NoiseSequence w = sample_noise(problem.noise, T, config.seed);
  const LinearSearchResult r = optimize(spec, dare, w, linear_options(config));
  out << "K*=" << format_matrix(r.K_star) << '\n';
  out << "cost=" << cell(r.cost) << " dare gain cost=" << cell(r.dare_gain_cost)
      << " Tr(PW)=" << cell((dare.P * problem.noise.covariance()).trace()) << '\n';
  out << "best start=" << r.best_start << " grad norm=" << cell(r.grad_norm_at_opt)
      << " spectral radius=" << cell(r.spectral_radius) << " converged=" << (r.converged ? "yes" : "no") << '\n';
  Csv csv({"start", "initial_cost", "final_cost"});
  for (std::size_t s = 0; s < r.starts; ++s) csv.add(s, r.per_start_initial_costs[s], r.per_start_costs[s]);
  maybe_write(config, csv, out);
  return 0;
}

int cmd_costs(const ExperimentConfig& config, std::ostream& out) {
  const ProblemInstance problem = load_valid(config);
  const CostFormulas f = closed_form_costs(problem.system, problem.noise, dare_options(config));
  const std::vector<std::pair<std::string, double>> items{
      {"online_cost", f.online_cost},
      {"trace_WS", f.trace_WS},
      {"series_correction", f.series_correction},
      {"offline_cost", f.offline_cost},
      {"series_truncated", f.series_truncated},
      {"series_terms", static_cast<double>(f.series_terms)},
      {"swapped_series", f.swapped_series},
      {"swapped_series_gap", f.swapped_series_gap},
      {"V_residual", f.V_residual},
      {"dare_residual", f.dare.residual},
  };
  Csv csv({"quantity", "value"});
  for (const auto& [name, value] : items) {
    out << name << '=' << cell(value) << '\n';
    csv.add(name, value);
  }
  if (!f.series_agrees) out << "warning: truncated series disagrees with the Lyapunov solution\n";
  maybe_write(config, csv, out);
  return 0;
}

int cmd_regret(const ExperimentConfig& config, std::ostream& out) {
  const ProblemInstance problem = load_valid(config);
  const std::size_t T = config.T.value_or(10000);
  StudyOptions study;
  study.trials = config.trials.value_or(20);
  study.base_seed = config.seed;
  study.jobs = config.jobs;
  study.linear = linear_options(config);
  const ConvergenceRow row = convergence_study(problem.system, problem.noise, {T}, study).front();
  const RegretReport report = regret_report(problem.system, problem.noise, EmpiricalCosts{row.online, row.linear, row.offline});

  Csv csv({"comparison", "asymptotic", "empirical_mean", "combined_ci", "agrees"});
  auto emit = [&](const char* name, double asymptotic, const std::optional<EmpiricalRegret>& emp) {
    out << name << ": asymptotic=" << cell(asymptotic);
    if (emp) out << " empirical=" << cell(emp->mean) << " ci=" << cell(emp->combined_ci) << (emp->agrees ? "" : " (disagrees)");
    out << '\n';
    csv.add(name, asymptotic, emp ? emp->mean : 0.0, emp ? emp->combined_ci : 0.0, emp ? emp->agrees : false);
  };
  out << "T=" << T << " trials=" << study.trials << '\n';
  emit("online_vs_offline", report.online_vs_offline, report.empirical_online_vs_offline);
  emit("linear_vs_offline", report.linear_vs_offline, report.empirical_linear_vs_offline);
  emit("online_vs_linear", report.online_vs_linear, report.empirical_online_vs_linear);
  if (row.sandwich_violations) out << "sandwich violations=" << row.sandwich_violations << '\n';
  maybe_write(config, csv, out);
  return row.sandwich_violations ? 3 : 0;
}

std::vector<std::size_t> grid_or(const ExperimentConfig& config, std::vector<std::size_t> fallback) {
  if (!config.T_grid.empty()) return config.T_grid;
  if (config.T) return {*config.T};
  return fallback;
}

int cmd_converge(const ExperimentConfig& config, std::ostream& out) {
  const ProblemInstance problem = load_valid(config);
  StudyOptions study;
  study.trials = config.trials.value_or(20);
  study.base_seed = config.seed;
  study.jobs = config.jobs;
  study.linear = linear_options(config);
  const auto rows = convergence_study(problem.system, problem.noise, grid_or(config, {250, 1000, 4000, 16000}), study);
  Csv csv({"T", "cost_online_emp", "ci_online", "cost_linear_emp", "ci_linear", "cost_offline_emp", "ci_offline",
           "cost_online_formula", "cost_offline_formula", "linear_gap", "sandwich_violations"});
  std::size_t violations = 0;
  for (const auto& row : rows) {
    out << "T=" << row.T << " online=" << cell(row.online.mean) << " linear=" << cell(row.linear.mean)
        << " offline=" << cell(row.offline.mean) << " linear gap=" << cell(row.linear_abs_gap) << '\n';
    csv.add(row.T, row.online.mean, row.online.ci95_halfwidth, row.linear.mean, row.linear.ci95_halfwidth,
            row.offline.mean, row.offline.ci95_halfwidth, row.online_formula, row.offline_formula, row.linear_abs_gap,
            row.sandwich_violations);
    violations += row.sandwich_violations;
  }
  out << "sandwich violations=" << violations << '\n';
  maybe_write(config, csv, out);
  return violations ? 3 : 0;
}

int cmd_concentrate(const ExperimentConfig& config, std::ostream& out) {
  const ProblemInstance problem = load_valid(config);
  const DareSolution dare = solve_dare(problem.system, dare_options(config));
  const ConcentrationStudy study =
      concentration_study(problem.system, problem.noise, dare.K, grid_or(config, {100, 1000, 10000}),
                          config.trials.value_or(500), config.seed, 0.05, config.jobs);
  const auto& c = study.constants;
  out << "kappa=" << cell(c.witness.condition) << " gamma=" << cell(c.witness.gamma) << " B=" << cell(c.noise_bound)
      << " sigma_max=" << cell(c.sigma_max) << '\n';
  Csv csv({"T", "trials", "mean", "std", "epsilon", "deviation_frequency", "mcdiarmid_bound", "binomial_se",
           "within_bound"});
  for (const auto& row : study.rows) {
    out << "T=" << row.T << " mean=" << cell(row.mean) << " std=" << cell(row.std)
        << " frequency=" << cell(row.deviation_frequency) << " bound=" << cell(row.bound) << '\n';
    csv.add(row.T, row.trials, row.mean, row.std, row.epsilon, row.deviation_frequency, row.bound, row.binomial_se,
            row.within_bound);
  }
  out << "std fit c/sqrt(T): c=" << cell(study.fit_c) << " R^2=" << cell(study.fit_r_squared) << '\n';
  maybe_write(config, csv, out);
  return 0;
}

}  // namespace

std::optional<Command> parse_command(const std::string& name) {
  for (const auto& [command, text] : kCommands)
    if (name == text) return command;
  return std::nullopt;
}

std::string command_name(Command command) {
  for (const auto& [c, text] : kCommands)
    if (c == command) return text;
  return "?";
}

int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  try {
    switch (config.command) {
      case Command::Validate: return cmd_validate(config, out, err);
      case Command::Dare: return cmd_dare(config, out);
      case Command::Simulate: return cmd_simulate(config, out);
      case Command::OfflineCheck: return cmd_offline_check(config, out);
      case Command::LinearOpt: return cmd_linear_opt(config, out);
      case Command::Costs: return cmd_costs(config, out);
      case Command::Regret: return cmd_regret(config, out);
      case Command::Converge: return cmd_converge(config, out);
      case Command::Concentrate: return cmd_concentrate(config, out);
    }
  } catch (const LqrError& e) {
    err << e.what() << '\n';
    return is_validation_error(e.kind()) ? 2 : 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 3;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LQR regret experiments"};
  app.name(args.empty() ? "lqr_regret_cli" : args.front());
  ExperimentConfig config;
  std::string command;
  std::string spec, out_path;
  std::size_t T = 0, trials = 0;

  std::vector<std::string> names;
  for (const auto& entry : kCommands) names.emplace_back(entry.second);
  app.add_option("command", command, "Experiment to run")->required()->check(CLI::IsMember(names));
  app.add_option("--spec", spec, "JSON problem file");
  app.add_option("--out", out_path, "CSV output file");
  auto* t_opt = app.add_option("--T", T, "Horizon")->check(CLI::PositiveNumber);
  auto* trials_opt = app.add_option("--trials", trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  app.add_option("--seed", config.seed, "Base seed")->capture_default_str();
  app.add_option("--starts", config.starts, "Linear search starts")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--jobs", config.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--tol", config.tol, "DARE tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--instances", config.instances, "offline-check instances")->capture_default_str();
  app.add_option("--T-grid", config.T_grid, "Comma-separated horizons")->delimiter(',');
  app.add_option("--policy", config.policy, "simulate policy")
      ->check(CLI::IsMember({"online", "online-tv", "offline", "linear"}))
      ->capture_default_str();

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  for (std::size_t v : config.T_grid) {
    if (v == 0) {
      err << "InvalidArgument: --T-grid entries must be positive\n";
      return 2;
    }
  }

  config.command = *parse_command(command);
  config.spec_path = spec;
  if (!out_path.empty()) config.out_path = out_path;
  if (t_opt->count()) config.T = T;
  if (trials_opt->count()) config.trials = trials;
  return run(config, out, err);
}

}  // namespace lqr::cli
