#include <memory>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lqr_regret/analysis.hpp"
#include "lqr_regret/errors.hpp"
#include "lqr_regret/linear_search.hpp"
#include "lqr_regret/model.hpp"
#include "lqr_regret/offline_oracle.hpp"
#include "lqr_regret/policies.hpp"
#include "lqr_regret/riccati.hpp"
#include "lqr_regret/sim.hpp"

namespace py = pybind11;
using namespace lqr;

namespace {

MonteCarloSummary simulate(const SystemSpec& spec, const NoiseModel& noise, std::size_t T, std::size_t trials,
                           const std::string& policy, std::uint64_t seed, std::size_t jobs, std::size_t starts) {
  const Horizon horizon(T);
  auto ric = std::make_shared<const RiccatiSolution>(solve_riccati(spec, horizon));
  PolicyFactory factory;
  if (policy == "online") {
    factory = [&](const NoiseSequence&, std::uint64_t) { return make_online(spec, ric, true); };
  } else if (policy == "online-tv") {
    factory = [&](const NoiseSequence&, std::uint64_t) { return make_online(spec, ric, false); };
  } else if (policy == "offline") {
    factory = [&](const NoiseSequence& w, std::uint64_t) { return make_offline_optimal(spec, ric, w); };
  } else if (policy == "linear") {
    factory = [&](const NoiseSequence& w, std::uint64_t s) {
      LinearSearchOptions opts;
      opts.starts = starts;
      opts.seed = s;
      return make_constant_linear(spec, optimize(spec, ric->steady, w, opts).K_star);
    };
  } else {
    throw LqrError(ErrorKind::InvalidArgument, "unknown policy '" + policy + "'");
  }
  py::gil_scoped_release release;
  return monte_carlo(spec, factory, noise, horizon, trials, seed, jobs);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Regret of online, offline and linear LQR controllers";

  py::register_exception<LqrError>(m, "LqrError", PyExc_RuntimeError);

  py::class_<DareOptions>(m, "DareOptions")
      .def(py::init<>())
      .def_readwrite("tol", &DareOptions::tol)
      .def_readwrite("max_iter", &DareOptions::max_iter);

  py::class_<SystemSpec>(m, "SystemSpec")
      .def(py::init<Matrix, Matrix, Matrix, Matrix, std::optional<Matrix>>(), py::arg("A"), py::arg("B"),
           py::arg("Q"), py::arg("R"), py::arg("Qf") = std::nullopt)
      .def_property_readonly("A", &SystemSpec::A)
      .def_property_readonly("B", &SystemSpec::B)
      .def_property_readonly("Q", &SystemSpec::Q)
      .def_property_readonly("R", &SystemSpec::R)
      .def_property_readonly("Qf", &SystemSpec::Qf)
      .def_property_readonly("n", &SystemSpec::n)
      .def_property_readonly("m", &SystemSpec::m)
      .def("with_terminal_cost", &SystemSpec::with_terminal_cost);

  py::class_<NoiseModel>(m, "NoiseModel")
      .def_static("uniform_box", &NoiseModel::uniform_box, py::arg("dim"), py::arg("half_width"))
      .def_static("scaled_rademacher", &NoiseModel::scaled_rademacher, py::arg("dim"), py::arg("scale"))
      .def_static("truncated_gaussian", &NoiseModel::truncated_gaussian, py::arg("dim"), py::arg("radius"),
                  py::arg("sigmas"))
      .def_static("empirical", &NoiseModel::empirical, py::arg("atoms"))
      .def_property_readonly("kind", [](const NoiseModel& n) { return std::string(noise_kind_name(n.kind())); })
      .def_property_readonly("dim", &NoiseModel::dim)
      .def_property_readonly("bound", &NoiseModel::bound)
      .def_property_readonly("covariance", &NoiseModel::covariance);

  m.def("sample_noise", [](const NoiseModel& model, std::size_t T, std::uint64_t seed) {
    return sample_noise(model, Horizon(T), seed);
  }, py::arg("model"), py::arg("T"), py::arg("seed"));

  m.def("load_problem", [](const std::filesystem::path& path) {
    ProblemInstance p = load_problem(path);
    return py::make_tuple(p.system, p.noise);
  }, py::arg("path"), "Returns (SystemSpec, NoiseModel).");

  m.def("validate", [](const SystemSpec& spec) {
    const ValidationReport r = validate_spec(spec);
    py::dict d;
    d["passed"] = r.passed();
    d["failure"] = r.failure ? py::cast(std::string(error_name(*r.failure))) : py::none();
    d["message"] = r.message;
    d["stabilizable"] = r.stabilizable;
    d["closed_loop_radius"] = r.witness_radius;
    return d;
  }, py::arg("spec"));

  py::class_<DareSolution>(m, "DareSolution")
      .def_readonly("P", &DareSolution::P)
      .def_readonly("K", &DareSolution::K)
      .def_readonly("S", &DareSolution::S)
      .def_readonly("residual", &DareSolution::residual)
      .def_readonly("closed_loop_radius", &DareSolution::closed_loop_radius)
      .def_readonly("iterations", &DareSolution::iterations);

  m.def("solve_dare", [](const SystemSpec& spec, double tol, std::size_t max_iter) {
    return solve_dare(spec, DareOptions{tol, max_iter});
  }, py::arg("spec"), py::arg("tol") = 1e-12, py::arg("max_iter") = 100000);
  m.def("solve_dlyap", [](const Matrix& F, const Matrix& G) { return solve_dlyap(F, G); }, py::arg("F"),
        py::arg("G"), "Solves V = G + FᵀVF.");

  py::class_<CostFormulas>(m, "CostFormulas")
      .def_readonly("dare", &CostFormulas::dare)
      .def_readonly("online_cost", &CostFormulas::online_cost)
      .def_readonly("trace_WS", &CostFormulas::trace_WS)
      .def_readonly("V", &CostFormulas::V)
      .def_readonly("series_correction", &CostFormulas::series_correction)
      .def_readonly("offline_cost", &CostFormulas::offline_cost)
      .def_readonly("series_truncated", &CostFormulas::series_truncated)
      .def_readonly("series_agrees", &CostFormulas::series_agrees)
      .def_readonly("swapped_series", &CostFormulas::swapped_series);

  m.def("closed_form_costs", py::overload_cast<const SystemSpec&, const NoiseModel&, const DareOptions&>(
                                 &closed_form_costs),
        py::arg("spec"), py::arg("noise"), py::arg("options") = DareOptions{});
  m.def("closed_form_costs_W", py::overload_cast<const SystemSpec&, const Matrix&, const DareOptions&>(
                                   &closed_form_costs),
        py::arg("spec"), py::arg("W"), py::arg("options") = DareOptions{});

  py::class_<RegretReport>(m, "RegretReport")
      .def_readonly("formulas", &RegretReport::formulas)
      .def_readonly("online_vs_offline", &RegretReport::online_vs_offline)
      .def_readonly("linear_vs_offline", &RegretReport::linear_vs_offline)
      .def_readonly("online_vs_linear", &RegretReport::online_vs_linear);
  m.def("regret_report", [](const SystemSpec& spec, const NoiseModel& noise) { return regret_report(spec, noise); },
        py::arg("spec"), py::arg("noise"));

  m.def("cost_T", [](const Matrix& K, const SystemSpec& spec, const NoiseSequence& w) {
    const CostTEval e = cost_T(K, spec, w, true);
    return py::make_tuple(e.value, e.gradient ? py::cast(*e.gradient) : py::none());
  }, py::arg("K"), py::arg("spec"), py::arg("w"), "Returns (cost, gradient).");

  py::class_<LinearSearchResult>(m, "LinearSearchResult")
      .def_readonly("K_star", &LinearSearchResult::K_star)
      .def_readonly("cost", &LinearSearchResult::cost)
      .def_readonly("best_start", &LinearSearchResult::best_start)
      .def_readonly("per_start_costs", &LinearSearchResult::per_start_costs)
      .def_readonly("grad_norm_at_opt", &LinearSearchResult::grad_norm_at_opt)
      .def_readonly("spectral_radius", &LinearSearchResult::spectral_radius)
      .def_readonly("converged", &LinearSearchResult::converged)
      .def_readonly("dare_gain_cost", &LinearSearchResult::dare_gain_cost);
  m.def("optimize_linear", [](const SystemSpec& spec, const NoiseSequence& w, std::size_t starts, std::uint64_t seed) {
    LinearSearchOptions opts;
    opts.starts = starts;
    opts.seed = seed;
    return optimize(spec, w, opts);
  }, py::arg("spec"), py::arg("w"), py::arg("starts") = 4, py::arg("seed") = 0);

  m.def("offline_qp", [](const SystemSpec& spec, const NoiseSequence& w) {
    const QpSolution s = solve_qp(assemble(spec, w));
    return py::make_tuple(unstack(s.u_star, spec.m()), s.cost_star);
  }, py::arg("spec"), py::arg("w"), "Stacked-QP optimum as (controls, cost).");

  py::class_<MonteCarloSummary>(m, "MonteCarloSummary")
      .def_readonly("trials", &MonteCarloSummary::trials)
      .def_readonly("mean", &MonteCarloSummary::mean)
      .def_readonly("std", &MonteCarloSummary::std)
      .def_readonly("ci95_halfwidth", &MonteCarloSummary::ci95_halfwidth)
      .def_readonly("per_trial", &MonteCarloSummary::per_trial);
  m.def("simulate", &simulate, py::arg("spec"), py::arg("noise"), py::arg("T"), py::arg("trials"),
        py::arg("policy") = "online", py::arg("seed") = 0, py::arg("jobs") = 1, py::arg("starts") = 4);

  m.def("offline_check", [](std::size_t instances, std::uint64_t seed, std::size_t jobs) {
    OfflineCheckReport r;
    {
      py::gil_scoped_release release;
      r = offline_equivalence_check(instances, seed, jobs);
    }
    return py::make_tuple(r.max_relative_cost_deviation, r.max_action_deviation);
  }, py::arg("instances") = 200, py::arg("seed") = 0, py::arg("jobs") = 1,
        "Returns (max relative cost deviation, max action deviation).");

  py::class_<ConvergenceRow>(m, "ConvergenceRow")
      .def_readonly("T", &ConvergenceRow::T)
      .def_readonly("online", &ConvergenceRow::online)
      .def_readonly("linear", &ConvergenceRow::linear)
      .def_readonly("offline", &ConvergenceRow::offline)
      .def_readonly("online_formula", &ConvergenceRow::online_formula)
      .def_readonly("offline_formula", &ConvergenceRow::offline_formula)
      .def_readonly("linear_abs_gap", &ConvergenceRow::linear_abs_gap)
      .def_readonly("sandwich_violations", &ConvergenceRow::sandwich_violations);
  m.def("convergence_study", [](const SystemSpec& spec, const NoiseModel& noise, const std::vector<std::size_t>& grid,
                                std::size_t trials, std::uint64_t seed, std::size_t jobs) {
    StudyOptions opts;
    opts.trials = trials;
    opts.base_seed = seed;
    opts.jobs = jobs;
    py::gil_scoped_release release;
    return convergence_study(spec, noise, grid, opts);
  }, py::arg("spec"), py::arg("noise"), py::arg("T_grid"), py::arg("trials") = 20, py::arg("seed") = 0,
        py::arg("jobs") = 1);

  py::class_<ConcentrationRow>(m, "ConcentrationRow")
      .def_readonly("T", &ConcentrationRow::T)
      .def_readonly("mean", &ConcentrationRow::mean)
      .def_readonly("std", &ConcentrationRow::std)
      .def_readonly("epsilon", &ConcentrationRow::epsilon)
      .def_readonly("deviation_frequency", &ConcentrationRow::deviation_frequency)
      .def_readonly("bound", &ConcentrationRow::bound)
      .def_readonly("within_bound", &ConcentrationRow::within_bound);
  py::class_<ConcentrationStudy>(m, "ConcentrationStudy")
      .def_readonly("rows", &ConcentrationStudy::rows)
      .def_readonly("fit_c", &ConcentrationStudy::fit_c)
      .def_readonly("fit_r_squared", &ConcentrationStudy::fit_r_squared);
  m.def("concentration_study", [](const SystemSpec& spec, const NoiseModel& noise, const Matrix& K,
                                  const std::vector<std::size_t>& grid, std::size_t trials, std::uint64_t seed,
                                  double eps_frac, std::size_t jobs) {
    py::gil_scoped_release release;
    return concentration_study(spec, noise, K, grid, trials, seed, eps_frac, jobs);
  }, py::arg("spec"), py::arg("noise"), py::arg("K"), py::arg("T_grid"), py::arg("trials") = 500,
        py::arg("seed") = 0, py::arg("epsilon_fraction") = 0.05, py::arg("jobs") = 1);
}
