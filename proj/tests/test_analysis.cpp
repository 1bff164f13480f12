#include <doctest.h>

#include "lqr_regret/analysis.hpp"
#include "lqr_regret/errors.hpp"
#include "lqr_regret/linalg.hpp"
#include "test_support.hpp"

using namespace lqr;
using lqr::testing::rel;
using lqr::testing::scalar;
using lqr::testing::scalar_spec;

TEST_SUITE("analysis") {

TEST_CASE("A = 0: online pays Tr(QW), offline cancels part of each draw") {
  const SystemSpec spec(Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2) * 2.0,
                        Matrix::Identity(2, 2));
  const Matrix W = Matrix::Identity(2, 2) * 0.5;
  const CostFormulas f = closed_form_costs(spec, W);
  CHECK(f.online_cost == doctest::Approx(2.0));
  // Per coordinate min_u 2(u + w)² + u² = (2/3)w².
  CHECK(f.offline_cost == doctest::Approx(2.0 / 3.0));
  CHECK(f.series_correction == doctest::Approx(f.trace_WS - 2.0 / 3.0));
}

TEST_CASE("uncontrollable input makes offline and online agree") {
  const CostFormulas f = closed_form_costs(scalar_spec(0.9, 0.0, 1.0, 1.0), scalar(1.0));
  CHECK(f.online_cost == doctest::Approx(5.263158).epsilon(1e-6));
  CHECK(f.offline_cost == doctest::Approx(5.263158).epsilon(1e-6));
  const RegretReport r = regret_report(scalar_spec(0.9, 0.0, 1.0, 1.0), NoiseModel::uniform_box(1, std::sqrt(3.0)));
  CHECK(r.online_vs_offline == doctest::Approx(0.0));
  CHECK(r.linear_vs_offline == doctest::Approx(0.0));
  CHECK(r.online_vs_linear == 0.0);
}

TEST_CASE("scalar benchmark values") {
  const CostFormulas f = closed_form_costs(lqr::testing::benchmark_spec(), lqr::testing::benchmark_noise());
  CHECK(f.online_cost == doctest::Approx(1.132782).epsilon(1e-6));
  CHECK(f.trace_WS == doctest::Approx(0.531129).epsilon(1e-6));
  CHECK(f.offline_cost == doctest::Approx(0.496139).epsilon(1e-6));
  CHECK(rel(f.offline_cost, lqr::testing::scalar_offline_cost(0.5, 1, 1, 1, 1)) <= 1e-10);
  CHECK(f.series_agrees);
  CHECK(f.swapped_series_gap <= 1e-12);

  const RegretReport r = regret_report(lqr::testing::benchmark_spec(), lqr::testing::benchmark_noise());
  CHECK(r.online_vs_offline == doctest::Approx(0.636643).epsilon(1e-6));
  CHECK(r.linear_vs_offline == doctest::Approx(0.636643).epsilon(1e-6));
  CHECK(r.online_vs_linear == 0.0);
  CHECK(r.online_vs_offline == doctest::Approx(f.online_cost - f.offline_cost));
}

TEST_CASE("scalar offline cost over a grid of parameters") {
  for (double a : {-1.5, -0.3, 0.0, 0.7, 1.2}) {
    for (double b : {0.5, 1.0, 2.0}) {
      for (double r : {0.1, 1.0, 10.0}) {
        const CostFormulas f = closed_form_costs(scalar_spec(a, b, 1.0, r), scalar(2.0));
        CHECK(rel(f.online_cost, 2.0 * lqr::testing::scalar_dare(a, b, 1.0, r)) <= 1e-9);
        CHECK(rel(f.offline_cost, lqr::testing::scalar_offline_cost(a, b, 1.0, r, 2.0)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("series matches the Lyapunov solution on random systems") {
  Rng rng(101);
  std::size_t normal_gap = 0;
  for (int i = 0; i < 100; ++i) {
    const SystemSpec spec = random_system(rng);
    Matrix L = Matrix::Random(spec.n(), spec.n());
    Rng local(static_cast<std::uint64_t>(i));
    for (Eigen::Index r = 0; r < L.rows(); ++r)
      for (Eigen::Index c = 0; c < L.cols(); ++c) L(r, c) = local.normal();
    const Matrix W = L * L.transpose() + 0.1 * Matrix::Identity(spec.n(), spec.n());
    const CostFormulas f = closed_form_costs(spec, W);
    CHECK(f.series_agrees);
    CHECK(f.V_residual <= 1e-9 * std::max(1.0, f.V.norm()));

    // Independent series from the DARE products.
    const Matrix& P = f.dare.P;
    const Matrix& S = f.dare.S;
    const Matrix F = spec.A() - spec.B() * f.dare.K;
    const Matrix G = spec.R() + spec.B().transpose() * P * spec.B();
    const Matrix BGB = spec.B() * G.inverse() * spec.B().transpose();
    const Matrix V = lqr::testing::lyapunov_series(F, 4.0 * spec.A().transpose() * S * W * S * spec.A(), 4000);
    CHECK(rel(f.series_correction, 0.25 * (BGB * V).trace()) <= 1e-8);
    CHECK(f.offline_cost <= f.online_cost + 1e-12);
    CHECK(f.offline_cost >= -1e-12);
    CHECK(rel(f.online_cost, (P * W).trace()) <= 1e-12);
    if (spec.n() > 1 && f.swapped_series_gap > 1e-9 * f.series_correction) ++normal_gap;

    // (A − BK)ᵀ = AᵀS·P⁻¹ when P is invertible.
    if (linalg::min_symmetric_eigenvalue(P) > 1e-6) {
      CHECK((F.transpose() - spec.A().transpose() * S * P.inverse()).norm() <= 1e-8 * std::max(1.0, F.norm()));
    }
  }
  MESSAGE("random systems where the transposed series differs: " << normal_gap);
}

TEST_CASE("costs are monotone in the noise scale and state weight") {
  Rng rng(7);
  const SystemSpec spec = random_system(rng);
  const Matrix W = Matrix::Identity(spec.n(), spec.n());
  const CostFormulas base = closed_form_costs(spec, W);
  const CostFormulas scaled = closed_form_costs(spec, 2.0 * W);
  CHECK(rel(scaled.online_cost, 2.0 * base.online_cost) <= 1e-10);
  CHECK(rel(scaled.offline_cost, 2.0 * base.offline_cost) <= 1e-10);
  const SystemSpec heavier(spec.A(), spec.B(), 2.0 * spec.Q(), spec.R());
  CHECK(closed_form_costs(heavier, W).online_cost >= base.online_cost);
}

TEST_CASE("convergence study on zero noise") {
  const SystemSpec spec = lqr::testing::benchmark_spec();
  const NoiseModel zero = NoiseModel::empirical({Vector::Zero(1)});
  StudyOptions opts;
  opts.trials = 2;
  const auto rows = convergence_study(spec, zero, {5, 10}, opts);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.online.mean == 0.0);
    CHECK(row.offline.mean == 0.0);
    CHECK(row.linear.mean == 0.0);
    CHECK(row.online_formula == 0.0);
    CHECK(row.sandwich_violations == 0);
  }
}

TEST_CASE("convergence study orders the three policies") {
  StudyOptions opts;
  opts.trials = 4;
  opts.jobs = 4;
  const auto rows = convergence_study(lqr::testing::benchmark_spec(), lqr::testing::benchmark_noise(), {200, 800}, opts);
  for (const auto& row : rows) {
    CHECK(row.sandwich_violations == 0);
    CHECK(row.offline.mean <= row.linear.mean);
    CHECK(row.linear.mean <= row.online.mean + 1e-12);
    CHECK(row.online_formula == doctest::Approx(1.132782).epsilon(1e-6));
    CHECK(row.offline_formula == doctest::Approx(0.496139).epsilon(1e-6));
  }
  CHECK_THROWS_AS(convergence_study(lqr::testing::benchmark_spec(), lqr::testing::benchmark_noise(), {10},
                                    StudyOptions{.trials = 0}),
                  LqrError);
}

TEST_CASE("inverse square root fit") {
  const std::vector<std::size_t> T{100, 400, 1600};
  const InverseSqrtFit exact = fit_inverse_sqrt(T, {0.3, 0.15, 0.075});
  CHECK(exact.c == doctest::Approx(3.0));
  CHECK(exact.r_squared == doctest::Approx(1.0));
  const InverseSqrtFit flat = fit_inverse_sqrt(T, {1.0, 1.0, 1.0});
  CHECK(flat.r_squared < 0.9);
}

TEST_CASE("concentration study shrinks with the horizon") {
  const SystemSpec spec = lqr::testing::benchmark_spec();
  const Matrix K = solve_dare(spec).K;
  const ConcentrationStudy study =
      concentration_study(spec, lqr::testing::benchmark_noise(), K, {100, 1000}, 60, 0, 0.05, 4);
  REQUIRE(study.rows.size() == 2);
  CHECK(study.rows[1].std < study.rows[0].std);
  for (const auto& row : study.rows) {
    CHECK(row.mean == doctest::Approx(1.132782).epsilon(0.1));
    CHECK(row.within_bound);
    CHECK(row.bound >= 0.0);
  }
  CHECK_THROWS_AS(concentration_study(spec, lqr::testing::benchmark_noise(), K, {100}, 1, 0), LqrError);
}

TEST_CASE("offline equivalence check on a few instances") {
  const OfflineCheckReport report = offline_equivalence_check(20, 3, 2);
  REQUIRE(report.rows.size() == 20);
  CHECK(report.max_relative_cost_deviation <= 1e-8);
  CHECK(report.max_action_deviation <= 1e-7);
  for (const auto& row : report.rows) {
    CHECK(rel(row.aux_cost, row.recursive_cost) <= 1e-8);
    CHECK(row.terminal_cost == (row.instance % 2 == 1));
  }
}

TEST_CASE("evaluate_policies rejects a terminal cost") {
  const SystemSpec spec = scalar_spec(0.5, 1, 1, 1, 1.0);
  auto ric = std::make_shared<const RiccatiSolution>(solve_riccati(spec, Horizon(5)));
  CHECK_THROWS_AS(evaluate_policies(spec, ric, NoiseSequence(5, Vector::Ones(1)), {}), LqrError);
}

}  // TEST_SUITE
