#include <doctest.h>

#include "lqr_regret/errors.hpp"
#include "lqr_regret/linalg.hpp"
#include "lqr_regret/riccati.hpp"
#include "test_support.hpp"

using namespace lqr;
using lqr::testing::scalar;
using lqr::testing::scalar_spec;

TEST_SUITE("riccati") {

TEST_CASE("one-step horizon with zero terminal cost") {
  const FiniteHorizonRiccati ric = backward_riccati(scalar_spec(0.5, 1, 1, 1), Horizon(1));
  REQUIRE(ric.P.size() == 2);
  CHECK(ric.P[1](0, 0) == 0.0);
  CHECK(ric.K[0](0, 0) == 0.0);
  CHECK(ric.P[0](0, 0) == doctest::Approx(1.0));
}

TEST_CASE("long horizon converges to the scalar ARE root") {
  const double p = lqr::testing::scalar_dare(0.5, 1, 1, 1);
  CHECK(p == doctest::Approx(1.132782).epsilon(1e-6));
  const FiniteHorizonRiccati ric = backward_riccati(scalar_spec(0.5, 1, 1, 1), Horizon(200));
  CHECK(ric.P[0](0, 0) == doctest::Approx(p).epsilon(1e-12));
}

TEST_CASE("uncontrolled stable system sums the Lyapunov series") {
  const FiniteHorizonRiccati ric = backward_riccati(scalar_spec(0.9, 0, 1, 1), Horizon(2000));
  double series = 0.0;
  for (int k = 0; k < 2000; ++k) series += std::pow(0.81, k);
  CHECK(ric.P[0](0, 0) == doctest::Approx(series).epsilon(1e-12));
  CHECK(ric.P[0](0, 0) == doctest::Approx(5.263158).epsilon(1e-6));
}

TEST_CASE("finite-horizon identities hold at every step") {
  Rng rng(3);
  const SystemSpec spec = random_system(rng, RandomSystemOptions{2, 4, 1, 3});
  const FiniteHorizonRiccati ric = backward_riccati(spec, Horizon(25));
  const Matrix& A = spec.A();
  const Matrix& B = spec.B();
  for (std::size_t t = 0; t < 25; ++t) {
    const Matrix& Pn = ric.P[t + 1];
    const Matrix G = spec.R() + B.transpose() * Pn * B;
    const Matrix Ginv = G.inverse();
    const Matrix P = spec.Q() + A.transpose() * Pn * A - A.transpose() * Pn * B * Ginv * B.transpose() * Pn * A;
    CHECK((ric.P[t] - P).norm() <= 1e-10 * std::max(1.0, P.norm()));
    CHECK((ric.K[t] - Ginv * B.transpose() * Pn * A).norm() <= 1e-10 * std::max(1.0, ric.K[t].norm()));
    CHECK((ric.S[t] - (Pn - Pn * B * Ginv * B.transpose() * Pn)).norm() <= 1e-10 * std::max(1.0, Pn.norm()));
    CHECK(linalg::is_symmetric(ric.P[t], 0.0));
    CHECK(linalg::min_symmetric_eigenvalue(ric.P[t]) >= -1e-8 * std::max(1.0, linalg::spectral_norm(ric.P[t])));
  }
}

TEST_CASE("P_0 is nondecreasing in the horizon with zero terminal cost") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const SystemSpec spec = random_system(rng);
    const FiniteHorizonRiccati ric = backward_riccati(spec, Horizon(40));
    // P[t] is the horizon-(40 − t) value.
    for (std::size_t t = 40; t-- > 0;) {
      CHECK(linalg::min_symmetric_eigenvalue(ric.P[t] - ric.P[t + 1]) >=
            -1e-8 * std::max(1.0, linalg::spectral_norm(ric.P[t])));
    }
  }
}

TEST_CASE("singular inner matrix is reported") {
  CHECK_THROWS_AS(backward_riccati(scalar_spec(0.5, 1.0, 1.0, 0.0), Horizon(1)), LqrError);
  try {
    backward_riccati(scalar_spec(0.5, 1.0, 1.0, 0.0), Horizon(1));
  } catch (const LqrError& e) {
    CHECK(e.kind() == ErrorKind::SingularInnerMatrix);
  }
}

TEST_CASE("solve_dare scalar benchmark") {
  const DareSolution dare = solve_dare(scalar_spec(0.5, 1, 1, 1));
  const double p = lqr::testing::scalar_dare(0.5, 1, 1, 1);
  CHECK(dare.P(0, 0) == doctest::Approx(p).epsilon(1e-12));
  CHECK(dare.K(0, 0) == doctest::Approx(p * 0.5 / (1 + p)).epsilon(1e-12));
  CHECK(dare.S(0, 0) == doctest::Approx(p / (1 + p)).epsilon(1e-12));
  CHECK(dare.P(0, 0) == doctest::Approx(1.132782).epsilon(1e-6));
  CHECK(dare.K(0, 0) == doctest::Approx(0.265564).epsilon(1e-5));
  CHECK(dare.S(0, 0) == doctest::Approx(0.531129).epsilon(1e-5));
  CHECK(dare.closed_loop_radius < 1.0);
}

TEST_CASE("A = 0 gives P = Q and K = 0") {
  for (Eigen::Index n : {1, 3}) {
    const SystemSpec spec(Matrix::Zero(n, n), Matrix::Identity(n, n), Matrix::Identity(n, n),
                          Matrix::Identity(n, n));
    const DareSolution dare = solve_dare(spec);
    CHECK((dare.P - Matrix::Identity(n, n)).norm() < 1e-14);
    CHECK(dare.K.norm() < 1e-14);
  }
}

TEST_CASE("unstable uncontrollable system does not converge") {
  try {
    solve_dare(scalar_spec(2.0, 0.0, 1.0, 1.0));
    FAIL("expected NoConvergence");
  } catch (const LqrError& e) {
    CHECK(e.kind() == ErrorKind::NoConvergence);
  }
}

TEST_CASE("DARE properties on random systems") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const SystemSpec spec = random_system(rng);
    const DareSolution dare = solve_dare(spec);
    CHECK(dare.residual <= 1e-8 * dare.P.norm());
    CHECK(dare.closed_loop_radius < 1.0);
    const Matrix G = spec.R() + spec.B().transpose() * dare.P * spec.B();
    const Matrix K = G.ldlt().solve(spec.B().transpose() * dare.P * spec.A());
    CHECK((K - dare.K).norm() <= 1e-10 * std::max(1.0, K.norm()));
    CHECK(linalg::is_symmetric(dare.S, 1e-12));
    CHECK(linalg::min_symmetric_eigenvalue(dare.S) >= -1e-10 * std::max(1.0, dare.S.norm()));
  }
}

TEST_CASE("dlyap examples") {
  const Matrix I2 = Matrix::Identity(2, 2);
  CHECK((solve_dlyap(Matrix::Zero(2, 2), I2) - I2).norm() < 1e-15);
  CHECK(solve_dlyap(scalar(0.5), scalar(1.0))(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  const Matrix V = solve_dlyap(0.9 * I2, I2);
  CHECK((V - I2 / 0.19).norm() < 1e-10);
  CHECK(V(0, 0) == doctest::Approx(5.263158).epsilon(1e-6));
  CHECK(solve_dlyap_fixed_point(scalar(0.5), scalar(1.0))(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-11));
}

TEST_CASE("dlyap rejects unstable F") {
  try {
    solve_dlyap(scalar(1.0), scalar(1.0));
    FAIL("expected SpectralRadiusTooLarge");
  } catch (const LqrError& e) {
    CHECK(e.kind() == ErrorKind::SpectralRadiusTooLarge);
  }
}

TEST_CASE("dlyap direct, fixed point and truncated series agree") {
  Rng rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(8));
    Matrix F(n, n), L(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        F(i, j) = rng.normal();
        L(i, j) = rng.normal();
      }
    F *= rng.uniform(0.1, 0.97) / linalg::spectral_radius(F);
    const Matrix G = L * L.transpose();
    const Matrix direct = solve_dlyap_direct(F, G);
    const Matrix iterated = solve_dlyap_fixed_point(F, G);
    CHECK((direct - iterated).norm() <= 1e-9 * direct.norm());
    CHECK(dlyap_residual(F, G, direct) <= 1e-10 * direct.norm());
    CHECK(linalg::min_symmetric_eigenvalue(direct) >= -1e-10 * direct.norm());
    // Enough terms that ρ^{2N}·‖G‖ is far below the tolerance.
    const double rho = linalg::spectral_radius(F);
    const auto terms = static_cast<std::size_t>(std::ceil(std::log(1e-16) / std::log(rho * rho))) + 200;
    const Matrix series = lqr::testing::lyapunov_series(F, G, terms);
    CHECK((series - direct).norm() <= 1e-9 * direct.norm());
  }
}

}  // TEST_SUITE
