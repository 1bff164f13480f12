#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "lqr_regret/errors.hpp"
#include "lqr_regret/model.hpp"
#include "test_support.hpp"

using namespace lqr;
using lqr::testing::scalar;
using lqr::testing::scalar_spec;

TEST_SUITE("model") {

TEST_CASE("validate_spec passes the scalar benchmark with the DARE witness") {
  const ValidationReport report = validate_spec(scalar_spec(0.5, 1.0, 1.0, 1.0));
  REQUIRE(report.passed());
  REQUIRE(report.witness_gain);
  // f = a − bk with k from the positive root of p² − 0.25p − 1 = 0.
  const double p = (0.25 + std::sqrt(0.0625 + 4.0)) / 2.0;
  const double k = p * 0.5 / (1.0 + p);
  CHECK(report.witness_radius == doctest::Approx(0.5 - k).epsilon(1e-9));
  CHECK(report.witness_radius == doctest::Approx(0.2344).epsilon(1e-3));
}

TEST_CASE("uncontrollable unstable mode is not stabilizable") {
  const ValidationReport report = validate_spec(scalar_spec(2.0, 0.0, 1.0, 1.0));
  CHECK_FALSE(report.passed());
  CHECK(report.failure == ErrorKind::NotStabilizable);
  CHECK_THROWS_AS(require_valid(scalar_spec(2.0, 0.0, 1.0, 1.0)), LqrError);
}

TEST_CASE("already-stable uncontrolled system passes with zero gain") {
  const ValidationReport report = validate_spec(scalar_spec(0.9, 0.0, 1.0, 1.0));
  REQUIRE(report.passed());
  CHECK(report.witness_gain->norm() == 0.0);
  CHECK(report.witness_radius == doctest::Approx(0.9));
}

TEST_CASE("cost definiteness failures") {
  CHECK(validate_spec(scalar_spec(0.5, 1.0, -1.0, 1.0)).failure == ErrorKind::CostNotPsd);
  CHECK(validate_spec(scalar_spec(0.5, 1.0, 1.0, 0.0)).failure == ErrorKind::CostNotPd);
  CHECK(validate_spec(scalar_spec(0.5, 1.0, 1.0, 1.0, -0.5)).failure == ErrorKind::CostNotPsd);
  Matrix asym(2, 2);
  asym << 1, 1, 0, 1;
  const SystemSpec spec(Matrix::Identity(2, 2) * 0.5, Matrix::Identity(2, 2), asym, Matrix::Identity(2, 2));
  CHECK(validate_spec(spec).failure == ErrorKind::CostNotPsd);
}

TEST_CASE("validate_spec is idempotent") {
  const SystemSpec spec = scalar_spec(0.7, 0.4, 2.0, 0.5);
  const ValidationReport a = validate_spec(spec);
  const ValidationReport b = validate_spec(spec);
  CHECK(a.passed() == b.passed());
  CHECK(a.witness_radius == b.witness_radius);
  CHECK((*a.witness_gain - *b.witness_gain).norm() == 0.0);
}

TEST_CASE("dimension mismatches are rejected at construction") {
  CHECK_THROWS_AS(SystemSpec(Matrix::Identity(2, 2), Matrix::Ones(3, 1), Matrix::Identity(2, 2), scalar(1.0)),
                  LqrError);
  CHECK_THROWS_AS(SystemSpec(Matrix::Identity(2, 2), Matrix::Ones(2, 1), Matrix::Identity(3, 3), scalar(1.0)),
                  LqrError);
  CHECK_THROWS_AS(SystemSpec(Matrix::Identity(2, 2), Matrix::Ones(2, 1), Matrix::Identity(2, 2),
                             Matrix::Identity(2, 2)),
                  LqrError);
  try {
    SystemSpec(Matrix::Identity(2, 2), Matrix::Ones(2, 1), Matrix::Identity(2, 2), scalar(1.0), Matrix::Zero(1, 1));
    FAIL("expected DimensionMismatch");
  } catch (const LqrError& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
  CHECK(scalar_spec(0.5, 1, 1, 1).Qf().norm() == 0.0);
}

TEST_CASE("sample_noise is deterministic and respects the support") {
  const NoiseModel box = NoiseModel::uniform_box(1, std::sqrt(3.0));
  const NoiseSequence a = sample_noise(box, Horizon(3), 7);
  const NoiseSequence b = sample_noise(box, Horizon(3), 7);
  REQUIRE(a.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(a[t](0) == b[t](0));
    CHECK(std::abs(a[t](0)) <= std::sqrt(3.0));
  }
  CHECK(sample_noise(box, Horizon(3), 8)[0](0) != a[0](0));
}

TEST_CASE("Rademacher sample mean vanishes") {
  const NoiseModel model = NoiseModel::scaled_rademacher(1, 1.0);
  const std::size_t N = 100000;
  const NoiseSequence w = sample_noise(model, Horizon(N), 1);
  double mean = 0.0;
  for (const auto& v : w) {
    CHECK(std::abs(v(0)) == 1.0);
    mean += v(0);
  }
  mean /= static_cast<double>(N);
  CHECK(std::abs(mean) <= 5.0 / std::sqrt(static_cast<double>(N)));
}

TEST_CASE("empirical resampling draws only from the atoms") {
  std::vector<Vector> atoms;
  for (double v : {1.0, -1.0, 2.0, -2.0}) atoms.push_back(Vector::Constant(1, v));
  const NoiseModel model = NoiseModel::empirical(atoms);
  const NoiseSequence w = sample_noise(model, Horizon(4), 3);
  for (const auto& v : w) {
    const double x = v(0);
    CHECK((x == 1.0 || x == -1.0 || x == 2.0 || x == -2.0));
  }
  CHECK(model.covariance()(0, 0) == doctest::Approx(2.5));
  CHECK(model.bound() == 2.0);
}

TEST_CASE("empirical atoms are re-centred to zero mean") {
  std::vector<Vector> atoms{Vector::Constant(1, 1.0), Vector::Constant(1, 3.0)};
  const NoiseModel model = NoiseModel::empirical(atoms);
  CHECK(model.atoms()[0](0) == -1.0);
  CHECK(model.atoms()[1](0) == 1.0);
  CHECK(model.covariance()(0, 0) == doctest::Approx(1.0));
}

// Statistical checks of mean, covariance and support for every kind, seeded.
TEST_CASE("noise models: analytic covariance, mean and support") {
  std::vector<Vector> atoms;
  for (double a : {0.3, -0.9, 1.2, -0.6}) {
    Vector v(2);
    v << a, 0.5 * a * a - 0.4;
    atoms.push_back(v);
  }
  const std::vector<NoiseModel> models{
      NoiseModel::uniform_box(2, std::sqrt(3.0)),
      NoiseModel::scaled_rademacher(2, 1.0),
      NoiseModel::truncated_gaussian(2, 2.0, {1.0}),
      NoiseModel::truncated_gaussian(2, 1.5, {1.0, 0.5}),
      NoiseModel::empirical(atoms),
  };
  for (const auto& model : models) {
    CAPTURE(noise_kind_name(model.kind()));
    const std::size_t N = 100000;
    const NoiseSequence w = sample_noise(model, Horizon(N), 11);
    Vector mean = Vector::Zero(2);
    Matrix second = Matrix::Zero(2, 2);
    Matrix fourth = Matrix::Zero(2, 2);
    for (const auto& v : w) {
      CHECK(v.norm() <= model.bound() * (1 + 1e-12));
      mean += v;
      const Matrix outer = v * v.transpose();
      second += outer;
      fourth += outer.cwiseProduct(outer);
    }
    mean /= static_cast<double>(N);
    second /= static_cast<double>(N);
    fourth /= static_cast<double>(N);
    CHECK(mean.norm() <= 5.0 * model.bound() / std::sqrt(static_cast<double>(N)));
    const Matrix& W = model.covariance();
    for (Eigen::Index i = 0; i < 2; ++i) {
      for (Eigen::Index j = 0; j < 2; ++j) {
        const double var = std::max(fourth(i, j) - second(i, j) * second(i, j), 1e-30);
        const double se = std::sqrt(var / static_cast<double>(N));
        CHECK(std::abs(second(i, j) - W(i, j)) <= 5.0 * se + 1e-12);
      }
    }
  }
}

TEST_CASE("unit-variance parameters give identity covariance") {
  CHECK((NoiseModel::uniform_box(3, std::sqrt(3.0)).covariance() - Matrix::Identity(3, 3)).norm() < 1e-14);
  CHECK((NoiseModel::scaled_rademacher(3, 1.0).covariance() - Matrix::Identity(3, 3)).norm() < 1e-14);
  CHECK(NoiseModel::uniform_box(1, 2.0).covariance()(0, 0) == doctest::Approx(4.0 / 3.0));
  CHECK(NoiseModel::scaled_rademacher(1, 0.5).covariance()(0, 0) == doctest::Approx(0.25));
  CHECK(NoiseModel::uniform_box(4, 1.0).bound() == doctest::Approx(2.0));
}

TEST_CASE("truncated Gaussian second moment matches the one-dimensional closed form") {
  // For n = 1: E[w² | |w| ≤ c] = σ²(1 − 2cφ(c)/(2Φ(c) − 1)) with σ = 1.
  const double c = 1.3;
  const double phi = std::exp(-0.5 * c * c) / std::sqrt(2.0 * M_PI);
  const double mass = std::erf(c / std::sqrt(2.0));
  const double expected = 1.0 - 2.0 * c * phi / mass;
  CHECK(NoiseModel::truncated_gaussian(1, c, {1.0}).covariance()(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("invalid noise parameters") {
  CHECK_THROWS_AS(NoiseModel::uniform_box(1, 0.0), LqrError);
  CHECK_THROWS_AS(NoiseModel::scaled_rademacher(0, 1.0), LqrError);
  CHECK_THROWS_AS(NoiseModel::truncated_gaussian(2, 1.0, {1.0, 1.0, 1.0}), LqrError);
  CHECK_THROWS_AS(NoiseModel::empirical({}), LqrError);
  CHECK_THROWS_AS(parse_noise_kind("Gaussian"), LqrError);
}

TEST_CASE("JSON parsing and error paths") {
  using nlohmann::json;
  const json good = json::parse(R"({"A": [[0.5]], "B": [[1]], "Q": [[1]], "R": [[1]],
                                    "noise": {"kind": "UniformBox", "params": [1.5]}})");
  const ProblemInstance p = parse_problem(good);
  CHECK(p.system.n() == 1);
  CHECK(p.noise.kind() == NoiseKind::UniformBox);
  CHECK(p.noise.covariance()(0, 0) == doctest::Approx(0.75));

  auto error_of = [](const std::string& text) -> std::string {
    try {
      parse_problem(json::parse(text));
    } catch (const LqrError& e) {
      return e.what();
    }
    return "";
  };
  const std::string noise = R"("noise": {"kind": "UniformBox", "params": [1]})";
  CHECK(error_of(R"({"A": [[0.5, 1], [2]], "B": [[1],[1]], "Q": [[1]], "R": [[1]], )" + noise + "}")
            .find("/A/1") != std::string::npos);
  CHECK(error_of(R"({"A": [[0.5]], "B": [[1]], "Q": [["x"]], "R": [[1]], )" + noise + "}").find("/Q/0/0") !=
        std::string::npos);
  CHECK(error_of(R"({"A": [[0.5]], "B": [[1]], "Q": [[1]], )" + noise + "}").find("/R") != std::string::npos);
  CHECK(error_of(R"({"A": [[0.5]], "B": [[1]], "Q": [[1]], "R": [[1]], "extra": 1, )" + noise + "}")
            .find("/extra") != std::string::npos);
  CHECK(error_of(R"({"A": [[0.5]], "B": [[1]], "Q": [[1]], "R": [[1]], "noise": {"kind": "Cauchy", "params": [1]}})")
            .find("/noise/kind") != std::string::npos);
  CHECK(error_of(R"({"A": [[0.5]], "B": [[1]], "Q": [[1]], "R": [[1]], "noise": {"kind": "UniformBox"}})")
            .find("/noise/params") != std::string::npos);
  CHECK(error_of(R"({"A": [[0.5, 0.1], [0, 1]], "B": [[1]], "Q": [[1]], "R": [[1]], )" + noise + "}")
            .find("DimensionMismatch") != std::string::npos);
}

TEST_CASE("load_problem reads Empirical atoms from a relative CSV path") {
  const ProblemInstance p = load_problem(std::filesystem::path(LQR_TEST_DATA_DIR) / "empirical.json");
  CHECK(p.noise.kind() == NoiseKind::Empirical);
  CHECK(p.noise.atoms().size() == 4);
  CHECK(p.noise.dim() == 2);
  CHECK_THROWS_AS(load_problem(std::filesystem::path(LQR_TEST_DATA_DIR) / "missing.json"), LqrError);
}

TEST_CASE("random_system yields validated instances") {
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const SystemSpec spec = random_system(rng);
    const ValidationReport report = validate_spec(spec);
    CHECK(report.passed());
    CHECK(report.witness_radius <= 0.95);
    CHECK(spec.n() <= 4);
    CHECK(spec.m() <= 4);
  }
}

TEST_CASE("slow Riccati convergence is not reported as unstabilizable") {
  const ValidationReport report = validate_spec(lqr::testing::scalar_spec(1.0, 1e-5, 1.0, 1.0));
  REQUIRE(report.failure.has_value());
  CHECK(*report.failure == ErrorKind::NoConvergence);
  CHECK(validate_spec(lqr::testing::scalar_spec(1.0, 0.0, 1.0, 1.0)).failure == ErrorKind::NotStabilizable);
}

}  // TEST_SUITE
