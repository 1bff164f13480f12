#include "lqr_regret/model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include "lqr_regret/errors.hpp"
#include "lqr_regret/linalg.hpp"
#include "lqr_regret/riccati.hpp"

namespace lqr {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw LqrError(ErrorKind::DimensionMismatch, std::string(name) + " is " + shape(m) + ", expected " +
                                                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

constexpr std::size_t kCovarianceSamples = 1000000;
constexpr std::size_t kMaxRejections = 1000000;

}  // namespace

SystemSpec::SystemSpec(Matrix A, Matrix B, Matrix Q, Matrix R, std::optional<Matrix> Qf)
    : A_(std::move(A)), B_(std::move(B)), Q_(std::move(Q)), R_(std::move(R)) {
  const auto n = A_.rows();
  if (n == 0) throw LqrError(ErrorKind::DimensionMismatch, "A must be non-empty");
  expect_shape(A_, n, n, "A");
  if (B_.rows() != n || B_.cols() == 0) {
    throw LqrError(ErrorKind::DimensionMismatch, "B is " + shape(B_) + ", expected " + std::to_string(n) + "xm");
  }
  const auto m = B_.cols();
  expect_shape(Q_, n, n, "Q");
  expect_shape(R_, m, m, "R");
  Qf_ = Qf ? std::move(*Qf) : Matrix::Zero(n, n);
  expect_shape(Qf_, n, n, "Qf");
}

SystemSpec SystemSpec::with_terminal_cost(Matrix Qf) const { return SystemSpec(A_, B_, Q_, R_, std::move(Qf)); }

std::string_view noise_kind_name(NoiseKind kind) noexcept {
  switch (kind) {
    case NoiseKind::UniformBox: return "UniformBox";
    case NoiseKind::TruncatedGaussian: return "TruncatedGaussian";
    case NoiseKind::ScaledRademacher: return "ScaledRademacher";
    case NoiseKind::Empirical: return "Empirical";
  }
  return "Unknown";
}

NoiseKind parse_noise_kind(std::string_view name) {
  for (auto kind : {NoiseKind::UniformBox, NoiseKind::TruncatedGaussian, NoiseKind::ScaledRademacher,
                    NoiseKind::Empirical}) {
    if (noise_kind_name(kind) == name) return kind;
  }
  throw LqrError(ErrorKind::InvalidModel, "unknown noise kind '" + std::string(name) + "'");
}

NoiseModel NoiseModel::uniform_box(Eigen::Index dim, double half_width) {
  if (dim <= 0 || !(half_width > 0.0) || !std::isfinite(half_width)) {
    throw LqrError(ErrorKind::InvalidModel, "UniformBox needs dim > 0 and half-width > 0");
  }
  NoiseModel model;
  model.kind_ = NoiseKind::UniformBox;
  model.dim_ = dim;
  model.params_ = {half_width};
  model.bound_ = half_width * std::sqrt(static_cast<double>(dim));
  model.W_ = Matrix::Identity(dim, dim) * (half_width * half_width / 3.0);
  return model;
}

NoiseModel NoiseModel::scaled_rademacher(Eigen::Index dim, double scale) {
  if (dim <= 0 || !(scale > 0.0) || !std::isfinite(scale)) {
    throw LqrError(ErrorKind::InvalidModel, "ScaledRademacher needs dim > 0 and scale > 0");
  }
  NoiseModel model;
  model.kind_ = NoiseKind::ScaledRademacher;
  model.dim_ = dim;
  model.params_ = {scale};
  model.bound_ = scale * std::sqrt(static_cast<double>(dim));
  model.W_ = Matrix::Identity(dim, dim) * (scale * scale);
  return model;
}

NoiseModel NoiseModel::truncated_gaussian(Eigen::Index dim, double radius, std::vector<double> sigmas) {
  if (dim <= 0 || !(radius > 0.0) || !std::isfinite(radius)) {
    throw LqrError(ErrorKind::InvalidModel, "TruncatedGaussian needs dim > 0 and radius > 0");
  }
  if (sigmas.size() == 1 && dim > 1) sigmas.assign(static_cast<std::size_t>(dim), sigmas.front());
  if (sigmas.size() != static_cast<std::size_t>(dim)) {
    throw LqrError(ErrorKind::InvalidModel, "TruncatedGaussian needs 1 or n sigmas");
  }
  for (double s : sigmas) {
    if (!(s > 0.0) || !std::isfinite(s)) throw LqrError(ErrorKind::InvalidModel, "sigma must be > 0");
  }

  NoiseModel model;
  model.kind_ = NoiseKind::TruncatedGaussian;
  model.dim_ = dim;
  model.params_.push_back(radius);
  model.params_.insert(model.params_.end(), sigmas.begin(), sigmas.end());
  model.bound_ = radius;

  const bool isotropic = std::all_of(sigmas.begin(), sigmas.end(), [&](double s) { return s == sigmas.front(); });
  if (isotropic) {
    // ‖w‖²/σ² ~ χ²_n; truncation at radius rescales the second moment by
    // P(χ²_{n+2} ≤ x) / P(χ²_n ≤ x) with x = radius²/σ².
    const double sigma = sigmas.front();
    const double half_x = 0.5 * radius * radius / (sigma * sigma);
    const double half_n = 0.5 * static_cast<double>(dim);
    const double accept = boost::math::gamma_p(half_n, half_x);
    if (accept < 1e-4) throw LqrError(ErrorKind::InvalidModel, "truncation radius too small for sigma");
    const double ratio = boost::math::gamma_p(half_n + 1.0, half_x) / accept;
    model.W_ = Matrix::Identity(dim, dim) * (sigma * sigma * ratio);
  } else {
    model.W_ = Matrix::Zero(dim, dim);
    Rng rng(0);
    for (std::size_t i = 0; i < kCovarianceSamples; ++i) {
      const Vector w = model.draw(rng);
      model.W_.noalias() += w * w.transpose();
    }
    model.W_ /= static_cast<double>(kCovarianceSamples);
    model.W_ = linalg::symmetrize(model.W_);
  }
  return model;
}

NoiseModel NoiseModel::empirical(std::vector<Vector> atoms) {
  if (atoms.empty()) throw LqrError(ErrorKind::InvalidModel, "Empirical needs at least one atom");
  const auto dim = atoms.front().size();
  if (dim == 0) throw LqrError(ErrorKind::InvalidModel, "Empirical atoms must be non-empty vectors");
  Vector mean = Vector::Zero(dim);
  for (const auto& a : atoms) {
    if (a.size() != dim) throw LqrError(ErrorKind::InvalidModel, "Empirical atoms differ in length");
    if (!a.allFinite()) throw LqrError(ErrorKind::InvalidModel, "Empirical atom is not finite");
    mean += a;
  }
  mean /= static_cast<double>(atoms.size());

  NoiseModel model;
  model.kind_ = NoiseKind::Empirical;
  model.dim_ = dim;
  model.W_ = Matrix::Zero(dim, dim);
  for (auto& a : atoms) {
    a -= mean;
    model.bound_ = std::max(model.bound_, a.norm());
    model.W_.noalias() += a * a.transpose();
  }
  model.W_ /= static_cast<double>(atoms.size());
  model.atoms_ = std::move(atoms);
  return model;
}

Vector NoiseModel::draw(Rng& rng) const {
  Vector w(dim_);
  switch (kind_) {
    case NoiseKind::UniformBox:
      for (Eigen::Index i = 0; i < dim_; ++i) w(i) = rng.uniform(-params_[0], params_[0]);
      break;
    case NoiseKind::ScaledRademacher:
      for (Eigen::Index i = 0; i < dim_; ++i) w(i) = rng.coin() ? params_[0] : -params_[0];
      break;
    case NoiseKind::TruncatedGaussian: {
      const double radius = params_[0];
      for (std::size_t attempt = 0;; ++attempt) {
        if (attempt == kMaxRejections) {
          throw LqrError(ErrorKind::InvalidModel, "TruncatedGaussian rejection sampler stalled");
        }
        for (Eigen::Index i = 0; i < dim_; ++i) w(i) = params_[static_cast<std::size_t>(i) + 1] * rng.normal();
        if (w.norm() <= radius) break;
      }
      break;
    }
    case NoiseKind::Empirical:
      w = atoms_[rng.below(atoms_.size())];
      break;
  }
  return w;
}

Vector NoiseModel::sample(Rng& rng) const {
  Vector w = draw(rng);
  if (w.norm() > bound_ * (1.0 + 1e-12) + 1e-300) {
    throw LqrError(ErrorKind::InvalidModel, "noise draw escaped its support bound");
  }
  return w;
}

NoiseSequence sample_noise(const NoiseModel& model, Horizon T, std::uint64_t seed) {
  Rng rng(seed);
  NoiseSequence w;
  w.reserve(T);
  for (std::size_t t = 0; t < T; ++t) w.push_back(model.sample(rng));
  return w;
}

namespace {

// PBH test: rank [A − λI, B] = n for every eigenvalue with |λ| ≥ 1.
bool pbh_stabilizable(const Matrix& A, const Matrix& B) {
  const Eigen::Index n = A.rows();
  const Eigen::ComplexEigenSolver<Matrix> eig(A, false);
  const double scale = std::max({1.0, A.norm(), B.norm()});
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = eig.eigenvalues()(i);
    if (std::abs(lambda) < 1.0 - 1e-12) continue;
    Eigen::MatrixXcd pencil(n, n + B.cols());
    pencil.leftCols(n) = A.cast<std::complex<double>>() - lambda * Eigen::MatrixXcd::Identity(n, n);
    pencil.rightCols(B.cols()) = B.cast<std::complex<double>>();
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
    if (svd.singularValues()(n - 1) <= 1e-10 * scale) return false;
  }
  return true;
}

}  // namespace

ValidationReport validate_spec(const SystemSpec& spec, double tol_psd, double tol_pd) {
  ValidationReport report;
  auto fail = [&](ErrorKind kind, std::string message) {
    if (!report.failure) {
      report.failure = kind;
      report.message = std::move(message);
    }
  };

  const double q_tol = tol_psd >= 0.0 ? tol_psd : 1e-9 * linalg::spectral_norm(spec.Q());
  const double qf_tol = tol_psd >= 0.0 ? tol_psd : 1e-9 * linalg::spectral_norm(spec.Qf());

  report.q_min_eig = linalg::min_symmetric_eigenvalue(spec.Q());
  report.r_min_eig = linalg::min_symmetric_eigenvalue(spec.R());
  report.qf_min_eig = linalg::min_symmetric_eigenvalue(spec.Qf());

  report.q_psd = linalg::is_symmetric(spec.Q()) && report.q_min_eig >= -q_tol;
  if (!report.q_psd) fail(ErrorKind::CostNotPsd, "Q is not symmetric positive semidefinite");
  report.r_pd = linalg::is_symmetric(spec.R()) && report.r_min_eig >= tol_pd;
  if (!report.r_pd) fail(ErrorKind::CostNotPd, "R is not symmetric positive definite");
  report.qf_psd = linalg::is_symmetric(spec.Qf()) && report.qf_min_eig >= -qf_tol;
  if (!report.qf_psd) fail(ErrorKind::CostNotPsd, "Qf is not symmetric positive semidefinite");

  if (report.q_psd && report.r_pd) {
    try {
      const DareSolution dare = solve_dare(spec);
      report.witness_gain = dare.K;
      report.witness_radius = dare.closed_loop_radius;
      report.stabilizable = dare.closed_loop_radius < 1.0;
    } catch (const LqrError& e) {
      report.stabilizable = false;
      if (pbh_stabilizable(spec.A(), spec.B())) {
        fail(e.kind(), std::string("system is stabilizable but the Riccati iteration failed: ") + e.what());
      } else {
        fail(ErrorKind::NotStabilizable, "an unstable mode of A is not reachable from B");
      }
    }
    if (!report.stabilizable) fail(ErrorKind::NotStabilizable, "no stabilizing gain found");
  }
  return report;
}

void require_valid(const SystemSpec& spec) {
  const ValidationReport report = validate_spec(spec);
  if (!report.passed()) throw LqrError(*report.failure, report.message);
}

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& pointer, const std::string& what) {
  throw LqrError(ErrorKind::ParseError, (pointer.empty() ? std::string("/") : pointer) + ": " + what);
}

double parse_number(const json& node, const std::string& pointer) {
  if (!node.is_number()) parse_fail(pointer, "expected a number");
  const double value = node.get<double>();
  if (!std::isfinite(value)) parse_fail(pointer, "number is not finite");
  return value;
}

Vector parse_vector(const json& node, const std::string& pointer) {
  if (!node.is_array() || node.empty()) parse_fail(pointer, "expected a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = parse_number(node[i], pointer + "/" + std::to_string(i));
  }
  return v;
}

Matrix parse_matrix(const json& node, const std::string& pointer) {
  if (!node.is_array() || node.empty()) parse_fail(pointer, "expected a non-empty array of rows");
  const std::size_t rows = node.size();
  std::size_t cols = 0;
  Matrix m;
  for (std::size_t i = 0; i < rows; ++i) {
    const std::string row_ptr = pointer + "/" + std::to_string(i);
    const Vector row = parse_vector(node[i], row_ptr);
    if (i == 0) {
      cols = static_cast<std::size_t>(row.size());
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } else if (static_cast<std::size_t>(row.size()) != cols) {
      parse_fail(row_ptr, "row length " + std::to_string(row.size()) + " differs from " + std::to_string(cols));
    }
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

const json& require_field(const json& obj, const char* key, const std::string& pointer) {
  auto it = obj.find(key);
  if (it == obj.end()) parse_fail(pointer + "/" + key, "missing required field");
  return *it;
}

NoiseModel parse_noise(const json& node, Eigen::Index dim, const std::filesystem::path& base_dir) {
  const std::string ptr = "/noise";
  if (!node.is_object()) parse_fail(ptr, "expected an object");
  for (const auto& [key, _] : node.items()) {
    if (key != "kind" && key != "params" && key != "path") parse_fail(ptr + "/" + key, "unknown field");
  }
  const json& kind_node = require_field(node, "kind", ptr);
  if (!kind_node.is_string()) parse_fail(ptr + "/kind", "expected a string");
  NoiseKind kind;
  try {
    kind = parse_noise_kind(kind_node.get<std::string>());
  } catch (const LqrError& e) {
    parse_fail(ptr + "/kind", e.what());
  }

  try {
    if (kind == NoiseKind::Empirical) {
      std::vector<Vector> atoms;
      if (auto it = node.find("path"); it != node.end()) {
        if (!it->is_string()) parse_fail(ptr + "/path", "expected a string");
        std::filesystem::path p = it->get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        atoms = load_atoms_csv(p);
      } else {
        const json& params = require_field(node, "params", ptr);
        if (!params.is_array() || params.empty()) parse_fail(ptr + "/params", "expected an array of atoms");
        for (std::size_t i = 0; i < params.size(); ++i) {
          atoms.push_back(parse_vector(params[i], ptr + "/params/" + std::to_string(i)));
        }
      }
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (atoms[i].size() != dim) {
          parse_fail(ptr + "/params/" + std::to_string(i), "atom length must equal state dimension");
        }
      }
      return NoiseModel::empirical(std::move(atoms));
    }

    const json& params_node = require_field(node, "params", ptr);
    const Vector params = parse_vector(params_node, ptr + "/params");
    switch (kind) {
      case NoiseKind::UniformBox:
        if (params.size() != 1) parse_fail(ptr + "/params", "UniformBox takes [half_width]");
        return NoiseModel::uniform_box(dim, params(0));
      case NoiseKind::ScaledRademacher:
        if (params.size() != 1) parse_fail(ptr + "/params", "ScaledRademacher takes [scale]");
        return NoiseModel::scaled_rademacher(dim, params(0));
      case NoiseKind::TruncatedGaussian: {
        if (params.size() < 2) parse_fail(ptr + "/params", "TruncatedGaussian takes [radius, sigma...]");
        std::vector<double> sigmas(params.data() + 1, params.data() + params.size());
        return NoiseModel::truncated_gaussian(dim, params(0), std::move(sigmas));
      }
      case NoiseKind::Empirical:
        break;
    }
  } catch (const LqrError& e) {
    if (e.kind() == ErrorKind::ParseError) throw;
    parse_fail(ptr, e.what());
  }
  parse_fail(ptr, "unsupported noise kind");
}

}  // namespace

ProblemInstance parse_problem(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) parse_fail("", "expected a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "A" && key != "B" && key != "Q" && key != "R" && key != "Qf" && key != "noise") {
      parse_fail("/" + key, "unknown field");
    }
  }
  Matrix A = parse_matrix(require_field(doc, "A", ""), "/A");
  Matrix B = parse_matrix(require_field(doc, "B", ""), "/B");
  Matrix Q = parse_matrix(require_field(doc, "Q", ""), "/Q");
  Matrix R = parse_matrix(require_field(doc, "R", ""), "/R");
  std::optional<Matrix> Qf;
  if (auto it = doc.find("Qf"); it != doc.end()) Qf = parse_matrix(*it, "/Qf");
  const auto n = A.rows();
  NoiseModel noise = parse_noise(require_field(doc, "noise", ""), n, base_dir);
  return ProblemInstance{SystemSpec(std::move(A), std::move(B), std::move(Q), std::move(R), std::move(Qf)),
                         std::move(noise)};
}

ProblemInstance load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LqrError(ErrorKind::ParseError, path.string() + ": cannot open file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw LqrError(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  try {
    return parse_problem(doc, path.parent_path());
  } catch (const LqrError& e) {
    throw LqrError(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<Vector> load_atoms_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LqrError(ErrorKind::ParseError, path.string() + ": cannot open atoms file");
  std::vector<Vector> atoms;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw LqrError(ErrorKind::ParseError,
                       path.string() + ":" + std::to_string(line_no) + ": not a number '" + cell + "'");
      }
    }
    atoms.push_back(Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
  }
  if (atoms.empty()) throw LqrError(ErrorKind::ParseError, path.string() + ": no atoms");
  return atoms;
}

SystemSpec random_system(Rng& rng, const RandomSystemOptions& options) {
  auto draw_dim = [&](Eigen::Index lo, Eigen::Index hi) {
    return lo + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
  };
  auto gaussian = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix g(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = rng.normal();
    return g;
  };

  for (int attempt = 0; attempt < 1000; ++attempt) {
    const auto n = draw_dim(options.min_n, options.max_n);
    const auto m = draw_dim(options.min_m, options.max_m);
    Matrix A = gaussian(n, n);
    const double radius = linalg::spectral_radius(A);
    if (radius < 1e-6) continue;
    A *= rng.uniform(options.min_open_loop_radius, options.max_open_loop_radius) / radius;
    Matrix B = gaussian(n, m);
    const auto rank = draw_dim(1, n);
    const Matrix LQ = gaussian(n, rank);
    Matrix Q = linalg::symmetrize(LQ * LQ.transpose() / static_cast<double>(rank));
    const Matrix LR = gaussian(m, m);
    Matrix R = linalg::symmetrize(LR * LR.transpose() / static_cast<double>(m) + 0.1 * Matrix::Identity(m, m));
    Matrix Qf = options.zero_terminal_cost ? Matrix::Zero(n, n) : Q;
    SystemSpec spec(std::move(A), std::move(B), std::move(Q), std::move(R), std::move(Qf));
    const ValidationReport report = validate_spec(spec);
    if (report.passed() && report.witness_radius <= options.max_closed_loop_radius) return spec;
  }
  throw LqrError(ErrorKind::NotStabilizable, "could not draw a stabilizable random system");
}

}  // namespace lqr
