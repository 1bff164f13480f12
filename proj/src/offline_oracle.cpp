#include "lqr_regret/offline_oracle.hpp"

#include <string>

#include "lqr_regret/errors.hpp"

namespace lqr {

double StackedProblem::evaluate(const Vector& u) const { return u.dot(H * u) + 2.0 * g.dot(u) + c0; }

StackedProblem assemble(const SystemSpec& spec, const NoiseSequence& w) {
  const Eigen::Index n = spec.n();
  const Eigen::Index m = spec.m();
  const auto T = static_cast<Eigen::Index>(w.size());
  if (T == 0) throw LqrError(ErrorKind::HorizonMismatch, "empty noise sequence");
  if (m * T > kMaxStackedSize) {
    throw LqrError(ErrorKind::ProblemTooLarge,
                   "m*T = " + std::to_string(m * T) + " exceeds " + std::to_string(kMaxStackedSize));
  }
  for (const auto& wt : w) {
    if (wt.size() != n) throw LqrError(ErrorKind::DimensionMismatch, "noise vector has wrong dimension");
  }

  // Stacked states X = (x_1; ...; x_T) = G·U + d, with block (t, s) of G equal
  // to A^{t-1-s}B for s < t, and d_t = Σ_{s<t} A^{t-1-s} w_s. Block row t-1
  // holds x_t.
  Matrix G = Matrix::Zero(n * T, m * T);
  Vector d = Vector::Zero(n * T);
  Matrix power_B = spec.B();
  for (Eigen::Index lag = 0; lag < T; ++lag) {
    for (Eigen::Index s = 0; s + lag < T; ++s) G.block((s + lag) * n, s * m, n, m) = power_B;
    power_B = spec.A() * power_B;
  }
  Vector x = Vector::Zero(n);
  for (Eigen::Index t = 0; t < T; ++t) {
    x = spec.A() * x + w[static_cast<std::size_t>(t)];
    d.segment(t * n, n) = x;
  }

  // Weight Q on x_1..x_{T-1}, Qf on x_T.
  Matrix weighted_G(n * T, m * T);
  Vector weighted_d(n * T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Matrix& weight = (t == T - 1) ? spec.Qf() : spec.Q();
    weighted_G.middleRows(t * n, n) = weight * G.middleRows(t * n, n);
    weighted_d.segment(t * n, n) = weight * d.segment(t * n, n);
  }

  StackedProblem problem;
  problem.control_dim = m;
  problem.H = G.transpose() * weighted_G;
  for (Eigen::Index t = 0; t < T; ++t) problem.H.block(t * m, t * m, m, m) += spec.R();
  problem.H = 0.5 * (problem.H + problem.H.transpose()).eval();
  problem.g = G.transpose() * weighted_d;
  problem.c0 = d.dot(weighted_d);
  return problem;
}

QpSolution solve_qp(const StackedProblem& problem) {
  Eigen::LLT<Matrix> factor(problem.H);
  if (factor.info() != Eigen::Success) {
    throw LqrError(ErrorKind::NotPositiveDefinite, "stacked Hessian is not positive definite");
  }
  QpSolution out;
  out.u_star = -factor.solve(problem.g);
  out.cost_star = problem.c0 + problem.g.dot(out.u_star);
  out.gradient_residual = (2.0 * (problem.H * out.u_star + problem.g)).norm();
  return out;
}

std::vector<Vector> unstack(const Vector& u, Eigen::Index control_dim) {
  if (control_dim <= 0 || u.size() % control_dim != 0) {
    throw LqrError(ErrorKind::DimensionMismatch, "stacked vector length is not a multiple of m");
  }
  std::vector<Vector> out;
  for (Eigen::Index i = 0; i < u.size(); i += control_dim) out.emplace_back(u.segment(i, control_dim));
  return out;
}

}  // namespace lqr
