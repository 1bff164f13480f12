#include "lqr_regret/riccati.hpp"

#include <cmath>
#include <string>

#include "lqr_regret/errors.hpp"
#include "lqr_regret/linalg.hpp"

namespace lqr {

namespace {

constexpr double kMinInnerRcond = 1e-14;

Matrix dlyap_iterate(const Matrix& F, const Matrix& G, Matrix V, const DlyapOptions& options) {
  for (std::size_t it = 0; it < options.max_iter; ++it) {
    Matrix next = linalg::symmetrize(G + F.transpose() * V * F);
    const double step = (next - V).norm();
    V = std::move(next);
    if (!V.allFinite()) break;
    if (step <= options.tol * V.norm()) return V;
  }
  throw LqrError(ErrorKind::NoConvergence,
                 "Lyapunov iteration did not converge in " + std::to_string(options.max_iter) + " steps");
}

void check_dlyap_inputs(const Matrix& F, const Matrix& G) {
  if (F.rows() != F.cols() || G.rows() != F.rows() || G.cols() != F.cols()) {
    throw LqrError(ErrorKind::DimensionMismatch, "dlyap needs square F and G of equal size");
  }
  const double radius = linalg::spectral_radius(F);
  if (!(radius < 1.0 - 1e-9)) {
    throw LqrError(ErrorKind::SpectralRadiusTooLarge, "rho(F) = " + std::to_string(radius));
  }
}

}  // namespace

RiccatiStep riccati_step(const SystemSpec& spec, const Matrix& P_next) {
  const Matrix& A = spec.A();
  const Matrix& B = spec.B();
  const Matrix BtP = B.transpose() * P_next;
  const Matrix inner = linalg::symmetrize(spec.R() + BtP * B);

  RiccatiStep step;
  step.inner.compute(inner);
  if (step.inner.info() != Eigen::Success || !(step.inner.rcond() >= kMinInnerRcond)) {
    throw LqrError(ErrorKind::SingularInnerMatrix, "R + B'PB is numerically singular");
  }
  step.K = step.inner.solve(BtP * A);
  step.S = linalg::symmetrize(P_next - BtP.transpose() * step.inner.solve(BtP));
  // Q + AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA = Q + AᵀSA.
  step.P = linalg::symmetrize(spec.Q() + A.transpose() * step.S * A);
  return step;
}

FiniteHorizonRiccati backward_riccati(const SystemSpec& spec, Horizon T) {
  const std::size_t steps = T;
  FiniteHorizonRiccati out;
  out.P.resize(steps + 1);
  out.K.resize(steps);
  out.S.resize(steps);
  out.inner.resize(steps);
  out.P[steps] = spec.Qf();
  for (std::size_t t = steps; t-- > 0;) {
    RiccatiStep step = riccati_step(spec, out.P[t + 1]);
    out.P[t] = std::move(step.P);
    out.K[t] = std::move(step.K);
    out.S[t] = std::move(step.S);
    out.inner[t] = std::move(step.inner);
  }
  return out;
}

double are_residual(const SystemSpec& spec, const Matrix& P) {
  const Matrix& A = spec.A();
  const Matrix& B = spec.B();
  const Matrix BtPA = B.transpose() * P * A;
  const Eigen::LLT<Matrix> inner(linalg::symmetrize(spec.R() + B.transpose() * P * B));
  const Matrix rhs = spec.Q() + A.transpose() * P * A - BtPA.transpose() * inner.solve(BtPA);
  return (P - rhs).norm();
}

DareSolution solve_dare(const SystemSpec& spec, const DareOptions& options) {
  Matrix P = spec.Q();
  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    RiccatiStep step = riccati_step(spec, P);
    if (!step.P.allFinite()) {
      throw LqrError(ErrorKind::NoConvergence, "Riccati iterate diverged after " + std::to_string(it) + " steps");
    }
    const double change = (step.P - P).norm();
    P = std::move(step.P);
    if (change <= options.tol * P.norm()) {
      RiccatiStep fixed = riccati_step(spec, P);
      DareSolution out;
      out.P = P;
      out.K = std::move(fixed.K);
      out.S = std::move(fixed.S);
      out.residual = are_residual(spec, P);
      out.closed_loop_radius = linalg::spectral_radius(spec.A() - spec.B() * out.K);
      out.iterations = it;
      if (!(out.closed_loop_radius < 1.0)) {
        throw LqrError(ErrorKind::NoConvergence, "Riccati fixed point is not stabilizing, rho(A-BK) = " +
                                                     std::to_string(out.closed_loop_radius));
      }
      return out;
    }
  }
  throw LqrError(ErrorKind::NoConvergence,
                 "Riccati iteration did not converge in " + std::to_string(options.max_iter) + " steps");
}

RiccatiSolution solve_riccati(const SystemSpec& spec, Horizon T, const DareOptions& options) {
  return RiccatiSolution{backward_riccati(spec, T), solve_dare(spec, options)};
}

Matrix solve_dlyap_fixed_point(const Matrix& F, const Matrix& G, const DlyapOptions& options) {
  check_dlyap_inputs(F, G);
  return dlyap_iterate(F, G, linalg::symmetrize(G), options);
}

Matrix solve_dlyap_direct(const Matrix& F, const Matrix& G) {
  check_dlyap_inputs(F, G);
  const Eigen::Index n = F.rows();
  const Eigen::Index nn = n * n;
  // vec(FᵀVF) = (Fᵀ ⊗ Fᵀ) vec(V) for column-major vec.
  Matrix system = Matrix::Identity(nn, nn);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < n; ++l) system(i * n + k, j * n + l) -= F(j, i) * F(l, k);
  const Vector rhs = Eigen::Map<const Vector>(G.data(), nn);
  const Vector solution = system.partialPivLu().solve(rhs);
  return linalg::symmetrize(Eigen::Map<const Matrix>(solution.data(), n, n));
}

Matrix solve_dlyap(const Matrix& F, const Matrix& G, const DlyapOptions& options) {
  check_dlyap_inputs(F, G);
  if (F.rows() > options.direct_max_n) return dlyap_iterate(F, G, linalg::symmetrize(G), options);
  Matrix V = solve_dlyap_direct(F, G);
  if (dlyap_residual(F, G, V) <= options.tol * V.norm()) return V;
  return dlyap_iterate(F, G, std::move(V), options);
}

double dlyap_residual(const Matrix& F, const Matrix& G, const Matrix& V) {
  return (V - G - F.transpose() * V * F).norm();
}

}  // namespace lqr
