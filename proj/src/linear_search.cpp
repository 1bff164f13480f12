#include "lqr_regret/linear_search.hpp"

#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

#include "lqr_regret/errors.hpp"
#include "lqr_regret/linalg.hpp"

namespace lqr {

CostTEval cost_T(const Matrix& K, const SystemSpec& spec, const NoiseSequence& w, bool want_gradient) {
  const Eigen::Index n = spec.n();
  if (K.rows() != spec.m() || K.cols() != n) throw LqrError(ErrorKind::DimensionMismatch, "gain must be m x n");
  const std::size_t T = w.size();
  if (T == 0) throw LqrError(ErrorKind::HorizonMismatch, "empty noise sequence");

  const Matrix F = spec.A() - spec.B() * K;
  const Matrix weight = spec.Q() + K.transpose() * spec.R() * K;
  const double scale = 1.0 / static_cast<double>(T);

  // Column t holds x_t.
  Matrix states(n, static_cast<Eigen::Index>(T));
  states.col(0).setZero();
  double total = 0.0;
  Vector x = Vector::Zero(n);
  Vector next(n);
  for (std::size_t t = 0;; ++t) {
    total += x.dot(weight * x);
    if (t + 1 == T) break;
    if (w[t].size() != n) throw LqrError(ErrorKind::DimensionMismatch, "noise vector has wrong dimension");
    next.noalias() = F * x;
    next += w[t];
    x.swap(next);
    if (!(x.norm() <= kStateOverflow)) return CostTEval{std::numeric_limits<double>::infinity(), std::nullopt};
    states.col(static_cast<Eigen::Index>(t + 1)) = x;
  }

  CostTEval out;
  out.value = scale * total;
  if (!want_gradient) return out;

  // λ_t = ∂J/∂x_t = (2/T)·W x_t + Fᵀλ_{t+1}, λ_T = 0. dF = −B dK.
  Matrix outer_states = Matrix::Zero(n, n);  // Σ x_t x_tᵀ
  Matrix adjoint_outer = Matrix::Zero(n, n); // Σ λ_{t+1} x_tᵀ
  Vector lambda = Vector::Zero(n);
  Vector tmp(n);
  for (std::size_t t = T; t-- > 0;) {
    const auto xt = states.col(static_cast<Eigen::Index>(t));
    if (t + 1 < T) adjoint_outer.noalias() += lambda * xt.transpose();
    outer_states.noalias() += xt * xt.transpose();
    tmp.noalias() = F.transpose() * lambda;
    lambda.noalias() = (2.0 * scale) * (weight * xt);
    lambda += tmp;
  }
  out.gradient = (2.0 * scale) * (spec.R() * K * outer_states) - spec.B().transpose() * adjoint_outer;
  return out;
}

namespace {

struct DescentOutcome {
  Matrix K;
  double value = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
};

DescentOutcome descend(const SystemSpec& spec, const NoiseSequence& w, Matrix K, const LinearSearchOptions& opt) {
  CostTEval eval = cost_T(K, spec, w, true);
  DescentOutcome out{K, eval.value, 0.0, false};
  if (!std::isfinite(eval.value)) return out;
  Matrix grad = std::move(*eval.gradient);
  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    const double gn2 = grad.squaredNorm();
    if (std::sqrt(gn2) <= opt.grad_tol) {
      out.converged = true;
      break;
    }
    double step = opt.initial_step;
    bool accepted = false;
    while (step > 1e-20) {
      const Matrix trial = out.K - step * grad;
      const double value = cost_T(trial, spec, w, false).value;
      if (value <= out.value - opt.armijo * step * gn2) {
        CostTEval next = cost_T(trial, spec, w, true);
        out.K = trial;
        out.value = next.value;
        grad = std::move(*next.gradient);
        accepted = true;
        break;
      }
      // Near the optimum the Armijo decrease falls below rounding error in the
      // cost sum; accept a step that is flat in value but shrinks the gradient.
      if (std::abs(value - out.value) <= 1e-13 * std::abs(out.value)) {
        CostTEval next = cost_T(trial, spec, w, true);
        if (next.gradient->squaredNorm() < gn2) {
          out.K = trial;
          out.value = next.value;
          grad = std::move(*next.gradient);
          accepted = true;
          break;
        }
      }
      step *= opt.shrink;
    }
    if (!accepted) break;
  }
  out.grad_norm = grad.norm();
  if (out.grad_norm <= opt.grad_tol) out.converged = true;
  return out;
}

}  // namespace

LinearSearchResult optimize(const SystemSpec& spec, const NoiseSequence& w, const LinearSearchOptions& options) {
  return optimize(spec, solve_dare(spec), w, options);
}

LinearSearchResult optimize(const SystemSpec& spec, const DareSolution& dare, const NoiseSequence& w,
                            const LinearSearchOptions& options) {
  const std::size_t starts = std::max<std::size_t>(options.starts, 1);
  LinearSearchResult result;
  result.starts = starts;
  result.per_start_costs.assign(starts, std::numeric_limits<double>::infinity());
  result.per_start_initial_costs.assign(starts, std::numeric_limits<double>::infinity());
  result.dare_gain_cost = cost_T(dare.K, spec, w, false).value;

  const double perturbation = options.perturbation_scale * dare.K.norm();
  bool have_best = false;
  for (std::size_t s = 0; s < starts; ++s) {
    Matrix init = dare.K;
    if (s > 0) {
      Rng rng(options.seed * 0x9E3779B97F4A7C15ULL + s);
      for (Eigen::Index j = 0; j < init.cols(); ++j)
        for (Eigen::Index i = 0; i < init.rows(); ++i) init(i, j) += perturbation * rng.normal();
    }
    result.per_start_initial_costs[s] = cost_T(init, spec, w, false).value;
    DescentOutcome outcome = descend(spec, w, init, options);
    if (!std::isfinite(outcome.value)) continue;
    const double radius = linalg::spectral_radius(spec.A() - spec.B() * outcome.K);
    if (!(radius < 1.0)) {
      if (s == 0) {
        // Fall back to the stabilizing DARE gain itself.
        outcome = DescentOutcome{dare.K, result.dare_gain_cost, 0.0, false};
        CostTEval eval = cost_T(dare.K, spec, w, true);
        outcome.grad_norm = eval.gradient->norm();
      } else {
        continue;
      }
    }
    result.per_start_costs[s] = outcome.value;
    // Strict improvement keeps the lower start index on ties.
    if (!have_best || outcome.value < result.cost) {
      have_best = true;
      result.cost = outcome.value;
      result.K_star = outcome.K;
      result.best_start = s;
      result.grad_norm_at_opt = outcome.grad_norm;
      result.converged = outcome.converged;
    }
  }
  if (!have_best) throw LqrError(ErrorKind::AllStartsDiverged, "no stable terminal point");
  result.spectral_radius = linalg::spectral_radius(spec.A() - spec.B() * result.K_star);
  return result;
}

ContractionWitness contraction_witness(const Matrix& closed_loop) {
  if (closed_loop.rows() != closed_loop.cols() || closed_loop.rows() == 0) {
    throw LqrError(ErrorKind::DimensionMismatch, "closed loop must be square");
  }
  ContractionWitness out;
  out.spectral_radius = linalg::spectral_radius(closed_loop);
  if (!(out.spectral_radius < 1.0)) {
    throw LqrError(ErrorKind::SpectralRadiusTooLarge, "closed loop is not stable");
  }
  out.delta = 0.5 * (1.0 - out.spectral_radius);
  out.contraction_norm = out.spectral_radius + out.delta;
  out.gamma = 1.0 - out.contraction_norm;

  const Eigen::Index n = closed_loop.rows();
  using CMatrix = Eigen::MatrixXcd;
  Eigen::ComplexSchur<CMatrix> schur(closed_loop.cast<std::complex<double>>());
  const CMatrix& upper = schur.matrixT();

  double s = 1.0;
  for (int halving = 0; halving < 200; ++halving) {
    CMatrix scaled = upper;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) scaled(i, j) *= std::pow(s, static_cast<double>(j - i));
    const double norm = n == 1 ? std::abs(scaled(0, 0)) : Eigen::JacobiSVD<CMatrix>(scaled).singularValues()(0);
    if (norm <= out.contraction_norm) {
      out.achieved_norm = norm;
      out.scaling = s;
      // M = U·diag(1, s, ..., s^{n-1}); U unitary.
      out.condition = std::pow(s, -static_cast<double>(n - 1));
      return out;
    }
    s *= 0.5;
  }
  throw LqrError(ErrorKind::NoConvergence, "could not scale Schur form into a contraction");
}

ConcentrationConstants concentration_constants(const SystemSpec& spec, const Matrix& K, double noise_bound) {
  ConcentrationConstants out;
  out.witness = contraction_witness(spec.A() - spec.B() * K);
  out.noise_bound = noise_bound;
  out.sigma_max = linalg::spectral_norm(spec.Q() + K.transpose() * spec.R() * K);
  return out;
}

double mcdiarmid_bound(const ConcentrationConstants& c, double epsilon, std::size_t T) {
  const double B2 = c.noise_bound * c.noise_bound;
  const double kappa2 = c.witness.condition * c.witness.condition;
  const double g2 = c.witness.gamma * c.witness.gamma;
  const double denom = 25.0 * B2 * B2 * kappa2 * kappa2 * c.sigma_max * c.sigma_max;
  return 2.0 * std::exp(-2.0 * epsilon * epsilon * g2 * g2 * static_cast<double>(T) / denom);
}

}  // namespace lqr
