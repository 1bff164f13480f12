#include "lqr_regret/policies.hpp"

#include <string>

#include "lqr_regret/errors.hpp"

namespace lqr {

namespace {

void check_riccati(const SystemSpec& spec, const std::shared_ptr<const RiccatiSolution>& ric) {
  if (!ric) throw LqrError(ErrorKind::HorizonMismatch, "policy needs a Riccati solution");
  const auto& K = ric->steady.K;
  if (K.rows() != spec.m() || K.cols() != spec.n()) {
    throw LqrError(ErrorKind::DimensionMismatch, "Riccati solution does not match the system dimensions");
  }
}

void check_step(std::size_t t, std::optional<std::size_t> horizon) {
  if (horizon && t >= *horizon) {
    throw LqrError(ErrorKind::HorizonMismatch,
                   "step " + std::to_string(t) + " beyond policy horizon " + std::to_string(*horizon));
  }
}

}  // namespace

Vector Policy::act(std::size_t t, const Vector& x) const {
  if (x.size() != n_) throw LqrError(ErrorKind::DimensionMismatch, "state has wrong dimension");
  check_step(t, horizon_);
  switch (kind_) {
    case PolicyKind::OnlineTimeVarying: return -(riccati_->finite.K[t] * x);
    case PolicyKind::OnlineSteadyState: return -(riccati_->steady.K * x);
    case PolicyKind::ConstantLinear: return -(constant_gain_ * x);
    case PolicyKind::OfflineOptimal: return -(riccati_->finite.K[t] * x) - feedforward_[t];
    case PolicyKind::Clairvoyant: return feedforward_[t];
  }
  return Vector::Zero(m_);
}

Matrix Policy::gain(std::size_t t) const {
  check_step(t, horizon_);
  switch (kind_) {
    case PolicyKind::OnlineTimeVarying:
    case PolicyKind::OfflineOptimal: return riccati_->finite.K[t];
    case PolicyKind::OnlineSteadyState: return riccati_->steady.K;
    case PolicyKind::ConstantLinear: return constant_gain_;
    case PolicyKind::Clairvoyant: break;
  }
  return Matrix::Zero(m_, n_);
}

Policy make_online(const SystemSpec& spec, std::shared_ptr<const RiccatiSolution> ric, bool steady) {
  check_riccati(spec, ric);
  Policy policy(steady ? PolicyKind::OnlineSteadyState : PolicyKind::OnlineTimeVarying, spec.n(), spec.m());
  if (!steady) {
    if (ric->finite.horizon() == 0) throw LqrError(ErrorKind::HorizonMismatch, "no finite-horizon gains");
    policy.horizon_ = ric->finite.horizon();
  }
  policy.riccati_ = std::move(ric);
  return policy;
}

Policy make_constant_linear(const SystemSpec& spec, Matrix K) {
  if (K.rows() != spec.m() || K.cols() != spec.n()) {
    throw LqrError(ErrorKind::DimensionMismatch, "gain must be m x n");
  }
  Policy policy(PolicyKind::ConstantLinear, spec.n(), spec.m());
  policy.constant_gain_ = std::move(K);
  return policy;
}

OfflineAux build_offline_aux(const SystemSpec& spec, const FiniteHorizonRiccati& ric, const NoiseSequence& w) {
  const std::size_t T = ric.horizon();
  if (w.size() != T) {
    throw LqrError(ErrorKind::HorizonMismatch, "noise length " + std::to_string(w.size()) +
                                                   " differs from Riccati horizon " + std::to_string(T));
  }
  const Matrix& A = spec.A();
  const Matrix& B = spec.B();
  OfflineAux aux;
  aux.v.assign(T + 1, Vector::Zero(spec.n()));
  double q = 0.0;
  for (std::size_t t = T; t-- > 0;) {
    if (w[t].size() != spec.n()) throw LqrError(ErrorKind::DimensionMismatch, "noise vector has wrong dimension");
    const Vector& v_next = aux.v[t + 1];
    const Matrix closed_loop = A - B * ric.K[t];
    aux.v[t] = 2.0 * A.transpose() * (ric.S[t] * w[t]) + closed_loop.transpose() * v_next;

    // Constant term of the cost-to-go. Uses (I − B(R + BᵀPB)⁻¹BᵀP) in place
    // of P⁻¹S so that a singular P_{t+1} is allowed.
    const Vector Btv = B.transpose() * v_next;
    const Vector BtPw = B.transpose() * (ric.P[t + 1] * w[t]);
    const Vector transported = w[t] - B * ric.inner[t].solve(BtPw);
    q += w[t].dot(ric.S[t] * w[t]) + v_next.dot(transported) - 0.25 * Btv.dot(ric.inner[t].solve(Btv));
  }
  aux.q0 = q;
  return aux;
}

Policy make_offline_optimal(const SystemSpec& spec, std::shared_ptr<const RiccatiSolution> ric,
                            const NoiseSequence& w) {
  check_riccati(spec, ric);
  OfflineAux aux = build_offline_aux(spec, ric->finite, w);
  const std::size_t T = ric->finite.horizon();
  Policy policy(PolicyKind::OfflineOptimal, spec.n(), spec.m());
  policy.horizon_ = T;
  policy.feedforward_.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    const Vector drive = ric->finite.P[t + 1] * w[t] + 0.5 * aux.v[t + 1];
    policy.feedforward_.push_back(ric->finite.inner[t].solve(spec.B().transpose() * drive));
  }
  policy.aux_ = std::move(aux);
  policy.riccati_ = std::move(ric);
  return policy;
}

Policy make_clairvoyant(const SystemSpec& spec, std::vector<Vector> controls) {
  if (controls.empty()) throw LqrError(ErrorKind::HorizonMismatch, "empty control sequence");
  for (const auto& u : controls) {
    if (u.size() != spec.m()) throw LqrError(ErrorKind::DimensionMismatch, "control has wrong dimension");
  }
  Policy policy(PolicyKind::Clairvoyant, spec.n(), spec.m());
  policy.horizon_ = controls.size();
  policy.feedforward_ = std::move(controls);
  return policy;
}

}  // namespace lqr
