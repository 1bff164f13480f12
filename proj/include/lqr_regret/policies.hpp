#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "lqr_regret/model.hpp"
#include "lqr_regret/riccati.hpp"
#include "lqr_regret/types.hpp"

namespace lqr {

enum class PolicyKind { OnlineTimeVarying, OnlineSteadyState, ConstantLinear, OfflineOptimal, Clairvoyant };

// Auxiliary backward pass of the clairvoyant controller for one noise
// realization: v[t] for t = 0..T with v[T] = 0, and the scalar accumulator
// q0 = optimal offline cost from x_0 = 0.
struct OfflineAux {
  std::vector<Vector> v;
  double q0 = 0.0;
};

// Controller evaluated by the rollout engine. Causal kinds see only (t, x_t);
// offline kinds receive the whole noise sequence at construction and never at
// action time.
class Policy {
 public:
  PolicyKind kind() const noexcept { return kind_; }
  // Steps the policy was built for; nullopt for horizon-free kinds.
  std::optional<std::size_t> horizon() const noexcept { return horizon_; }
  Eigen::Index state_dim() const noexcept { return n_; }
  Eigen::Index control_dim() const noexcept { return m_; }

  // Action at step t given the current state.
  Vector act(std::size_t t, const Vector& x) const;

  // Feedback gain applied at step t (zero for Clairvoyant).
  Matrix gain(std::size_t t) const;

  const std::shared_ptr<const RiccatiSolution>& riccati() const noexcept { return riccati_; }
  // Offline kinds only.
  const OfflineAux* offline_aux() const noexcept { return aux_ ? &*aux_ : nullptr; }

 private:
  friend Policy make_online(const SystemSpec&, std::shared_ptr<const RiccatiSolution>, bool);
  friend Policy make_constant_linear(const SystemSpec&, Matrix);
  friend Policy make_offline_optimal(const SystemSpec&, std::shared_ptr<const RiccatiSolution>,
                                     const NoiseSequence&);
  friend Policy make_clairvoyant(const SystemSpec&, std::vector<Vector>);

  Policy(PolicyKind kind, Eigen::Index n, Eigen::Index m) : kind_(kind), n_(n), m_(m) {}

  PolicyKind kind_;
  Eigen::Index n_, m_;
  std::optional<std::size_t> horizon_;
  std::shared_ptr<const RiccatiSolution> riccati_;
  Matrix constant_gain_;
  // OfflineOptimal: (R + BᵀP_{t+1}B)⁻¹Bᵀ(P_{t+1}w_t + ½v_{t+1}); Clairvoyant: open-loop u_t.
  std::vector<Vector> feedforward_;
  std::optional<OfflineAux> aux_;
};

// u_t = −K_t x_t (time varying) or u_t = −K_∞ x_t (steady).
Policy make_online(const SystemSpec& spec, std::shared_ptr<const RiccatiSolution> ric, bool steady);

// u_t = −K x_t.
Policy make_constant_linear(const SystemSpec& spec, Matrix K);

// v_t = 2AᵀS_t w_t + (A − BK_t)ᵀ v_{t+1}, v_T = 0.
OfflineAux build_offline_aux(const SystemSpec& spec, const FiniteHorizonRiccati& ric, const NoiseSequence& w);

// u_t* = −K_t x_t − (R + BᵀP_{t+1}B)⁻¹Bᵀ(P_{t+1}w_t + ½v_{t+1}).
Policy make_offline_optimal(const SystemSpec& spec, std::shared_ptr<const RiccatiSolution> ric,
                            const NoiseSequence& w);

// Replays a fixed control sequence (e.g. the stacked-QP minimizer).
Policy make_clairvoyant(const SystemSpec& spec, std::vector<Vector> controls);

}  // namespace lqr
