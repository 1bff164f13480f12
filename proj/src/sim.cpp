#include "lqr_regret/sim.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "lqr_regret/errors.hpp"
#include "lqr_regret/parallel.hpp"

namespace lqr {

Trajectory rollout(const SystemSpec& spec, const Policy& policy, const NoiseSequence& w) {
  const std::size_t T = w.size();
  if (T == 0) throw LqrError(ErrorKind::HorizonMismatch, "empty noise sequence");
  if (policy.horizon() && *policy.horizon() != T) {
    throw LqrError(ErrorKind::HorizonMismatch, "policy horizon " + std::to_string(*policy.horizon()) +
                                                   " differs from noise length " + std::to_string(T));
  }
  if (policy.state_dim() != spec.n() || policy.control_dim() != spec.m()) {
    throw LqrError(ErrorKind::DimensionMismatch, "policy does not match the system dimensions");
  }

  Trajectory traj;
  traj.states.reserve(T + 1);
  traj.controls.reserve(T);
  traj.step_costs.reserve(T);
  traj.states.emplace_back(Vector::Zero(spec.n()));
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const Vector& x = traj.states.back();
    Vector u = policy.act(t, x);
    if (!u.allFinite()) throw LqrError(ErrorKind::NonFiniteState, "non-finite control at step " + std::to_string(t));
    if (w[t].size() != spec.n()) throw LqrError(ErrorKind::DimensionMismatch, "noise vector has wrong dimension");
    const double cost = x.dot(spec.Q() * x) + u.dot(spec.R() * u);
    Vector next = spec.A() * x + spec.B() * u + w[t];
    if (!next.allFinite()) throw LqrError(ErrorKind::NonFiniteState, "non-finite state at step " + std::to_string(t + 1));
    traj.step_costs.push_back(cost);
    total += cost;
    traj.controls.push_back(std::move(u));
    traj.states.push_back(std::move(next));
  }
  const Vector& xT = traj.states.back();
  traj.terminal_cost = xT.dot(spec.Qf() * xT);
  traj.total = total + traj.terminal_cost;
  traj.time_averaged = traj.total / static_cast<double>(T);
  return traj;
}

MonteCarloSummary summarize(std::vector<double> per_trial) {
  MonteCarloSummary out;
  out.trials = per_trial.size();
  if (out.trials == 0) return out;
  out.mean = std::accumulate(per_trial.begin(), per_trial.end(), 0.0) / static_cast<double>(out.trials);
  if (out.trials > 1) {
    double ss = 0.0;
    for (double v : per_trial) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(out.trials - 1));
  }
  out.ci95_halfwidth = 1.96 * out.std / std::sqrt(static_cast<double>(out.trials));
  out.per_trial = std::move(per_trial);
  return out;
}

MonteCarloSummary monte_carlo(const SystemSpec& spec, const PolicyFactory& factory, const NoiseModel& model,
                              Horizon T, std::size_t trials, std::uint64_t base_seed, std::size_t jobs) {
  if (trials < 2) throw LqrError(ErrorKind::InvalidArgument, "monte_carlo needs at least 2 trials");
  if (model.dim() != spec.n()) throw LqrError(ErrorKind::DimensionMismatch, "noise dimension differs from state");
  std::vector<double> per_trial(trials);
  parallel_for(trials, jobs, [&](std::size_t k) {
    const std::uint64_t seed = base_seed + k;
    try {
      const NoiseSequence w = sample_noise(model, T, seed);
      per_trial[k] = rollout(spec, factory(w, seed), w).time_averaged;
    } catch (const LqrError& e) {
      throw LqrError(e.kind(), "trial " + std::to_string(k) + ": " + e.what());
    }
  });
  return summarize(std::move(per_trial));
}

SandwichCheck check_sandwich(double offline_total, double linear_time_averaged, double dare_time_averaged,
                             std::size_t T) {
  SandwichCheck out;
  const double steps = static_cast<double>(T);
  out.offline_total = offline_total;
  out.linear_total = linear_time_averaged * steps;
  out.dare_total = dare_time_averaged * steps;
  auto leq = [](double lhs, double rhs) { return lhs <= rhs + 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)}); };
  out.holds = leq(out.offline_total, out.linear_total) && leq(out.linear_total, out.dare_total);
  return out;
}

}  // namespace lqr
