#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lqr_regret/model.hpp"
#include "lqr_regret/policies.hpp"
#include "lqr_regret/types.hpp"

namespace lqr {

struct Trajectory {
  std::vector<Vector> states;    // x_0 .. x_T, x_0 = 0
  std::vector<Vector> controls;  // u_0 .. u_{T-1}
  std::vector<double> step_costs;
  double terminal_cost = 0.0;
  double total = 0.0;
  double time_averaged = 0.0;
};

// Runs the policy from x_0 = 0. The policy sees (t, x_t) only; w_t is applied
// after the action is chosen.
Trajectory rollout(const SystemSpec& spec, const Policy& policy, const NoiseSequence& w);

struct MonteCarloSummary {
  std::size_t trials = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  double ci95_halfwidth = 0.0;
  std::vector<double> per_trial;
};

MonteCarloSummary summarize(std::vector<double> per_trial);

// Builds the policy for one trial; offline kinds use the realized noise.
using PolicyFactory = std::function<Policy(const NoiseSequence& w, std::uint64_t trial_seed)>;

// Trial k draws its noise with seed base_seed + k and reports the
// time-averaged rollout cost.
MonteCarloSummary monte_carlo(const SystemSpec& spec, const PolicyFactory& factory, const NoiseModel& model,
                              Horizon T, std::size_t trials, std::uint64_t base_seed, std::size_t jobs = 1);

// Offline total ≤ T·(best linear cost) ≤ T·cost_T(K_∞), each with relative
// slack 1e-12.
struct SandwichCheck {
  double offline_total = 0.0;
  double linear_total = 0.0;
  double dare_total = 0.0;
  bool holds = false;
};

SandwichCheck check_sandwich(double offline_total, double linear_time_averaged, double dare_time_averaged,
                             std::size_t T);

}  // namespace lqr
