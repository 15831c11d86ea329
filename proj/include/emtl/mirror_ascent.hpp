// The bandit player: constrained exponentiated-gradient ascent over the
// KL ball P = {p on the simplex : sum_t p_t log(T p_t) <= sqrt(rho)}.
// Each step computes p'_t proportional to exp((log p_t + eta_p * rate_t)/(1+lambda))
// where lambda >= 0 is the smallest damping that keeps the update feasible,
// found by doubling a bracket and bisecting.
#pragma once

#include <vector>

#include "emtl/types.hpp"

namespace emtl {

struct PlayerState {
  WeightVector p;
  double lambda_last = 0.0;
  double kl_to_uniform = 0.0;
};

// KL divergence of p from the uniform distribution: sum_t p_t log(T p_t).
double kl_to_uniform(const WeightVector& p);

// Uniform player over T >= 2 tasks.
PlayerState player_init(std::size_t num_tasks);

// One ascent step driven by the per-task weighted relative rates. The output
// stays on the simplex and inside the KL ball for any rho > 0; when the
// undamped update is already feasible it is returned exactly with lambda = 0.
PlayerState player_step(const PlayerState& state,
                        const std::vector<double>& weighted_rates,
                        double eta_p, double rho);

}  // namespace emtl
