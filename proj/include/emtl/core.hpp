// Numeric primitives shared by the weighting strategies: gradient norms,
// relative rates, and the merged per-task effective weights.
#pragma once

#include <vector>

#include "emtl/types.hpp"

namespace emtl {

// Euclidean norm. Throws InvalidInputError on non-finite input.
double gradient_norm(const ParamVector& g);

// Euclidean norms of every task gradient in the set.
std::vector<double> gradient_norms(const GradientSet& evals);

// Raw rates Rr_t = L_t / max(||g_t||, floor), weighted rates
// R~r_t = alpha_t * Rr_t, and the population standard deviation of the
// weighted rates sqrt((1/T) * sum_t (R~r_t - mean)^2).
RelativeRates relative_rates(const GradientSet& evals, const WeightVector& alpha,
                             double floor);

// Merged per-task weights
//   w_t = (1/T) * (epsilon * alpha_t + (1-epsilon) * p_t * alpha_t / max(||g_t||, floor)).
// alpha, p and the gradient norms are constants of the step; the caller's
// descent direction is sum_t w_t * g_t.
std::vector<double> effective_weights(const WeightVector& alpha,
                                      const WeightVector& p,
                                      const std::vector<double>& grad_norms,
                                      double epsilon, double floor);

}  // namespace emtl
