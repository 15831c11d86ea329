// Min-norm point of the convex hull of task gradients -- the gradient
// balancing subroutine (MGDA). A closed form covers two tasks; the general
// solver is a Frank-Wolfe iteration with away and pairwise candidate steps so
// the optimality certificate min_t g_t.d >= ||d||^2 - tol is actually reached
// at desk scale.
#pragma once

#include <vector>

#include "emtl/types.hpp"

namespace emtl {

struct MinNormSolution {
  WeightVector alpha;      // convex coefficients over the gradients
  ParamVector combined;    // sum_t alpha_t * g_t
  double squared_norm = 0.0;
  int iterations_used = 0;
};

// Closed-form min-norm point of the segment [g1, g2]:
//   gamma = clamp(((g2-g1).g2) / ||g1-g2||^2, 0, 1), alpha = (gamma, 1-gamma).
// Identical inputs return alpha = (0.5, 0.5).
MinNormSolution minnorm_2(const ParamVector& g1, const ParamVector& g2);

// Frank-Wolfe solver over T >= 2 gradients. Starts from uniform alpha; each
// iteration evaluates a toward step, an away step, and a pairwise step (each
// with exact line search) and keeps the best. Stops when the duality gap
// max_t (d.d - g_t.d) drops to tol or max_iter is reached; non-convergence is
// not an error (best iterate returned). All-zero input returns uniform alpha.
MinNormSolution minnorm_fw(const std::vector<ParamVector>& gradients,
                           int max_iter = 250, double tol = 1e-9);

}  // namespace emtl
