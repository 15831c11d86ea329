// Core value types shared by every solver and the harness: parameter vectors,
// per-task evaluations, simplex weight vectors, relative rates, and run
// configuration. All types are immutable value objects once constructed;
// validation helpers throw InvalidInputError on contract violations.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace emtl {

// Dense real vector of shared parameters (and gradients on them).
using ParamVector = std::vector<double>;

// Thrown when an operation's preconditions are violated (bad dimensions,
// non-finite values, out-of-range configuration, unknown names).
class InvalidInputError : public std::invalid_argument {
 public:
  explicit InvalidInputError(const std::string& what)
      : std::invalid_argument(what) {}
};

inline bool all_finite(const ParamVector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// One task's loss value and gradient w.r.t. the shared parameters.
struct TaskEvaluation {
  double loss = 0.0;
  ParamVector gradient;
};

// Per-task losses and raw gradients for a single optimization step.
struct GradientSet {
  std::vector<TaskEvaluation> per_task;
  long step_index = 0;

  std::size_t num_tasks() const { return per_task.size(); }
  std::size_t dim() const {
    return per_task.empty() ? 0 : per_task.front().gradient.size();
  }

  // Enforces T >= 2, equal gradient dimensions, and finiteness.
  void validate() const {
    if (per_task.size() < 2) {
      throw InvalidInputError("GradientSet requires at least 2 tasks");
    }
    const std::size_t d = per_task.front().gradient.size();
    if (d == 0) {
      throw InvalidInputError("GradientSet gradients must be non-empty");
    }
    for (const TaskEvaluation& te : per_task) {
      if (te.gradient.size() != d) {
        throw InvalidInputError("GradientSet gradients differ in dimension");
      }
      if (!std::isfinite(te.loss) || !all_finite(te.gradient)) {
        throw InvalidInputError("GradientSet contains non-finite values");
      }
    }
  }
};

// Nonnegative weights on the T-simplex. Used both for the balancing weights
// alpha (from the min-norm solver) and the player weights p (mirror ascent).
struct WeightVector {
  std::vector<double> weights;

  static WeightVector uniform(std::size_t num_tasks) {
    WeightVector w;
    w.weights.assign(num_tasks, 1.0 / static_cast<double>(num_tasks));
    return w;
  }

  std::size_t size() const { return weights.size(); }
  double operator[](std::size_t i) const { return weights[i]; }

  // Enforces entries >= 0 and sum == 1 within 1e-12.
  void validate() const {
    if (weights.empty()) {
      throw InvalidInputError("WeightVector is empty");
    }
    double sum = 0.0;
    for (double w : weights) {
      if (!std::isfinite(w) || w < 0.0) {
        throw InvalidInputError("WeightVector entries must be finite and >= 0");
      }
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw InvalidInputError("WeightVector does not sum to 1 (tol 1e-12)");
    }
  }
};

// Per-task relative rates: raw Rr_t = L_t/||g_t|| and weighted
// R~r_t = alpha_t * Rr_t, plus the population standard deviation of the
// weighted entries (the variance statistic the player regularizes).
struct RelativeRates {
  std::vector<double> raw;
  std::vector<double> weighted;
  double variance = 0.0;
};

// Algorithm configuration. rho bounds the player's KL ball (the constraint is
// KL <= sqrt(rho)); eta_p is the player step size; epsilon merges the
// balancing direction with the player-weighted direction; lr/steps drive the
// outer descent loop; grad_norm_floor clamps gradient-norm denominators.
struct EmtlConfig {
  double rho = 0.5;
  double eta_p = 0.5;
  double epsilon = 0.2;
  double lr = 1e-2;
  long steps = 2000;
  double grad_norm_floor = 1e-12;

  void validate() const {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
      throw InvalidInputError("EmtlConfig: rho must be > 0");
    }
    if (!(eta_p >= 0.0) || !std::isfinite(eta_p)) {
      throw InvalidInputError("EmtlConfig: eta_p must be >= 0");
    }
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
      throw InvalidInputError("EmtlConfig: epsilon must be in [0,1]");
    }
    if (!(lr > 0.0) || !std::isfinite(lr)) {
      throw InvalidInputError("EmtlConfig: lr must be > 0");
    }
    if (steps < 0) {
      throw InvalidInputError("EmtlConfig: steps must be >= 0");
    }
    if (!(grad_norm_floor > 0.0)) {
      throw InvalidInputError("EmtlConfig: grad_norm_floor must be > 0");
    }
  }
};

// Per-step snapshot recorded by the harness.
struct TrajectoryRecord {
  long step = 0;
  ParamVector theta;
  std::vector<double> losses;
  std::vector<double> alpha;
  std::vector<double> p;
  std::vector<double> effective_weights;
  RelativeRates rates;
  // Mean loss plus rho times the raw-rate spread; recorded for analysis only,
  // never optimized directly.
  double objective_diagnostic = 0.0;
};

}  // namespace emtl
