#include "emtl/core.hpp"

#include <algorithm>
#include <cmath>

namespace emtl {

double gradient_norm(const ParamVector& g) {
  if (!all_finite(g)) {
    throw InvalidInputError("gradient_norm: non-finite input");
  }
  double sum_sq = 0.0;
  for (double x : g) sum_sq += x * x;
  return std::sqrt(sum_sq);
}

std::vector<double> gradient_norms(const GradientSet& evals) {
  std::vector<double> norms;
  norms.reserve(evals.num_tasks());
  for (const TaskEvaluation& te : evals.per_task) {
    norms.push_back(gradient_norm(te.gradient));
  }
  return norms;
}

RelativeRates relative_rates(const GradientSet& evals, const WeightVector& alpha,
                             double floor) {
  evals.validate();
  alpha.validate();
  if (alpha.size() != evals.num_tasks()) {
    throw InvalidInputError("relative_rates: alpha size mismatch");
  }
  if (!(floor > 0.0)) {
    throw InvalidInputError("relative_rates: floor must be > 0");
  }
  const std::size_t T = evals.num_tasks();
  RelativeRates rates;
  rates.raw.reserve(T);
  rates.weighted.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    const TaskEvaluation& te = evals.per_task[t];
    const double norm = std::max(gradient_norm(te.gradient), floor);
    rates.raw.push_back(te.loss / norm);
    rates.weighted.push_back(alpha[t] * rates.raw.back());
  }
  double mean = 0.0;
  for (double r : rates.weighted) mean += r;
  mean /= static_cast<double>(T);
  double mean_sq_dev = 0.0;
  for (double r : rates.weighted) mean_sq_dev += (r - mean) * (r - mean);
  rates.variance = std::sqrt(mean_sq_dev / static_cast<double>(T));
  return rates;
}

std::vector<double> effective_weights(const WeightVector& alpha,
                                      const WeightVector& p,
                                      const std::vector<double>& grad_norms,
                                      double epsilon, double floor) {
  alpha.validate();
  p.validate();
  if (alpha.size() != p.size() || alpha.size() != grad_norms.size()) {
    throw InvalidInputError("effective_weights: size mismatch");
  }
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw InvalidInputError("effective_weights: epsilon must be in [0,1]");
  }
  const std::size_t T = alpha.size();
  const double inv_T = 1.0 / static_cast<double>(T);
  std::vector<double> w(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double denom = std::max(grad_norms[t], floor);
    w[t] = inv_T * (epsilon * alpha[t] + (1.0 - epsilon) * p[t] * alpha[t] / denom);
  }
  return w;
}

}  // namespace emtl
