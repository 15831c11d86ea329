#include "emtl/mirror_ascent.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace emtl {
namespace {

// Floor applied to probabilities before taking logs; keeps a task whose mass
// underflowed recoverable instead of producing -Inf scores.
constexpr double kProbFloor = 1e-300;
constexpr double kKlGapTol = 1e-10;

// Damped exponentiated update at a given lambda, normalized with a
// max-subtraction so the exponentials cannot overflow.
std::vector<double> damped_update(const std::vector<double>& scores,
                                  double lambda) {
  const double inv = 1.0 / (1.0 + lambda);
  double top = scores.front() * inv;
  for (double s : scores) top = std::max(top, s * inv);
  std::vector<double> p(scores.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    p[t] = std::exp(scores[t] * inv - top);
    sum += p[t];
  }
  for (double& x : p) x /= sum;
  return p;
}

double kl_of(const std::vector<double>& p) {
  const double T = static_cast<double>(p.size());
  double kl = 0.0;
  for (double x : p) {
    if (x > 0.0) kl += x * std::log(T * x);
  }
  return kl;
}

}  // namespace

double kl_to_uniform(const WeightVector& p) {
  p.validate();
  return kl_of(p.weights);
}

PlayerState player_init(std::size_t num_tasks) {
  if (num_tasks < 2) {
    throw InvalidInputError("player_init: need at least 2 tasks");
  }
  PlayerState state;
  state.p = WeightVector::uniform(num_tasks);
  return state;
}

PlayerState player_step(const PlayerState& state,
                        const std::vector<double>& weighted_rates,
                        double eta_p, double rho) {
  state.p.validate();
  if (weighted_rates.size() != state.p.size()) {
    throw InvalidInputError("player_step: rates size mismatch");
  }
  for (double r : weighted_rates) {
    if (!std::isfinite(r)) {
      throw InvalidInputError("player_step: non-finite rate");
    }
  }
  if (!(eta_p >= 0.0) || !std::isfinite(eta_p)) {
    throw InvalidInputError("player_step: eta_p must be >= 0");
  }
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw InvalidInputError("player_step: rho must be > 0");
  }

  const std::size_t T = state.p.size();
  const double budget = std::sqrt(rho);
  std::vector<double> scores(T);
  for (std::size_t t = 0; t < T; ++t) {
    scores[t] = std::log(std::max(state.p[t], kProbFloor)) +
                eta_p * weighted_rates[t];
  }

  PlayerState next;
  // Undamped shortcut: if the plain exponentiated-gradient update is already
  // inside the KL ball it is the answer, exactly as computed.
  std::vector<double> p = damped_update(scores, 0.0);
  double kl = kl_of(p);
  double lambda = 0.0;
  if (kl > budget) {
    // The damped update approaches uniform (KL -> 0) as lambda grows, so a
    // doubling search always brackets a feasible damping.
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> p_hi = damped_update(scores, hi);
    double kl_hi = kl_of(p_hi);
    while (kl_hi > budget) {
      lo = hi;
      hi *= 2.0;
      p_hi = damped_update(scores, hi);
      kl_hi = kl_of(p_hi);
    }
    // Bisect toward the constraint boundary, keeping the feasible side.
    for (int it = 0; it < 500 && budget - kl_hi > kKlGapTol; ++it) {
      const double mid = 0.5 * (lo + hi);
      std::vector<double> p_mid = damped_update(scores, mid);
      const double kl_mid = kl_of(p_mid);
      if (kl_mid > budget) {
        lo = mid;
      } else {
        hi = mid;
        p_hi = std::move(p_mid);
        kl_hi = kl_mid;
      }
    }
    p = std::move(p_hi);
    kl = kl_hi;
    lambda = hi;
  }

  next.p.weights = std::move(p);
  next.lambda_last = lambda;
  next.kl_to_uniform = kl;
  return next;
}

}  // namespace emtl
