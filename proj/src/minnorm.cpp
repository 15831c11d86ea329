#include "emtl/minnorm.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace emtl {
namespace {

double dot(const ParamVector& a, const ParamVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void validate_gradients(const std::vector<ParamVector>& gradients) {
  if (gradients.size() < 2) {
    throw InvalidInputError("minnorm: need at least 2 gradients");
  }
  const std::size_t d = gradients.front().size();
  if (d == 0) {
    throw InvalidInputError("minnorm: gradients must be non-empty");
  }
  for (const ParamVector& g : gradients) {
    if (g.size() != d) {
      throw InvalidInputError("minnorm: gradient dimensions differ");
    }
    if (!all_finite(g)) {
      throw InvalidInputError("minnorm: non-finite gradient");
    }
  }
}

MinNormSolution finish(const std::vector<ParamVector>& gradients,
                       std::vector<double> alpha, int iterations) {
  const std::size_t d = gradients.front().size();
  MinNormSolution sol;
  sol.combined.assign(d, 0.0);
  for (std::size_t t = 0; t < gradients.size(); ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      sol.combined[i] += alpha[t] * gradients[t][i];
    }
  }
  sol.squared_norm = dot(sol.combined, sol.combined);
  sol.alpha.weights = std::move(alpha);
  sol.iterations_used = iterations;
  return sol;
}

}  // namespace

MinNormSolution minnorm_2(const ParamVector& g1, const ParamVector& g2) {
  validate_gradients({g1, g2});
  ParamVector diff(g1.size());
  for (std::size_t i = 0; i < g1.size(); ++i) diff[i] = g2[i] - g1[i];
  const double denom = dot(diff, diff);
  double gamma = 0.5;  // identical inputs: any point of the (degenerate) hull
  if (denom > 0.0) {
    gamma = std::clamp(dot(diff, g2) / denom, 0.0, 1.0);
  }
  return finish({g1, g2}, {gamma, 1.0 - gamma}, 0);
}

MinNormSolution minnorm_fw(const std::vector<ParamVector>& gradients,
                           int max_iter, double tol) {
  validate_gradients(gradients);
  if (max_iter < 1 || !(tol > 0.0)) {
    throw InvalidInputError("minnorm_fw: max_iter must be >= 1 and tol > 0");
  }
  const std::size_t T = gradients.size();
  const std::size_t D = gradients.front().size();

  std::vector<double> alpha(T, 1.0 / static_cast<double>(T));
  ParamVector d(D);
  std::vector<double> dots(T);
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    // Fresh combination each iteration keeps d and alpha consistent.
    std::fill(d.begin(), d.end(), 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      if (alpha[t] == 0.0) continue;
      for (std::size_t i = 0; i < D; ++i) d[i] += alpha[t] * gradients[t][i];
    }
    const double dd = dot(d, d);
    for (std::size_t t = 0; t < T; ++t) dots[t] = dot(gradients[t], d);

    // Toward vertex: smallest projection (lowest index on ties). Away vertex:
    // largest projection among the support.
    std::size_t s = 0;
    for (std::size_t t = 1; t < T; ++t) {
      if (dots[t] < dots[s]) s = t;
    }
    if (dd - dots[s] <= tol) break;  // optimality certificate satisfied

    std::size_t v = T;
    for (std::size_t t = 0; t < T; ++t) {
      if (alpha[t] > 0.0 && (v == T || dots[t] > dots[v])) v = t;
    }

    // Candidate moves alpha -> alpha + gamma * direction; the objective along
    // each is ||d + gamma*u||^2 = dd + 2*gamma*(d.u) + gamma^2*(u.u) with
    // u the corresponding change of the combination. Exact line search per
    // candidate, then keep the lowest resulting norm.
    struct Candidate {
      double value = std::numeric_limits<double>::infinity();
      double gamma = 0.0;
    };
    auto line_search = [dd](double du, double uu, double gamma_max) {
      Candidate c;
      if (!(gamma_max > 0.0)) return c;
      double gamma = gamma_max;
      if (uu > 0.0) gamma = std::clamp(-du / uu, 0.0, gamma_max);
      c.gamma = gamma;
      c.value = dd + 2.0 * gamma * du + gamma * gamma * uu;
      return c;
    };

    ParamVector u(D);
    // Toward step: u = g_s - d, gamma in [0, 1].
    for (std::size_t i = 0; i < D; ++i) u[i] = gradients[s][i] - d[i];
    Candidate toward = line_search(dot(d, u), dot(u, u), 1.0);

    // Away step: u = d - g_v, gamma in [0, alpha_v/(1-alpha_v)].
    Candidate away;
    if (v < T && alpha[v] < 1.0) {
      for (std::size_t i = 0; i < D; ++i) u[i] = d[i] - gradients[v][i];
      away = line_search(dot(d, u), dot(u, u), alpha[v] / (1.0 - alpha[v]));
    }

    // Pairwise step: u = g_s - g_v, gamma in [0, alpha_v].
    Candidate pairwise;
    if (v < T && v != s) {
      for (std::size_t i = 0; i < D; ++i) {
        u[i] = gradients[s][i] - gradients[v][i];
      }
      pairwise = line_search(dot(d, u), dot(u, u), alpha[v]);
    }

    if (toward.value <= away.value && toward.value <= pairwise.value) {
      const double g = toward.gamma;
      for (std::size_t t = 0; t < T; ++t) alpha[t] *= 1.0 - g;
      alpha[s] += g;
    } else if (away.value <= pairwise.value) {
      const double g = away.gamma;
      for (std::size_t t = 0; t < T; ++t) alpha[t] *= 1.0 + g;
      alpha[v] = std::max(alpha[v] - g, 0.0);
    } else {
      const double g = pairwise.gamma;
      alpha[s] += g;
      alpha[v] = std::max(alpha[v] - g, 0.0);
    }

    // Drop numerically dead coordinates and renormalize.
    double sum = 0.0;
    for (double& a : alpha) {
      if (a <= 1e-15) a = 0.0;
      sum += a;
    }
    if (sum > 0.0) {
      for (double& a : alpha) a /= sum;
    } else {
      alpha.assign(T, 1.0 / static_cast<double>(T));
    }
  }
  return finish(gradients, std::move(alpha), iter);
}

}  // namespace emtl
