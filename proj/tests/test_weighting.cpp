#include <cmath>
#include <vector>

#include "doctest.h"
#include "emtl/core.hpp"
#include "emtl/minnorm.hpp"
#include "emtl/mirror_ascent.hpp"
#include "emtl/problems.hpp"
#include "emtl/types.hpp"
#include "emtl/weighting.hpp"

namespace {

using namespace emtl;

GradientSet make_evals(const std::vector<double>& losses,
                       const std::vector<ParamVector>& gradients) {
  GradientSet evals;
  evals.per_task.resize(losses.size());
  for (std::size_t t = 0; t < losses.size(); ++t) {
    evals.per_task[t].loss = losses[t];
    evals.per_task[t].gradient = gradients[t];
  }
  return evals;
}

double dot(const ParamVector& a, const ParamVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

ParamVector aggregate(const GradientSet& evals,
                      const std::vector<double>& w) {
  ParamVector d(evals.dim(), 0.0);
  for (std::size_t t = 0; t < evals.num_tasks(); ++t) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] += w[t] * evals.per_task[t].gradient[i];
    }
  }
  return d;
}

TEST_SUITE("weighting") {

TEST_CASE("emtl_step full pipeline on the symmetric first step") {
  // g1=(1,0), g2=(0,1), L=(1,1), eps=0, uniform player:
  // alpha=(0.5,0.5), weighted rates (0.5,0.5), p'=(0.5,0.5),
  // w_t = (1/2)(0.5*0.5/1) = 0.125.
  const GradientSet evals =
      make_evals({1.0, 1.0}, {{1.0, 0.0}, {0.0, 1.0}});
  EmtlConfig cfg;
  cfg.epsilon = 0.0;
  const auto [out, next] = emtl_step(evals, player_init(2), cfg);
  CHECK(out.alpha[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.alpha[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.p[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.p[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.effective_weights[0] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(out.effective_weights[1] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(out.diagnostics.at("variance") == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.diagnostics.at("lambda") == 0.0);
  CHECK(next.p[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("emtl_step at epsilon 1 matches mgda bit for bit") {
  Rng rng(23);
  EmtlConfig cfg;
  cfg.epsilon = 1.0;
  PlayerState player = player_init(3);
  for (int k = 0; k < 10; ++k) {
    GradientSet evals;
    evals.per_task.resize(3);
    for (TaskEvaluation& te : evals.per_task) {
      te.loss = std::abs(rng.normal()) + 0.2;
      te.gradient.resize(5);
      for (double& g : te.gradient) g = rng.normal();
    }
    const auto [out, next] = emtl_step(evals, player, cfg);
    const StrategyOutput mgda = mgda_step(evals, cfg.grad_norm_floor);
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(out.effective_weights[t] == mgda.effective_weights[t]);
      CHECK(out.alpha[t] == mgda.alpha[t]);
      CHECK(out.effective_weights[t] ==
            doctest::Approx(out.alpha[t] / 3.0).epsilon(1e-15));
    }
    player = next;  // a drifting player must not leak into the weights
  }
}

TEST_CASE("emtl_step identical tasks stay symmetric") {
  const GradientSet evals =
      make_evals({2.0, 2.0}, {{1.0, 1.0}, {1.0, 1.0}});
  EmtlConfig cfg;
  const auto [out, next] = emtl_step(evals, player_init(2), cfg);
  CHECK(out.alpha[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(next.p[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.effective_weights[0] ==
        doctest::Approx(out.effective_weights[1]).epsilon(1e-14));
}

TEST_CASE("emtl_step is deterministic") {
  const GradientSet evals =
      make_evals({1.0, 3.0}, {{1.0, 0.2}, {-0.3, 1.0}});
  EmtlConfig cfg;
  const PlayerState player = player_init(2);
  const auto [a, pa] = emtl_step(evals, player, cfg);
  const auto [b, pb] = emtl_step(evals, player, cfg);
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(a.effective_weights[t] == b.effective_weights[t]);
    CHECK(pa.p[t] == pb.p[t]);
  }
  CHECK(pa.lambda_last == pb.lambda_last);
}

TEST_CASE("linear_scalarization is uniform and input-independent") {
  const GradientSet two = make_evals({1.0, 9.0}, {{1.0, 0.0}, {0.0, 5.0}});
  const StrategyOutput a = linear_scalarization(two);
  CHECK(a.effective_weights[0] == 0.5);
  CHECK(a.effective_weights[1] == 0.5);
  const GradientSet three = make_evals(
      {7.0, 1.0, 4.0}, {{1.0, 0.0}, {0.0, 5.0}, {2.0, 2.0}});
  const StrategyOutput b = linear_scalarization(three);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(b.effective_weights[t] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  const GradientSet other = make_evals({0.5, 0.5}, {{9.0, 9.0}, {1.0, 1.0}});
  const StrategyOutput c = linear_scalarization(other);
  CHECK(c.effective_weights[0] == a.effective_weights[0]);
}

TEST_CASE("mgda_step opposing gradients are Pareto stationary") {
  const GradientSet evals =
      make_evals({1.0, 1.0}, {{1.0, 0.0}, {-1.0, 0.0}});
  const StrategyOutput out = mgda_step(evals);
  CHECK(out.alpha[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.diagnostics.at("min_norm_residual") ==
        doctest::Approx(0.0).epsilon(1e-12));
  const ParamVector d = aggregate(evals, out.alpha.weights);
  CHECK(std::abs(d[0]) < 1e-12);
}

TEST_CASE("mgda_step colinear pair keeps only the short vertex") {
  const GradientSet evals =
      make_evals({1.0, 1.0}, {{0.3, 0.4}, {3.0, 4.0}});
  const StrategyOutput out = mgda_step(evals);
  CHECK(out.alpha[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(out.alpha[1] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(out.effective_weights[0] ==
        doctest::Approx(out.alpha[0] / 2.0).epsilon(1e-15));
}

TEST_CASE("mgda_step T=3 alpha matches the simplex grid oracle") {
  const GradientSet evals = make_evals(
      {1.0, 1.0, 1.0},
      {{1.4, -0.3, 0.2}, {-0.5, 1.1, 0.4}, {0.2, 0.3, 1.6}});
  const StrategyOutput out = mgda_step(evals);
  // Brute force over the 2-simplex at resolution 1e-3 via the Gram matrix.
  double G[3][3];
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      G[a][b] = dot(evals.per_task[a].gradient, evals.per_task[b].gradient);
    }
  }
  double best_val = 1e300;
  double best[3] = {0, 0, 0};
  const int R = 1000;
  for (int i = 0; i <= R; ++i) {
    for (int j = 0; j <= R - i; ++j) {
      const double a0 = static_cast<double>(i) / R;
      const double a1 = static_cast<double>(j) / R;
      const double a2 = 1.0 - a0 - a1;
      const double val = a0 * a0 * G[0][0] + a1 * a1 * G[1][1] +
                         a2 * a2 * G[2][2] + 2 * a0 * a1 * G[0][1] +
                         2 * a0 * a2 * G[0][2] + 2 * a1 * a2 * G[1][2];
      if (val < best_val) {
        best_val = val;
        best[0] = a0;
        best[1] = a1;
        best[2] = a2;
      }
    }
  }
  for (int t = 0; t < 3; ++t) {
    CHECK(std::abs(out.alpha[t] - best[t]) < 1e-3);
  }
}

TEST_CASE("imtl_g_step symmetric orthogonal pair") {
  const GradientSet evals =
      make_evals({1.0, 1.0}, {{1.0, 0.0}, {0.0, 1.0}});
  const StrategyOutput out = imtl_g_step(evals);
  CHECK(out.effective_weights[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.effective_weights[1] == doctest::Approx(0.5).epsilon(1e-12));
  const ParamVector d = aggregate(evals, out.effective_weights);
  CHECK(d[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(0.5).epsilon(1e-12));
  // Equal scalar projection onto both unit gradients (value 0.5 here).
  CHECK(std::abs(dot(d, {1.0, 0.0}) - dot(d, {0.0, 1.0})) <= 1e-8);
  CHECK(out.diagnostics.at("fallback") == 0.0);
}

TEST_CASE("imtl_g_step identical gradients fall back to uniform") {
  const GradientSet evals =
      make_evals({1.0, 1.0}, {{2.0, 1.0}, {2.0, 1.0}});
  const StrategyOutput out = imtl_g_step(evals);
  CHECK(out.diagnostics.at("fallback") == 1.0);
  CHECK(out.effective_weights[0] == 0.5);
  const ParamVector d = aggregate(evals, out.effective_weights);
  CHECK(d[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(d[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("imtl_g_step anisotropic pair solves the 1x1 system") {
  // g1=(2,0), g2=(0,1): equal projection forces 2*w1 = w2, so w=(1/3, 2/3)
  // and d=(2/3, 2/3).
  const GradientSet evals =
      make_evals({1.0, 1.0}, {{2.0, 0.0}, {0.0, 1.0}});
  const StrategyOutput out = imtl_g_step(evals);
  CHECK(out.effective_weights[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(out.effective_weights[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  const ParamVector d = aggregate(evals, out.effective_weights);
  CHECK(d[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("imtl_g_step equal-projection certificate on random instances") {
  Rng rng(29);
  for (int k = 0; k < 50; ++k) {
    const std::size_t T = 2 + (k % 2);
    GradientSet evals;
    evals.per_task.resize(T);
    for (TaskEvaluation& te : evals.per_task) {
      te.loss = 1.0;
      te.gradient.resize(4);
      for (double& g : te.gradient) g = rng.normal();
    }
    StrategyOutput out;
    try {
      out = imtl_g_step(evals);
    } catch (const InvalidInputError&) {
      continue;  // negative-weight instances are rejected by contract
    }
    if (out.diagnostics.at("fallback") == 1.0) continue;
    const ParamVector d = aggregate(evals, out.effective_weights);
    std::vector<double> projections(T);
    for (std::size_t t = 0; t < T; ++t) {
      const ParamVector& g = evals.per_task[t].gradient;
      projections[t] = dot(d, g) / std::sqrt(dot(g, g));
    }
    for (std::size_t t = 1; t < T; ++t) {
      CHECK(std::abs(projections[t] - projections[0]) <= 1e-8);
    }
    double sum = 0.0;
    for (double w : out.effective_weights) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("imtl_g_step rejects a genuinely negative solve") {
  // Frozen random instance whose equal-projection solution carries a weight
  // below -1e-10; the contract is to error rather than flip gradient signs.
  const GradientSet evals = make_evals(
      {1.0, 1.0, 1.0},
      {{-0.79655118036345984, -2.0618171755385011, -0.75959822783573205},
       {0.1218434267653795, 0.67637277472564383, 0.0018413049558559874},
       {1.3196015128244138, 0.51521080222922377, -1.4823926538791663}});
  CHECK_THROWS_AS(imtl_g_step(evals), InvalidInputError);
}

TEST_CASE("imtl_g_step rejects gradients at the norm floor") {
  const GradientSet evals =
      make_evals({1.0, 1.0}, {{0.0, 0.0}, {0.0, 1.0}});
  CHECK_THROWS_AS(imtl_g_step(evals), InvalidInputError);
}

TEST_CASE("banditmtl_step equal losses keep the player uniform") {
  const GradientSet evals =
      make_evals({2.0, 2.0}, {{1.0, 0.0}, {0.0, 1.0}});
  EmtlConfig cfg;
  const auto [out, next] = banditmtl_step(evals, player_init(2), cfg);
  CHECK(next.p[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(out.alpha[0] == 0.5);  // alpha stays uniform for the loss player
  CHECK(out.effective_weights[0] ==
        doctest::Approx(out.effective_weights[1]).epsilon(1e-14));
}

TEST_CASE("banditmtl_step concentrates on the large-loss task") {
  const GradientSet evals =
      make_evals({100.0, 1.0}, {{1.0, 0.0}, {0.0, 1.0}});
  EmtlConfig cfg;
  PlayerState player = player_init(2);
  for (int k = 0; k < 5; ++k) {
    auto [out, next] = banditmtl_step(evals, player, cfg);
    player = next;
  }
  CHECK(player.p[0] > 0.9);
  CHECK(player.kl_to_uniform <= std::sqrt(cfg.rho) + 1e-9);
  // The merged weight mirrors the bias: w_t = (1/T)(eps + (1-eps) p_t).
  const auto [out, next] = banditmtl_step(evals, player, cfg);
  CHECK(out.effective_weights[0] > out.effective_weights[1]);
  CHECK(out.effective_weights[0] ==
        doctest::Approx(0.5 * (cfg.epsilon +
                               (1.0 - cfg.epsilon) * next.p[0]))
            .epsilon(1e-14));
}

TEST_CASE("banditmtl_step with zero player step keeps weights equal") {
  const GradientSet evals =
      make_evals({100.0, 1.0}, {{1.0, 0.0}, {0.0, 1.0}});
  EmtlConfig cfg;
  cfg.eta_p = 0.0;
  const auto [out, next] = banditmtl_step(evals, player_init(2), cfg);
  CHECK(next.p[0] == doctest::Approx(0.5).epsilon(1e-14));
  // All tasks get the same coefficient, i.e. the scalarization direction.
  CHECK(out.effective_weights[0] ==
        doctest::Approx(out.effective_weights[1]).epsilon(1e-14));
}

TEST_CASE("banditmtl_step explicit player losses override the raw ones") {
  const GradientSet evals =
      make_evals({100.0, 1.0}, {{1.0, 0.0}, {0.0, 1.0}});
  EmtlConfig cfg;
  const auto [raw_out, raw_next] =
      banditmtl_step(evals, player_init(2), cfg);
  const auto [same_out, same_next] =
      banditmtl_step(evals, {100.0, 1.0}, player_init(2), cfg);
  CHECK(raw_next.p[0] == same_next.p[0]);
  const auto [flat_out, flat_next] =
      banditmtl_step(evals, {1.0, 1.0}, player_init(2), cfg);
  CHECK(flat_next.p[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(banditmtl_step(evals, {1.0}, player_init(2), cfg),
                  InvalidInputError);
}

TEST_CASE("strategy registry names are exact") {
  const std::vector<std::string> expected = {"ls", "mgda", "imtl-g",
                                             "banditmtl", "emtl"};
  CHECK(strategy_names() == expected);
  for (const std::string& name : expected) {
    CHECK(is_registered_strategy(name));
  }
  CHECK_FALSE(is_registered_strategy("nash"));
  CHECK_FALSE(is_registered_strategy("EMTL"));
}

TEST_CASE("make_strategy builds every registered strategy") {
  EmtlConfig cfg;
  const GradientSet evals =
      make_evals({1.0, 2.0}, {{1.0, 0.1}, {-0.2, 1.0}});
  for (const std::string& name : strategy_names()) {
    auto strategy = make_strategy(name, cfg, 2);
    REQUIRE(strategy != nullptr);
    CHECK(strategy->name() == name);
    const StrategyOutput out = strategy->step(evals);
    REQUIRE(out.effective_weights.size() == 2);
    for (double w : out.effective_weights) {
      CHECK(w >= 0.0);
      CHECK(std::isfinite(w));
    }
  }
  CHECK_THROWS_AS(make_strategy("unknown", cfg, 2), InvalidInputError);
  CHECK_THROWS_AS(make_strategy("emtl", cfg, 1), InvalidInputError);
}

TEST_CASE("stateful emtl strategy carries its player across steps") {
  EmtlConfig cfg;
  cfg.epsilon = 0.0;
  auto strategy = make_strategy("emtl", cfg, 2);
  // Constant unequal weighted rates push p away from uniform step by step.
  const GradientSet evals =
      make_evals({4.0, 1.0}, {{1.0, 0.0}, {0.0, 1.0}});
  const StrategyOutput first = strategy->step(evals);
  const StrategyOutput second = strategy->step(evals);
  CHECK(second.p[0] > first.p[0]);
}

TEST_CASE("banditmtl running-mean balancing neutralizes the first step") {
  EmtlConfig cfg;
  const GradientSet evals =
      make_evals({100.0, 1.0}, {{1.0, 0.0}, {0.0, 1.0}});
  auto balanced = make_strategy("banditmtl", cfg, 2, true);
  const StrategyOutput out = balanced->step(evals);
  // First-step running means equal the losses themselves, so the player
  // sees (1, 1) and stays uniform.
  CHECK(out.p[0] == doctest::Approx(0.5).epsilon(1e-14));
  auto unbalanced = make_strategy("banditmtl", cfg, 2, false);
  const StrategyOutput raw = unbalanced->step(evals);
  CHECK(raw.p[0] > 0.5);
}

TEST_CASE("scaling one task jointly leaves its weighted-rate input unchanged") {
  EmtlConfig cfg;
  cfg.epsilon = 0.0;
  const GradientSet base =
      make_evals({1.0, 3.0}, {{1.0, 0.4}, {-0.5, 1.0}});
  GradientSet scaled = base;
  const double c = 50.0;
  scaled.per_task[0].loss *= c;
  for (double& g : scaled.per_task[0].gradient) g *= c;
  const RelativeRates rates_base =
      relative_rates(base, WeightVector::uniform(2), cfg.grad_norm_floor);
  const RelativeRates rates_scaled =
      relative_rates(scaled, WeightVector::uniform(2), cfg.grad_norm_floor);
  CHECK(rates_scaled.raw[0] ==
        doctest::Approx(rates_base.raw[0]).epsilon(1e-12));
  // alpha may move (min-norm is norm sensitive); the raw player input does
  // not.
  const auto [out_base, p_base] = emtl_step(base, player_init(2), cfg);
  const auto [out_scaled, p_scaled] = emtl_step(scaled, player_init(2), cfg);
  CHECK(out_scaled.alpha[0] < out_base.alpha[0]);
}

}  // TEST_SUITE

}  // namespace
