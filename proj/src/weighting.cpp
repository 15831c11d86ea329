#include "emtl/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "emtl/core.hpp"
#include "emtl/minnorm.hpp"

namespace emtl {
namespace {

std::vector<ParamVector> collect_gradients(const GradientSet& evals) {
  std::vector<ParamVector> gs;
  gs.reserve(evals.num_tasks());
  for (const TaskEvaluation& te : evals.per_task) gs.push_back(te.gradient);
  return gs;
}

std::vector<double> losses_of(const GradientSet& evals) {
  std::vector<double> ls;
  ls.reserve(evals.num_tasks());
  for (const TaskEvaluation& te : evals.per_task) ls.push_back(te.loss);
  return ls;
}

// Solve the dense system M x = b by Gaussian elimination with partial
// pivoting. Returns false when the matrix is numerically singular.
bool solve_linear(std::vector<std::vector<double>> M, std::vector<double> b,
                  std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(M[r][col]) > std::abs(M[pivot][col])) pivot = r;
    }
    if (std::abs(M[pivot][col]) < 1e-12) return false;
    std::swap(M[col], M[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = M[r][col] / M[col][col];
      for (std::size_t c = col; c < n; ++c) M[r][c] -= f * M[col][c];
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= M[i][c] * x[c];
    x[i] = s / M[i][i];
  }
  return true;
}

}  // namespace

std::pair<StrategyOutput, PlayerState> emtl_step(const GradientSet& evals,
                                                 const PlayerState& player,
                                                 const EmtlConfig& cfg) {
  evals.validate();
  cfg.validate();
  const MinNormSolution mn = minnorm_fw(collect_gradients(evals));
  const RelativeRates rates =
      relative_rates(evals, mn.alpha, cfg.grad_norm_floor);
  const PlayerState next =
      player_step(player, rates.weighted, cfg.eta_p, cfg.rho);

  StrategyOutput out;
  out.alpha = mn.alpha;
  out.p = next.p;
  out.effective_weights =
      effective_weights(mn.alpha, next.p, gradient_norms(evals), cfg.epsilon,
                        cfg.grad_norm_floor);
  out.diagnostics["variance"] = rates.variance;
  out.diagnostics["lambda"] = next.lambda_last;
  out.diagnostics["min_norm_residual"] = std::sqrt(mn.squared_norm);
  return {std::move(out), next};
}

StrategyOutput linear_scalarization(const GradientSet& evals) {
  evals.validate();
  const std::size_t T = evals.num_tasks();
  StrategyOutput out;
  out.alpha = WeightVector::uniform(T);
  out.p = WeightVector::uniform(T);
  out.effective_weights.assign(T, 1.0 / static_cast<double>(T));
  return out;
}

StrategyOutput mgda_step(const GradientSet& evals, double grad_norm_floor) {
  evals.validate();
  const MinNormSolution mn = minnorm_fw(collect_gradients(evals));
  const WeightVector p = WeightVector::uniform(evals.num_tasks());
  StrategyOutput out;
  out.alpha = mn.alpha;
  out.p = p;
  // Route through the shared merge at epsilon = 1 so the emtl degeneration
  // (epsilon = 1 reduces to this method) is a bitwise identity.
  out.effective_weights = effective_weights(mn.alpha, p, gradient_norms(evals),
                                            1.0, grad_norm_floor);
  out.diagnostics["min_norm_residual"] = std::sqrt(mn.squared_norm);
  return out;
}

StrategyOutput imtl_g_step(const GradientSet& evals, double grad_norm_floor) {
  evals.validate();
  const std::size_t T = evals.num_tasks();
  const std::size_t D = evals.dim();
  const std::vector<double> norms = gradient_norms(evals);
  for (double n : norms) {
    if (n <= grad_norm_floor) {
      throw InvalidInputError(
          "imtl_g_step: gradient norm at or below the floor");
    }
  }
  std::vector<ParamVector> units(T, ParamVector(D));
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < D; ++i) {
      units[t][i] = evals.per_task[t].gradient[i] / norms[t];
    }
  }
  auto dot = [](const ParamVector& a, const ParamVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };

  // Unknowns w_2..w_T with w_1 = 1 - sum of the rest; equal-projection
  // conditions d.(u_1 - u_t) = 0 for t = 2..T give the (T-1)x(T-1) system
  //   sum_j (g_j - g_1).(u_1 - u_t) w_j = g_1.(u_t - u_1).
  const std::size_t n = T - 1;
  std::vector<std::vector<double>> M(n, std::vector<double>(n));
  std::vector<double> rhs(n);
  ParamVector diff_u(D), diff_g(D);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t i = 0; i < D; ++i) diff_u[i] = units[0][i] - units[t][i];
    rhs[t - 1] = -dot(evals.per_task[0].gradient, diff_u);
    for (std::size_t j = 1; j < T; ++j) {
      for (std::size_t i = 0; i < D; ++i) {
        diff_g[i] = evals.per_task[j].gradient[i] - evals.per_task[0].gradient[i];
      }
      M[t - 1][j - 1] = dot(diff_g, diff_u);
    }
  }

  StrategyOutput out;
  out.p = WeightVector::uniform(T);
  std::vector<double> w(T);
  std::vector<double> tail;
  bool fallback = !solve_linear(std::move(M), std::move(rhs), tail);
  if (!fallback) {
    w[0] = 1.0;
    for (std::size_t j = 1; j < T; ++j) {
      w[j] = tail[j - 1];
      w[0] -= tail[j - 1];
    }
    for (double& x : w) {
      if (x < -1e-10) {
        throw InvalidInputError("imtl_g_step: negative weight from the solve");
      }
      x = std::max(x, 0.0);
    }
  } else {
    w.assign(T, 1.0 / static_cast<double>(T));
  }
  out.alpha.weights = w;
  out.effective_weights = std::move(w);
  out.diagnostics["fallback"] = fallback ? 1.0 : 0.0;
  return out;
}

std::pair<StrategyOutput, PlayerState> banditmtl_step(
    const GradientSet& evals, const PlayerState& player,
    const EmtlConfig& cfg) {
  return banditmtl_step(evals, losses_of(evals), player, cfg);
}

std::pair<StrategyOutput, PlayerState> banditmtl_step(
    const GradientSet& evals, const std::vector<double>& player_losses,
    const PlayerState& player, const EmtlConfig& cfg) {
  evals.validate();
  cfg.validate();
  if (player_losses.size() != evals.num_tasks()) {
    throw InvalidInputError("banditmtl_step: player loss size mismatch");
  }
  const std::size_t T = evals.num_tasks();
  const PlayerState next =
      player_step(player, player_losses, cfg.eta_p, cfg.rho);
  StrategyOutput out;
  out.alpha = WeightVector::uniform(T);
  out.p = next.p;
  out.effective_weights.resize(T);
  const double inv_T = 1.0 / static_cast<double>(T);
  for (std::size_t t = 0; t < T; ++t) {
    out.effective_weights[t] =
        inv_T * (cfg.epsilon + (1.0 - cfg.epsilon) * next.p[t]);
  }
  out.diagnostics["lambda"] = next.lambda_last;
  return {std::move(out), next};
}

namespace {

class LsStrategy final : public Strategy {
 public:
  StrategyOutput step(const GradientSet& evals) override {
    return linear_scalarization(evals);
  }
  const std::string& name() const override {
    static const std::string n = "ls";
    return n;
  }
};

class MgdaStrategy final : public Strategy {
 public:
  explicit MgdaStrategy(double floor) : floor_(floor) {}
  StrategyOutput step(const GradientSet& evals) override {
    return mgda_step(evals, floor_);
  }
  const std::string& name() const override {
    static const std::string n = "mgda";
    return n;
  }

 private:
  double floor_;
};

class ImtlGStrategy final : public Strategy {
 public:
  explicit ImtlGStrategy(double floor) : floor_(floor) {}
  StrategyOutput step(const GradientSet& evals) override {
    return imtl_g_step(evals, floor_);
  }
  const std::string& name() const override {
    static const std::string n = "imtl-g";
    return n;
  }

 private:
  double floor_;
};

class EmtlStrategy final : public Strategy {
 public:
  EmtlStrategy(const EmtlConfig& cfg, std::size_t num_tasks)
      : cfg_(cfg), player_(player_init(num_tasks)) {}
  StrategyOutput step(const GradientSet& evals) override {
    auto [out, next] = emtl_step(evals, player_, cfg_);
    player_ = std::move(next);
    return out;
  }
  const std::string& name() const override {
    static const std::string n = "emtl";
    return n;
  }

 private:
  EmtlConfig cfg_;
  PlayerState player_;
};

class BanditMtlStrategy final : public Strategy {
 public:
  BanditMtlStrategy(const EmtlConfig& cfg, std::size_t num_tasks,
                    bool balance_losses)
      : cfg_(cfg),
        player_(player_init(num_tasks)),
        balance_losses_(balance_losses),
        running_mean_(num_tasks, 0.0) {}

  StrategyOutput step(const GradientSet& evals) override {
    std::vector<double> inputs = losses_of(evals);
    if (balance_losses_) {
      ++count_;
      for (std::size_t t = 0; t < inputs.size(); ++t) {
        running_mean_[t] +=
            (inputs[t] - running_mean_[t]) / static_cast<double>(count_);
        inputs[t] /= std::max(running_mean_[t], 1e-12);
      }
    }
    auto [out, next] = banditmtl_step(evals, inputs, player_, cfg_);
    player_ = std::move(next);
    return out;
  }
  const std::string& name() const override {
    static const std::string n = "banditmtl";
    return n;
  }

 private:
  EmtlConfig cfg_;
  PlayerState player_;
  bool balance_losses_;
  std::vector<double> running_mean_;
  long count_ = 0;
};

}  // namespace

const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names = {"ls", "mgda", "imtl-g",
                                                 "banditmtl", "emtl"};
  return names;
}

bool is_registered_strategy(const std::string& name) {
  const auto& names = strategy_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::unique_ptr<Strategy> make_strategy(const std::string& name,
                                        const EmtlConfig& cfg,
                                        std::size_t num_tasks,
                                        bool balance_losses) {
  cfg.validate();
  if (num_tasks < 2) {
    throw InvalidInputError("make_strategy: need at least 2 tasks");
  }
  if (name == "ls") return std::make_unique<LsStrategy>();
  if (name == "mgda") return std::make_unique<MgdaStrategy>(cfg.grad_norm_floor);
  if (name == "imtl-g") {
    return std::make_unique<ImtlGStrategy>(cfg.grad_norm_floor);
  }
  if (name == "banditmtl") {
    return std::make_unique<BanditMtlStrategy>(cfg, num_tasks, balance_losses);
  }
  if (name == "emtl") return std::make_unique<EmtlStrategy>(cfg, num_tasks);
  throw InvalidInputError("unknown strategy name: " + name);
}

}  // namespace emtl
