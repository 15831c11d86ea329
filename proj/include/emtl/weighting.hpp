// Strategy registry: maps a GradientSet to per-task effective weights for the
// theta update. Contains the variance-regularized method (emtl) and the
// comparison baselines (ls, mgda, imtl-g, banditmtl). The free functions are
// pure; the Strategy class wraps them with the per-run player state.
#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "emtl/mirror_ascent.hpp"
#include "emtl/types.hpp"

namespace emtl {

struct StrategyOutput {
  WeightVector alpha;                    // balancing weights (uniform for LBMs)
  WeightVector p;                        // player weights (uniform if unused)
  std::vector<double> effective_weights; // w_t applied to g_t in the theta step
  std::map<std::string, double> diagnostics;
};

// One step of the full pipeline: alpha from the min-norm solver, weighted
// relative rates, a player update, and the merged weights
// w_t = (1/T)(eps*alpha_t + (1-eps)*p_t*alpha_t/max(||g_t||, floor)).
std::pair<StrategyOutput, PlayerState> emtl_step(const GradientSet& evals,
                                                 const PlayerState& player,
                                                 const EmtlConfig& cfg);

// Uniform weights 1/T regardless of the input.
StrategyOutput linear_scalarization(const GradientSet& evals);

// Min-norm balancing only: w = alpha/T, matching emtl_step at epsilon = 1
// bit for bit.
StrategyOutput mgda_step(const GradientSet& evals,
                         double grad_norm_floor = 1e-12);

// Impartial gradient weighting: solve for simplex-summing w such that the
// aggregate d = sum_t w_t g_t has equal scalar projection onto every unit
// task gradient. Singular systems fall back to uniform weights (flagged in
// diagnostics); weights below -1e-10 are an error.
StrategyOutput imtl_g_step(const GradientSet& evals,
                           double grad_norm_floor = 1e-12);

// Loss-driven bandit baseline: identical player machinery, but the player
// consumes raw losses, alpha stays uniform, and
// w_t = (1/T)(eps + (1-eps)*p_t).
std::pair<StrategyOutput, PlayerState> banditmtl_step(
    const GradientSet& evals, const PlayerState& player, const EmtlConfig& cfg);

// As above with explicit player inputs, so a wrapper can substitute
// running-mean-balanced losses.
std::pair<StrategyOutput, PlayerState> banditmtl_step(
    const GradientSet& evals, const std::vector<double>& player_losses,
    const PlayerState& player, const EmtlConfig& cfg);

// Per-run stateful strategy interface used by the training loop.
class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual StrategyOutput step(const GradientSet& evals) = 0;
  virtual const std::string& name() const = 0;
};

// Exact CLI strategy names: "ls", "mgda", "imtl-g", "banditmtl", "emtl".
const std::vector<std::string>& strategy_names();
bool is_registered_strategy(const std::string& name);

// Instantiate a fresh strategy (with fresh player state where applicable).
// balance_losses enables banditmtl's optional running-mean loss normalization.
std::unique_ptr<Strategy> make_strategy(const std::string& name,
                                        const EmtlConfig& cfg,
                                        std::size_t num_tasks,
                                        bool balance_losses = false);

}  // namespace emtl
