// Training loop, experiment grid, and the Theorem-1 style rate-gap
// diagnostic. Runs are deterministic given their configuration; the grid
// executes them concurrently with per-slot error capture and slot-ordered
// results, so its output does not depend on the parallelism degree.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "emtl/problems.hpp"
#include "emtl/types.hpp"

namespace emtl {

// Raised when a strategy or problem error aborts a run; carries the step.
class RunError : public std::runtime_error {
 public:
  RunError(long step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what),
        step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

struct RunConfig {
  Problem problem;
  std::string method;
  EmtlConfig emtl;
  std::uint64_t seed = 0;
  long record_every = 1;
  std::string output_path;  // trajectory CSV written here when non-empty
  ParamVector init;         // empty: use the problem's first init point
  bool balance_losses = false;  // banditmtl running-mean loss normalization
  // Optional step-size schedule: halve lr after every 40% of the budget
  // (so a full run sees lr, lr/2, lr/4). Off by default.
  bool lr_halving = false;
};

// Trajectory convention: record 0 is the initial state (theta, its losses,
// and the weights the method would apply there); record k >= 1 holds theta
// and losses after the k-th update together with the alpha/p/w/rates that
// produced that update. The last step is always recorded.
struct RunResult {
  std::vector<TrajectoryRecord> trajectory;
  std::vector<double> final_losses;  // losses of the last record
  double final_avg_loss = 0.0;
  double distance_to_reference = 0.0;  // from returned_theta, 0 if no reference
  bool converged = false;  // ||sum_t w_t g_t|| < 1e-8 seen within the budget
  // Best-checkpoint snapshot: lowest uniform-average train loss, or lowest
  // held-out average when the problem has a held-out split. The full step
  // budget always executes; this is checkpoint selection, not termination.
  ParamVector returned_theta;
  double best_metric = 0.0;
};

RunResult run(const RunConfig& config);

struct GridOutcome {
  std::optional<RunResult> result;
  std::string error;  // non-empty when the slot failed
};

// Runs every config (results ordered as inputs) with up to `parallelism`
// concurrent workers. Individual failures are recorded per slot and do not
// stop the grid.
std::vector<GridOutcome> run_grid(const std::vector<RunConfig>& configs,
                                  unsigned parallelism);

struct Theorem1Config {
  SynthregConfig synthreg;  // base dataset config; seed replaced per entry
  std::vector<double> rhos = {0.1, 0.3, 0.5, 0.8, 1.0, 1.2};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  EmtlConfig emtl;  // rho replaced per entry
};

struct Theorem1Entry {
  double rho = 0.0;
  std::uint64_t seed = 0;
  double variance = 0.0;  // weighted-rate spread at the returned theta (train)
  double gap = 0.0;       // (1/T) sum_t (held-out raw rate - train raw rate)
  double best_heldout_avg = 0.0;
  bool converged = false;
};

struct Theorem1Report {
  std::vector<Theorem1Entry> entries;
  double rank_correlation = 0.0;          // spearman(variance, gap)
  double rho_variance_correlation = 0.0;  // spearman(rho, variance)
  double rho_gap_correlation = 0.0;       // spearman(rho, gap)
};

// Trains emtl on the train split for every (rho, seed), then reports the
// relative-rate variance at the returned parameters and the held-out minus
// train rate gap, with rank correlations across all entries. This is a
// diagnostic: values are reported, no direction is asserted here.
Theorem1Report theorem1_diagnostic(const Theorem1Config& cfg);

// Spearman rank correlation with average ranks on ties; 0 when either input
// is constant.
double spearman_rank_correlation(const std::vector<double>& a,
                                 const std::vector<double>& b);

// Loss-space scatter plot ((L_1, L_2) per record, log-log) for two-task
// problems; one polyline per series plus optional reference marker.
struct SvgSeries {
  std::string label;                            // method name, keys the color
  std::vector<std::pair<double, double>> points;  // (L_1, L_2) per record
};

void write_loss_scatter_svg(
    const std::string& path, const std::vector<SvgSeries>& series,
    const std::optional<std::pair<double, double>>& reference);

}  // namespace emtl
