// Desk-scale synthetic multi-task problems with analytic losses and
// gradients: a two-task anisotropic quadratic with a controllable loss-scale
// knob, and a seeded multi-task linear regression with a train/held-out
// split. A central-difference oracle backs the gradient tests.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "emtl/types.hpp"

namespace emtl {

struct ProblemSpec {
  std::string name;
  std::size_t dim = 0;
  std::size_t num_tasks = 0;
  std::vector<double> scale_factors;
  std::vector<ParamVector> init_points;
  std::optional<ParamVector> pareto_reference;  // minimizer of the average loss

  void validate() const;
};

// ---------------------------------------------------------------------------
// quad2: L_t(theta) = 0.5 * s_t * (theta - a_t)' A_t (theta - a_t) with
// a_1 = (-2,0), a_2 = (2,0), A_1 = diag(1,4), A_2 = diag(4,1). The Pareto
// front is the segment between the two minimizers; the scale factors stretch
// the losses without moving it.
// ---------------------------------------------------------------------------

// Spec with five default init points (+-3, +-3) and (0, 3) and the closed-form
// average-loss minimizer as pareto_reference.
ProblemSpec make_quad2(const std::vector<double>& scale_factors = {1.0, 100.0});

// Analytic losses and gradients; errors if spec does not describe quad2.
GradientSet quad2_eval(const ParamVector& theta, const ProblemSpec& spec);

// Minimizer of (1/2)(s_1 L_1 + s_2 L_2)'s average, solving
// (s1 A1 + s2 A2) theta = s1 A1 a1 + s2 A2 a2 (diagonal system).
ParamVector quad2_average_minimizer(const std::vector<double>& scale_factors);

// ---------------------------------------------------------------------------
// synthreg: shared linear map W (flattened into theta, row-major h x d_in)
// from inputs to a hidden space read out by fixed orthonormal per-task
// vectors r_t. Targets are y_t = c_t * (v_t . x + noise_std * xi). The data
// is fully seeded and regenerated on construction, never shipped.
// ---------------------------------------------------------------------------

struct SynthregConfig {
  std::size_t input_dim = 6;
  std::size_t hidden_dim = 4;  // must be >= num_tasks (orthonormal readouts)
  std::size_t num_tasks = 4;
  std::size_t train_size = 192;
  std::size_t heldout_size = 192;
  double noise_std = 0.05;
  std::vector<double> scale_factors = {1.0, 2.0, 5.0, 10.0};
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Split { kTrain, kHeldout };

// Contiguous sample range within one split; end is exclusive.
struct DatasetSlice {
  Split split = Split::kTrain;
  std::size_t begin = 0;
  std::size_t end = 0;
};

class SynthregProblem {
 public:
  explicit SynthregProblem(const SynthregConfig& cfg);

  const ProblemSpec& spec() const { return spec_; }
  const SynthregConfig& config() const { return cfg_; }
  // vec(W*) with r_t' W* = c_t v_t'; the zero-noise realizable optimum.
  const ParamVector& generating_theta() const { return w_star_; }
  std::size_t split_size(Split split) const;

  // Per-task mean-squared-error losses and analytic gradients on the slice.
  GradientSet eval(const ParamVector& theta, const DatasetSlice& slice) const;
  // Convenience: the whole split as one batch.
  GradientSet eval_split(const ParamVector& theta, Split split) const;

  const std::vector<std::vector<double>>& readouts() const { return readouts_; }
  const std::vector<std::vector<double>>& task_directions() const {
    return dirs_;
  }

 private:
  SynthregConfig cfg_;
  ProblemSpec spec_;
  std::vector<double> x_;                  // (train+heldout) x input_dim
  std::vector<std::vector<double>> y_;     // per task, train+heldout targets
  std::vector<std::vector<double>> readouts_;  // T x hidden, orthonormal rows
  std::vector<std::vector<double>> dirs_;      // T x input, unit rows
  ParamVector w_star_;
};

// ---------------------------------------------------------------------------
// Testing oracle and harness-facing wrapper.
// ---------------------------------------------------------------------------

// Central differences (L(theta + h e_i) - L(theta - h e_i)) / (2h).
ParamVector fd_gradient(const std::function<double(const ParamVector&)>& loss,
                        const ParamVector& theta, double h);

// Runtime problem handle used by the training loop: a spec plus evaluation
// closures. eval_heldout is empty for problems without a held-out split.
struct Problem {
  ProblemSpec spec;
  std::function<GradientSet(const ParamVector&)> eval_train;
  std::function<GradientSet(const ParamVector&)> eval_heldout;
  std::shared_ptr<const SynthregProblem> synthreg;  // set for synthreg only
};

Problem make_quad2_problem(const std::vector<double>& scale_factors = {1.0,
                                                                       100.0});
Problem make_synthreg_problem(const SynthregConfig& cfg);

// Deterministic normal/uniform generator (fixed Box-Muller over mt19937_64)
// so seeded datasets and test instances are identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform();  // [0, 1)
  double normal();   // standard normal

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace emtl
