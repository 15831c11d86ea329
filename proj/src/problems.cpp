#include "emtl/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace emtl {
namespace {

// Fixed quad2 geometry.
constexpr double kA1[2] = {-2.0, 0.0};
constexpr double kA2[2] = {2.0, 0.0};
constexpr double kDiag1[2] = {1.0, 4.0};
constexpr double kDiag2[2] = {4.0, 1.0};

}  // namespace

void ProblemSpec::validate() const {
  if (name.empty() || dim == 0 || num_tasks < 2) {
    throw InvalidInputError("ProblemSpec: name/dim/num_tasks invalid");
  }
  if (scale_factors.size() != num_tasks) {
    throw InvalidInputError("ProblemSpec: scale_factors length != num_tasks");
  }
  for (double s : scale_factors) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw InvalidInputError("ProblemSpec: scale factors must be > 0");
    }
  }
  if (init_points.empty()) {
    throw InvalidInputError("ProblemSpec: init_points must be non-empty");
  }
  for (const ParamVector& p : init_points) {
    if (p.size() != dim || !all_finite(p)) {
      throw InvalidInputError("ProblemSpec: bad init point");
    }
  }
  if (pareto_reference && pareto_reference->size() != dim) {
    throw InvalidInputError("ProblemSpec: pareto_reference dimension mismatch");
  }
}

ParamVector quad2_average_minimizer(const std::vector<double>& scale_factors) {
  if (scale_factors.size() != 2) {
    throw InvalidInputError("quad2_average_minimizer: need 2 scale factors");
  }
  const double s1 = scale_factors[0];
  const double s2 = scale_factors[1];
  // (s1 A1 + s2 A2) theta = s1 A1 a1 + s2 A2 a2, componentwise because both
  // matrices are diagonal.
  ParamVector theta(2);
  for (int i = 0; i < 2; ++i) {
    const double lhs = s1 * kDiag1[i] + s2 * kDiag2[i];
    const double rhs = s1 * kDiag1[i] * kA1[i] + s2 * kDiag2[i] * kA2[i];
    theta[i] = rhs / lhs;
  }
  return theta;
}

ProblemSpec make_quad2(const std::vector<double>& scale_factors) {
  ProblemSpec spec;
  spec.name = "quad2";
  spec.dim = 2;
  spec.num_tasks = 2;
  spec.scale_factors = scale_factors;
  spec.init_points = {{-3.0, -3.0}, {-3.0, 3.0}, {3.0, -3.0},
                      {3.0, 3.0},   {0.0, 3.0}};
  spec.pareto_reference = quad2_average_minimizer(scale_factors);
  spec.validate();
  return spec;
}

GradientSet quad2_eval(const ParamVector& theta, const ProblemSpec& spec) {
  spec.validate();
  if (spec.name != "quad2" || spec.dim != 2 || spec.num_tasks != 2) {
    throw InvalidInputError("quad2_eval: spec does not describe quad2");
  }
  if (theta.size() != 2 || !all_finite(theta)) {
    throw InvalidInputError("quad2_eval: theta must be a finite 2-vector");
  }
  GradientSet out;
  out.per_task.resize(2);
  const double* centers[2] = {kA1, kA2};
  const double* diags[2] = {kDiag1, kDiag2};
  for (int t = 0; t < 2; ++t) {
    const double s = spec.scale_factors[t];
    double loss = 0.0;
    ParamVector grad(2);
    for (int i = 0; i < 2; ++i) {
      const double delta = theta[i] - centers[t][i];
      loss += 0.5 * s * diags[t][i] * delta * delta;
      grad[i] = s * diags[t][i] * delta;
    }
    out.per_task[t].loss = loss;
    out.per_task[t].gradient = std::move(grad);
  }
  return out;
}

void SynthregConfig::validate() const {
  if (num_tasks < 2) {
    throw InvalidInputError("SynthregConfig: need at least 2 tasks");
  }
  if (hidden_dim < num_tasks) {
    throw InvalidInputError(
        "SynthregConfig: hidden_dim must be >= num_tasks for orthonormal "
        "readouts");
  }
  if (input_dim == 0 || train_size == 0) {
    throw InvalidInputError("SynthregConfig: input_dim and train_size must be > 0");
  }
  if (scale_factors.size() != num_tasks) {
    throw InvalidInputError("SynthregConfig: scale_factors length != num_tasks");
  }
  for (double c : scale_factors) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw InvalidInputError("SynthregConfig: scale factors must be > 0");
    }
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw InvalidInputError("SynthregConfig: noise_std must be >= 0");
  }
}

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

SynthregProblem::SynthregProblem(const SynthregConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t T = cfg_.num_tasks;
  const std::size_t h = cfg_.hidden_dim;
  const std::size_t d_in = cfg_.input_dim;
  const std::size_t n_total = cfg_.train_size + cfg_.heldout_size;
  Rng rng(cfg_.seed);

  // Orthonormal readouts: Gram-Schmidt over seeded Gaussian rows.
  readouts_.assign(T, std::vector<double>(h));
  for (std::size_t t = 0; t < T; ++t) {
    double norm = 0.0;
    do {
      for (double& v : readouts_[t]) v = rng.normal();
      for (std::size_t s = 0; s < t; ++s) {
        double proj = 0.0;
        for (std::size_t i = 0; i < h; ++i) {
          proj += readouts_[t][i] * readouts_[s][i];
        }
        for (std::size_t i = 0; i < h; ++i) {
          readouts_[t][i] -= proj * readouts_[s][i];
        }
      }
      norm = 0.0;
      for (double v : readouts_[t]) norm += v * v;
      norm = std::sqrt(norm);
    } while (norm < 1e-9);
    for (double& v : readouts_[t]) v /= norm;
  }

  // Unit task directions in input space.
  dirs_.assign(T, std::vector<double>(d_in));
  for (std::size_t t = 0; t < T; ++t) {
    double norm = 0.0;
    do {
      for (double& v : dirs_[t]) v = rng.normal();
      norm = 0.0;
      for (double v : dirs_[t]) norm += v * v;
      norm = std::sqrt(norm);
    } while (norm < 1e-9);
    for (double& v : dirs_[t]) v /= norm;
  }

  x_.resize(n_total * d_in);
  for (double& v : x_) v = rng.normal();

  y_.assign(T, std::vector<double>(n_total));
  for (std::size_t t = 0; t < T; ++t) {
    const double c = cfg_.scale_factors[t];
    for (std::size_t i = 0; i < n_total; ++i) {
      double clean = 0.0;
      for (std::size_t j = 0; j < d_in; ++j) {
        clean += dirs_[t][j] * x_[i * d_in + j];
      }
      y_[t][i] = c * (clean + cfg_.noise_std * rng.normal());
    }
  }

  // Least-norm generating parameters: W* = sum_t c_t r_t v_t' satisfies
  // r_t' W* = c_t v_t' because the readouts are orthonormal.
  w_star_.assign(h * d_in, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const double c = cfg_.scale_factors[t];
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < d_in; ++j) {
        w_star_[i * d_in + j] += c * readouts_[t][i] * dirs_[t][j];
      }
    }
  }

  spec_.name = "synthreg";
  spec_.dim = h * d_in;
  spec_.num_tasks = T;
  spec_.scale_factors = cfg_.scale_factors;
  spec_.init_points = {ParamVector(spec_.dim, 0.0)};
  spec_.pareto_reference = w_star_;
  spec_.validate();
}

std::size_t SynthregProblem::split_size(Split split) const {
  return split == Split::kTrain ? cfg_.train_size : cfg_.heldout_size;
}

GradientSet SynthregProblem::eval(const ParamVector& theta,
                                  const DatasetSlice& slice) const {
  if (theta.size() != spec_.dim || !all_finite(theta)) {
    throw InvalidInputError("synthreg eval: bad theta");
  }
  if (slice.begin >= slice.end || slice.end > split_size(slice.split)) {
    throw InvalidInputError("synthreg eval: empty or out-of-range batch");
  }
  const std::size_t T = cfg_.num_tasks;
  const std::size_t h = cfg_.hidden_dim;
  const std::size_t d_in = cfg_.input_dim;
  const std::size_t offset =
      slice.split == Split::kTrain ? 0 : cfg_.train_size;
  const std::size_t n = slice.end - slice.begin;

  GradientSet out;
  out.per_task.resize(T);
  for (TaskEvaluation& te : out.per_task) {
    te.loss = 0.0;
    te.gradient.assign(spec_.dim, 0.0);
  }

  std::vector<double> hidden(h);
  for (std::size_t s = slice.begin; s < slice.end; ++s) {
    const std::size_t row = offset + s;
    const double* x = &x_[row * d_in];
    for (std::size_t i = 0; i < h; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d_in; ++j) acc += theta[i * d_in + j] * x[j];
      hidden[i] = acc;
    }
    for (std::size_t t = 0; t < T; ++t) {
      double pred = 0.0;
      for (std::size_t i = 0; i < h; ++i) pred += readouts_[t][i] * hidden[i];
      const double err = pred - y_[t][row];
      out.per_task[t].loss += err * err;
      ParamVector& grad = out.per_task[t].gradient;
      for (std::size_t i = 0; i < h; ++i) {
        const double coeff = err * readouts_[t][i];
        for (std::size_t j = 0; j < d_in; ++j) {
          grad[i * d_in + j] += coeff * x[j];
        }
      }
    }
  }
  const double scale = 2.0 / static_cast<double>(n);
  for (TaskEvaluation& te : out.per_task) {
    te.loss /= static_cast<double>(n);
    for (double& g : te.gradient) g *= scale;
  }
  return out;
}

GradientSet SynthregProblem::eval_split(const ParamVector& theta,
                                        Split split) const {
  return eval(theta, DatasetSlice{split, 0, split_size(split)});
}

ParamVector fd_gradient(const std::function<double(const ParamVector&)>& loss,
                        const ParamVector& theta, double h) {
  if (!(h > 0.0)) {
    throw InvalidInputError("fd_gradient: h must be > 0");
  }
  ParamVector grad(theta.size());
  ParamVector probe = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    const double up = loss(probe);
    probe[i] = theta[i] - h;
    const double down = loss(probe);
    probe[i] = theta[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

Problem make_quad2_problem(const std::vector<double>& scale_factors) {
  Problem problem;
  problem.spec = make_quad2(scale_factors);
  const ProblemSpec spec = problem.spec;
  problem.eval_train = [spec](const ParamVector& theta) {
    return quad2_eval(theta, spec);
  };
  return problem;
}

Problem make_synthreg_problem(const SynthregConfig& cfg) {
  auto impl = std::make_shared<const SynthregProblem>(cfg);
  Problem problem;
  problem.spec = impl->spec();
  problem.synthreg = impl;
  problem.eval_train = [impl](const ParamVector& theta) {
    return impl->eval_split(theta, Split::kTrain);
  };
  if (cfg.heldout_size > 0) {
    problem.eval_heldout = [impl](const ParamVector& theta) {
      return impl->eval_split(theta, Split::kHeldout);
    };
  }
  return problem;
}

}  // namespace emtl
