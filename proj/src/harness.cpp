#include "emtl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

#include "emtl/core.hpp"
#include "emtl/minnorm.hpp"
#include "emtl/mirror_ascent.hpp"
#include "emtl/trajectory_io.hpp"
#include "emtl/weighting.hpp"

namespace emtl {
namespace {

constexpr double kConvergenceTol = 1e-8;

std::vector<double> losses_of(const GradientSet& evals) {
  std::vector<double> ls;
  ls.reserve(evals.num_tasks());
  for (const TaskEvaluation& te : evals.per_task) ls.push_back(te.loss);
  return ls;
}

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) /
         static_cast<double>(xs.size());
}

double raw_rate_spread(const RelativeRates& rates) {
  const double mean = mean_of(rates.raw);
  double acc = 0.0;
  for (double r : rates.raw) acc += (r - mean) * (r - mean);
  return std::sqrt(acc / static_cast<double>(rates.raw.size()));
}

// Strategy quantities for the initial record: the balancing weights the
// method would compute at theta_0 with its initial (uniform) player state.
// Pure; does not advance anything.
StrategyOutput preview_output(const std::string& method,
                              const GradientSet& evals,
                              const EmtlConfig& cfg) {
  const std::size_t T = evals.num_tasks();
  if (method == "ls") return linear_scalarization(evals);
  if (method == "mgda") return mgda_step(evals, cfg.grad_norm_floor);
  if (method == "imtl-g") return imtl_g_step(evals, cfg.grad_norm_floor);
  if (method == "banditmtl") {
    StrategyOutput out;
    out.alpha = WeightVector::uniform(T);
    out.p = WeightVector::uniform(T);
    out.effective_weights.resize(T);
    const double inv_T = 1.0 / static_cast<double>(T);
    for (std::size_t t = 0; t < T; ++t) {
      out.effective_weights[t] =
          inv_T * (cfg.epsilon + (1.0 - cfg.epsilon) * out.p[t]);
    }
    return out;
  }
  if (method == "emtl") {
    std::vector<ParamVector> gs;
    gs.reserve(T);
    for (const TaskEvaluation& te : evals.per_task) gs.push_back(te.gradient);
    const MinNormSolution mn = minnorm_fw(gs);
    StrategyOutput out;
    out.alpha = mn.alpha;
    out.p = WeightVector::uniform(T);
    out.effective_weights =
        effective_weights(mn.alpha, out.p, gradient_norms(evals), cfg.epsilon,
                          cfg.grad_norm_floor);
    return out;
  }
  throw InvalidInputError("unknown strategy name: " + method);
}

TrajectoryRecord make_record(long step, const ParamVector& theta,
                             const std::vector<double>& losses,
                             const StrategyOutput& out,
                             const RelativeRates& rates, double rho) {
  TrajectoryRecord rec;
  rec.step = step;
  rec.theta = theta;
  rec.losses = losses;
  rec.alpha = out.alpha.weights;
  rec.p = out.p.weights;
  rec.effective_weights = out.effective_weights;
  rec.rates = rates;
  rec.objective_diagnostic = mean_of(losses) + rho * raw_rate_spread(rates);
  return rec;
}

}  // namespace

RunResult run(const RunConfig& config) {
  config.problem.spec.validate();
  config.emtl.validate();
  if (!is_registered_strategy(config.method)) {
    throw InvalidInputError("unknown strategy name: " + config.method);
  }
  if (config.record_every < 1) {
    throw InvalidInputError("run: record_every must be >= 1");
  }
  if (!config.problem.eval_train) {
    throw InvalidInputError("run: problem has no train evaluator");
  }

  const std::size_t T = config.problem.spec.num_tasks;
  ParamVector theta =
      config.init.empty() ? config.problem.spec.init_points.front() : config.init;
  if (theta.size() != config.problem.spec.dim) {
    throw InvalidInputError("run: init point dimension mismatch");
  }

  std::unique_ptr<Strategy> strategy =
      make_strategy(config.method, config.emtl, T, config.balance_losses);

  RunResult result;
  const bool use_heldout = static_cast<bool>(config.problem.eval_heldout);
  auto metric_at = [&](const ParamVector& point,
                       const GradientSet& train_evals) {
    if (!use_heldout) return mean_of(losses_of(train_evals));
    return mean_of(losses_of(config.problem.eval_heldout(point)));
  };

  GradientSet evals;
  try {
    evals = config.problem.eval_train(theta);
    evals.step_index = 0;

    const StrategyOutput preview =
        preview_output(config.method, evals, config.emtl);
    const RelativeRates init_rates =
        relative_rates(evals, preview.alpha, config.emtl.grad_norm_floor);
    result.trajectory.push_back(make_record(0, theta, losses_of(evals), preview,
                                            init_rates, config.emtl.rho));
    result.best_metric = metric_at(theta, evals);
    result.returned_theta = theta;
  } catch (const std::exception& e) {
    throw RunError(0, e.what());
  }

  const long halving_interval =
      std::max<long>(1, (config.emtl.steps * 2) / 5);
  for (long k = 1; k <= config.emtl.steps; ++k) {
    try {
      double lr = config.emtl.lr;
      if (config.lr_halving) {
        for (long m = (k - 1) / halving_interval; m > 0; --m) lr *= 0.5;
      }
      const StrategyOutput out = strategy->step(evals);
      const RelativeRates rates =
          relative_rates(evals, out.alpha, config.emtl.grad_norm_floor);

      ParamVector direction(theta.size(), 0.0);
      for (std::size_t t = 0; t < T; ++t) {
        const double w = out.effective_weights[t];
        const ParamVector& g = evals.per_task[t].gradient;
        for (std::size_t i = 0; i < theta.size(); ++i) {
          direction[i] += w * g[i];
        }
      }
      if (gradient_norm(direction) < kConvergenceTol) {
        result.converged = true;
      }
      for (std::size_t i = 0; i < theta.size(); ++i) {
        theta[i] -= lr * direction[i];
      }

      evals = config.problem.eval_train(theta);
      evals.step_index = k;
      const std::vector<double> arrival_losses = losses_of(evals);
      const double metric = metric_at(theta, evals);
      if (metric < result.best_metric) {
        result.best_metric = metric;
        result.returned_theta = theta;
      }
      if (k % config.record_every == 0 || k == config.emtl.steps) {
        result.trajectory.push_back(
            make_record(k, theta, arrival_losses, out, rates, config.emtl.rho));
      }
    } catch (const RunError&) {
      throw;
    } catch (const std::exception& e) {
      throw RunError(k, e.what());
    }
  }

  const TrajectoryRecord& last = result.trajectory.back();
  result.final_losses = last.losses;
  result.final_avg_loss = mean_of(last.losses);
  if (config.problem.spec.pareto_reference) {
    const ParamVector& ref = *config.problem.spec.pareto_reference;
    double acc = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const double d = result.returned_theta[i] - ref[i];
      acc += d * d;
    }
    result.distance_to_reference = std::sqrt(acc);
  }

  if (!config.output_path.empty()) {
    write_trajectory_csv(config.output_path, result.trajectory,
                         config.problem.spec.dim, T);
  }
  return result;
}

std::vector<GridOutcome> run_grid(const std::vector<RunConfig>& configs,
                                  unsigned parallelism) {
  if (configs.empty()) {
    throw InvalidInputError("run_grid: empty config list");
  }
  if (parallelism < 1) {
    throw InvalidInputError("run_grid: parallelism must be >= 1");
  }
  std::vector<GridOutcome> outcomes(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= configs.size()) break;
      try {
        outcomes[slot].result = run(configs[slot]);
      } catch (const std::exception& e) {
        outcomes[slot].error = e.what();
      } catch (...) {
        outcomes[slot].error = "unknown error";
      }
    }
  };
  const unsigned workers = std::min<std::size_t>(parallelism, configs.size());
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  return outcomes;
}

double spearman_rank_correlation(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw InvalidInputError("spearman: need two equal-length samples, n >= 2");
  }
  auto ranks = [](const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&x](std::size_t l, std::size_t r) { return x[l] < x[r]; });
    std::vector<double> rk(x.size());
    std::size_t i = 0;
    while (i < idx.size()) {
      std::size_t j = i;
      while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) rk[idx[k]] = avg;
      i = j + 1;
    }
    return rk;
  };
  const std::vector<double> ra = ranks(a);
  const std::vector<double> rb = ranks(b);
  const double ma = mean_of(ra);
  const double mb = mean_of(rb);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  const double denom = std::sqrt(va * vb);
  return denom > 0.0 ? cov / denom : 0.0;
}

Theorem1Report theorem1_diagnostic(const Theorem1Config& cfg) {
  if (cfg.rhos.empty() || cfg.seeds.empty()) {
    throw InvalidInputError("theorem1_diagnostic: empty rho or seed sweep");
  }
  if (cfg.synthreg.heldout_size == 0) {
    throw InvalidInputError("theorem1_diagnostic: missing held-out split");
  }
  cfg.emtl.validate();

  Theorem1Report report;
  for (std::uint64_t seed : cfg.seeds) {
    SynthregConfig data_cfg = cfg.synthreg;
    data_cfg.seed = seed;
    const Problem problem = make_synthreg_problem(data_cfg);
    for (double rho : cfg.rhos) {
      RunConfig rc;
      rc.problem = problem;
      rc.method = "emtl";
      rc.emtl = cfg.emtl;
      rc.emtl.rho = rho;
      rc.seed = seed;
      rc.record_every = std::max<long>(1, cfg.emtl.steps);
      const RunResult rr = run(rc);

      const GradientSet train =
          problem.synthreg->eval_split(rr.returned_theta, Split::kTrain);
      const GradientSet held =
          problem.synthreg->eval_split(rr.returned_theta, Split::kHeldout);
      std::vector<ParamVector> gs;
      for (const TaskEvaluation& te : train.per_task) gs.push_back(te.gradient);
      const MinNormSolution mn = minnorm_fw(gs);
      const RelativeRates train_rates =
          relative_rates(train, mn.alpha, cfg.emtl.grad_norm_floor);
      const RelativeRates held_rates =
          relative_rates(held, WeightVector::uniform(held.num_tasks()),
                         cfg.emtl.grad_norm_floor);

      Theorem1Entry entry;
      entry.rho = rho;
      entry.seed = seed;
      entry.variance = train_rates.variance;
      double gap = 0.0;
      for (std::size_t t = 0; t < train_rates.raw.size(); ++t) {
        gap += held_rates.raw[t] - train_rates.raw[t];
      }
      entry.gap = gap / static_cast<double>(train_rates.raw.size());
      entry.best_heldout_avg = rr.best_metric;
      entry.converged = rr.converged;
      report.entries.push_back(entry);
    }
  }

  if (report.entries.size() >= 2) {
    std::vector<double> vars, gaps, rhos;
    for (const Theorem1Entry& e : report.entries) {
      vars.push_back(e.variance);
      gaps.push_back(e.gap);
      rhos.push_back(e.rho);
    }
    report.rank_correlation = spearman_rank_correlation(vars, gaps);
    report.rho_variance_correlation = spearman_rank_correlation(rhos, vars);
    report.rho_gap_correlation = spearman_rank_correlation(rhos, gaps);
  }
  return report;
}

void write_loss_scatter_svg(
    const std::string& path, const std::vector<SvgSeries>& series,
    const std::optional<std::pair<double, double>>& reference) {
  static const std::map<std::string, std::string> palette = {
      {"ls", "#d62728"},        {"mgda", "#1f77b4"},
      {"imtl-g", "#2ca02c"},    {"banditmtl", "#9467bd"},
      {"emtl", "#ff7f0e"}};
  const double floor_val = 1e-12;
  auto lx = [floor_val](double v) { return std::log10(std::max(v, floor_val)); };

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto absorb = [&](double x, double y) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  };
  for (const SvgSeries& s : series) {
    for (const auto& [l1, l2] : s.points) absorb(lx(l1), lx(l2));
  }
  if (reference) absorb(lx(reference->first), lx(reference->second));
  if (!std::isfinite(xmin)) {  // no data at all
    xmin = ymin = -1.0;
    xmax = ymax = 1.0;
  }
  const double pad_x = 0.05 * std::max(xmax - xmin, 1e-6);
  const double pad_y = 0.05 * std::max(ymax - ymin, 1e-6);
  xmin -= pad_x;
  xmax += pad_x;
  ymin -= pad_y;
  ymax += pad_y;

  const double W = 800.0, H = 600.0, M = 60.0;
  auto px = [&](double x) { return M + (x - xmin) / (xmax - xmin) * (W - 2 * M); };
  auto py = [&](double y) { return H - M - (y - ymin) / (ymax - ymin) * (H - 2 * M); };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return std::string(buf);
  };

  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_loss_scatter_svg: cannot open " + path);
  }
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << W << ' '
      << H << "\">\n"
      << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
      << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M
      << "\" y2=\"" << H - M << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M << "\" y2=\""
      << H - M << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"" << H - 15
      << "\" text-anchor=\"middle\" font-size=\"14\">log10 L1</text>\n"
      << "<text x=\"18\" y=\"" << H / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
      << H / 2 << ")\">log10 L2</text>\n"
      << "<text x=\"" << M << "\" y=\"" << H - M + 20
      << "\" font-size=\"11\">" << fmt(xmin) << "</text>\n"
      << "<text x=\"" << W - M << "\" y=\"" << H - M + 20
      << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(xmax) << "</text>\n"
      << "<text x=\"" << M - 5 << "\" y=\"" << H - M
      << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(ymin) << "</text>\n"
      << "<text x=\"" << M - 5 << "\" y=\"" << M + 4
      << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(ymax) << "</text>\n";

  std::map<std::string, std::string> seen_labels;
  for (const SvgSeries& s : series) {
    const auto it = palette.find(s.label);
    const std::string color = it != palette.end() ? it->second : "#7f7f7f";
    seen_labels.emplace(s.label, color);
    if (s.points.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.2\" stroke-opacity=\"0.8\" points=\"";
    for (const auto& [l1, l2] : s.points) {
      out << px(lx(l1)) << ',' << py(lx(l2)) << ' ';
    }
    out << "\"/>\n";
    const auto& first = s.points.front();
    const auto& last = s.points.back();
    out << "<circle cx=\"" << px(lx(first.first)) << "\" cy=\""
        << py(lx(first.second)) << "\" r=\"4\" fill=\"black\"/>\n"
        << "<circle cx=\"" << px(lx(last.first)) << "\" cy=\""
        << py(lx(last.second)) << "\" r=\"4\" fill=\"" << color << "\"/>\n";
  }
  if (reference) {
    const double cx = px(lx(reference->first));
    const double cy = py(lx(reference->second));
    out << "<path d=\"M " << cx - 6 << ' ' << cy << " L " << cx + 6 << ' ' << cy
        << " M " << cx << ' ' << cy - 6 << " L " << cx << ' ' << cy + 6
        << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  double legend_y = M;
  for (const auto& [label, color] : seen_labels) {
    out << "<rect x=\"" << W - M - 110 << "\" y=\"" << legend_y - 9
        << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n"
        << "<text x=\"" << W - M - 92 << "\" y=\"" << legend_y + 2
        << "\" font-size=\"12\">" << label << "</text>\n";
    legend_y += 18.0;
  }
  out << "</svg>\n";
  if (!out.good()) {
    throw std::runtime_error("write_loss_scatter_svg: write failed for " + path);
  }
}

}  // namespace emtl
