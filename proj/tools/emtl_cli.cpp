// Command-line benchmark harness. `run` executes one training run, `grid`
// executes a JSON-configured batch concurrently, and `diag-theorem1` runs the
// rate-gap diagnostic sweep. Exit codes: 0 success, 1 configuration error,
// 2 run failure.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "emtl/harness.hpp"
#include "emtl/problems.hpp"
#include "emtl/types.hpp"
#include "emtl/weighting.hpp"

namespace {

using namespace emtl;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRun = 2;

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!obj.is_object()) {
    throw InvalidInputError(where + " must be a JSON object");
  }
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw InvalidInputError("unknown key \"" + item.key() + "\" in " + where);
    }
  }
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInputError("cannot open config file: " + path);
  }
  try {
    json parsed;
    in >> parsed;
    return parsed;
  } catch (const json::exception& e) {
    throw InvalidInputError("config parse error in " + path + ": " + e.what());
  }
}

EmtlConfig emtl_from_json(const json& j) {
  check_keys(j, {"rho", "eta_p", "epsilon", "lr", "steps", "grad_norm_floor"},
             "emtl");
  EmtlConfig cfg;
  cfg.rho = j.value("rho", cfg.rho);
  cfg.eta_p = j.value("eta_p", cfg.eta_p);
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.steps = j.value("steps", cfg.steps);
  cfg.grad_norm_floor = j.value("grad_norm_floor", cfg.grad_norm_floor);
  return cfg;
}

SynthregConfig synthreg_from_json(const json& j) {
  check_keys(j,
             {"input_dim", "hidden_dim", "num_tasks", "train_size",
              "heldout_size", "noise_std", "scale_factors", "seed"},
             "synthreg");
  SynthregConfig cfg;
  cfg.input_dim = j.value("input_dim", cfg.input_dim);
  cfg.hidden_dim = j.value("hidden_dim", cfg.hidden_dim);
  cfg.num_tasks = j.value("num_tasks", cfg.num_tasks);
  cfg.train_size = j.value("train_size", cfg.train_size);
  cfg.heldout_size = j.value("heldout_size", cfg.heldout_size);
  cfg.noise_std = j.value("noise_std", cfg.noise_std);
  cfg.scale_factors = j.value("scale_factors", cfg.scale_factors);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

struct NamedProblem {
  std::string name;
  Problem problem;
};

NamedProblem problem_from_json(const json& j) {
  if (!j.is_object() || !j.contains("name")) {
    throw InvalidInputError("problem requires a \"name\" field");
  }
  const std::string name = j.at("name").get<std::string>();
  if (name == "quad2") {
    check_keys(j, {"name", "scale_factors"}, "problem (quad2)");
    const std::vector<double> scale =
        j.value("scale_factors", std::vector<double>{1.0, 100.0});
    return {name, make_quad2_problem(scale)};
  }
  if (name == "synthreg") {
    json data = j;
    data.erase("name");
    return {name, make_synthreg_problem(synthreg_from_json(data))};
  }
  throw InvalidInputError("unknown problem name: " + name);
}

struct GridSlot {
  std::string problem_name;
  RunConfig config;
};

GridSlot slot_from_json(const json& j, const std::string& output_dir,
                        std::size_t index) {
  const std::string where = "runs[" + std::to_string(index) + "]";
  check_keys(j,
             {"problem", "method", "emtl", "seed", "record_every",
              "output_path", "init", "balance_losses", "lr_halving"},
             where);
  if (!j.contains("problem") || !j.contains("method")) {
    throw InvalidInputError(where + " requires \"problem\" and \"method\"");
  }
  GridSlot slot;
  NamedProblem named = problem_from_json(j.at("problem"));
  slot.problem_name = named.name;
  slot.config.problem = std::move(named.problem);
  slot.config.method = j.at("method").get<std::string>();
  if (j.contains("emtl")) slot.config.emtl = emtl_from_json(j.at("emtl"));
  slot.config.seed = j.value("seed", slot.config.seed);
  slot.config.record_every = j.value("record_every", slot.config.record_every);
  slot.config.init = j.value("init", ParamVector{});
  slot.config.balance_losses = j.value("balance_losses", false);
  slot.config.lr_halving = j.value("lr_halving", false);
  slot.config.output_path = j.value("output_path", std::string{});
  if (slot.config.output_path.empty() && !output_dir.empty()) {
    slot.config.output_path =
        (std::filesystem::path(output_dir) /
         ("run_" + std::to_string(index) + "_" + slot.problem_name + "_" +
          slot.config.method + ".csv"))
            .string();
  }
  return slot;
}

void print_doubles(const char* label, const std::vector<double>& values) {
  std::printf("%s=", label);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::printf("%s%.17g", i == 0 ? "" : ",", values[i]);
  }
  std::printf("\n");
}

struct RunCliArgs {
  std::string problem = "quad2";
  std::string method = "emtl";
  EmtlConfig emtl;
  std::uint64_t seed = 0;
  std::vector<double> scale;
  std::string out_dir;
  long record_every = 1;
  std::vector<double> init;
  bool lr_halving = false;
  bool balance_losses = false;
};

int do_run(const RunCliArgs& args) {
  RunConfig rc;
  if (args.problem == "quad2") {
    rc.problem = make_quad2_problem(
        args.scale.empty() ? std::vector<double>{1.0, 100.0} : args.scale);
  } else if (args.problem == "synthreg") {
    SynthregConfig cfg;
    cfg.seed = args.seed;
    if (!args.scale.empty()) {
      cfg.scale_factors = args.scale;
      cfg.num_tasks = args.scale.size();
      cfg.hidden_dim = std::max(cfg.hidden_dim, cfg.num_tasks);
    }
    rc.problem = make_synthreg_problem(cfg);
  } else {
    throw InvalidInputError("unknown problem name: " + args.problem);
  }
  rc.method = args.method;
  rc.emtl = args.emtl;
  rc.seed = args.seed;
  rc.record_every = args.record_every;
  rc.init = args.init;
  rc.balance_losses = args.balance_losses;
  rc.lr_halving = args.lr_halving;
  if (!args.out_dir.empty()) {
    std::filesystem::create_directories(args.out_dir);
    rc.output_path = (std::filesystem::path(args.out_dir) /
                      (args.problem + "_" + args.method + ".csv"))
                         .string();
  }

  const RunResult rr = run(rc);
  std::printf("problem=%s method=%s steps=%ld records=%zu\n",
              args.problem.c_str(), args.method.c_str(), rc.emtl.steps,
              rr.trajectory.size());
  std::printf(
      "final_avg_loss=%.17g best_metric=%.17g converged=%d "
      "distance_to_reference=%.17g\n",
      rr.final_avg_loss, rr.best_metric, rr.converged ? 1 : 0,
      rr.distance_to_reference);
  print_doubles("final_losses", rr.final_losses);
  print_doubles("returned_theta", rr.returned_theta);
  if (!rc.output_path.empty()) {
    std::printf("trajectory=%s\n", rc.output_path.c_str());
  }
  return kExitOk;
}

int do_grid(const std::string& config_path) {
  const json cfg = load_json(config_path);
  check_keys(cfg, {"runs", "parallelism", "output_dir"}, "grid config");
  if (!cfg.contains("runs") || !cfg.at("runs").is_array() ||
      cfg.at("runs").empty()) {
    throw InvalidInputError("grid config requires a non-empty \"runs\" array");
  }
  const unsigned parallelism = cfg.value("parallelism", 1u);
  const std::string output_dir = cfg.value("output_dir", std::string{});
  if (!output_dir.empty()) {
    std::filesystem::create_directories(output_dir);
  }

  std::vector<GridSlot> slots;
  std::vector<RunConfig> configs;
  for (std::size_t i = 0; i < cfg.at("runs").size(); ++i) {
    slots.push_back(slot_from_json(cfg.at("runs")[i], output_dir, i));
    configs.push_back(slots.back().config);
  }

  const std::vector<GridOutcome> outcomes = run_grid(configs, parallelism);

  int failures = 0;
  json summary_runs = json::array();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    json s;
    s["index"] = i;
    s["problem"] = slots[i].problem_name;
    s["method"] = slots[i].config.method;
    if (!slots[i].config.output_path.empty()) {
      s["output_path"] = slots[i].config.output_path;
    }
    if (outcomes[i].result.has_value()) {
      const RunResult& rr = *outcomes[i].result;
      s["status"] = "ok";
      s["records"] = rr.trajectory.size();
      s["final_avg_loss"] = rr.final_avg_loss;
      s["best_metric"] = rr.best_metric;
      s["converged"] = rr.converged;
      s["distance_to_reference"] = rr.distance_to_reference;
    } else {
      s["status"] = "error";
      s["error"] = outcomes[i].error;
      ++failures;
    }
    summary_runs.push_back(std::move(s));
  }
  json summary;
  summary["runs"] = std::move(summary_runs);
  summary["failures"] = failures;
  std::cout << summary.dump(2) << std::endl;

  if (!output_dir.empty()) {
    const std::string summary_path =
        (std::filesystem::path(output_dir) / "summary.json").string();
    std::ofstream out(summary_path);
    if (!out) {
      throw std::runtime_error("cannot write " + summary_path);
    }
    out << summary.dump(2) << '\n';

    // Loss-space scatter for the two-task quadratic slots, if any succeeded.
    std::vector<SvgSeries> series;
    std::optional<std::pair<double, double>> reference;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      if (slots[i].problem_name != "quad2" || !outcomes[i].result.has_value()) {
        continue;
      }
      SvgSeries s;
      s.label = slots[i].config.method;
      for (const TrajectoryRecord& rec : outcomes[i].result->trajectory) {
        s.points.emplace_back(rec.losses[0], rec.losses[1]);
      }
      series.push_back(std::move(s));
      if (!reference && slots[i].config.problem.spec.pareto_reference) {
        const GradientSet at_ref = slots[i].config.problem.eval_train(
            *slots[i].config.problem.spec.pareto_reference);
        reference = std::make_pair(at_ref.per_task[0].loss,
                                   at_ref.per_task[1].loss);
      }
    }
    if (!series.empty()) {
      write_loss_scatter_svg(
          (std::filesystem::path(output_dir) / "losses.svg").string(), series,
          reference);
    }
  }
  return failures > 0 ? kExitRun : kExitOk;
}

int do_diag(const std::string& config_path) {
  const json cfg = load_json(config_path);
  check_keys(cfg, {"synthreg", "rhos", "seeds", "emtl", "output_path"},
             "diag config");
  Theorem1Config tc;
  if (cfg.contains("synthreg")) {
    tc.synthreg = synthreg_from_json(cfg.at("synthreg"));
  }
  if (cfg.contains("rhos")) {
    tc.rhos = cfg.at("rhos").get<std::vector<double>>();
  }
  if (cfg.contains("seeds")) {
    tc.seeds = cfg.at("seeds").get<std::vector<std::uint64_t>>();
  }
  if (cfg.contains("emtl")) {
    tc.emtl = emtl_from_json(cfg.at("emtl"));
  }

  const Theorem1Report report = theorem1_diagnostic(tc);
  for (const Theorem1Entry& e : report.entries) {
    std::printf(
        "seed=%llu rho=%.4g spread=%.6e gap=%+.6e best_heldout_avg=%.6e "
        "converged=%d\n",
        static_cast<unsigned long long>(e.seed), e.rho, e.variance, e.gap,
        e.best_heldout_avg, e.converged ? 1 : 0);
  }
  std::printf(
      "spearman(spread,gap)=%+.6f spearman(rho,spread)=%+.6f "
      "spearman(rho,gap)=%+.6f\n",
      report.rank_correlation, report.rho_variance_correlation,
      report.rho_gap_correlation);

  const std::string output_path = cfg.value("output_path", std::string{});
  if (!output_path.empty()) {
    json out;
    out["entries"] = json::array();
    for (const Theorem1Entry& e : report.entries) {
      json entry;
      entry["rho"] = e.rho;
      entry["seed"] = e.seed;
      entry["variance"] = e.variance;
      entry["gap"] = e.gap;
      entry["best_heldout_avg"] = e.best_heldout_avg;
      entry["converged"] = e.converged;
      out["entries"].push_back(std::move(entry));
    }
    out["rank_correlation"] = report.rank_correlation;
    out["rho_variance_correlation"] = report.rho_variance_correlation;
    out["rho_gap_correlation"] = report.rho_gap_correlation;
    std::ofstream file(output_path);
    if (!file) {
      throw std::runtime_error("cannot write " + output_path);
    }
    file << out.dump(2) << '\n';
    std::printf("report=%s\n", output_path.c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task optimization benchmark harness"};
  app.require_subcommand(1);

  RunCliArgs args;
  CLI::App* run_cmd = app.add_subcommand("run", "Execute a single training run");
  run_cmd->add_option("--problem", args.problem, "Problem name")
      ->check(CLI::IsMember({"quad2", "synthreg"}))
      ->capture_default_str();
  run_cmd->add_option("--method", args.method, "Weighting strategy")
      ->check(CLI::IsMember(strategy_names()))
      ->capture_default_str();
  run_cmd->add_option("--rho", args.emtl.rho, "Player KL budget parameter")
      ->capture_default_str();
  run_cmd->add_option("--eta-p", args.emtl.eta_p, "Player step size")
      ->capture_default_str();
  run_cmd
      ->add_option("--epsilon", args.emtl.epsilon,
                   "Balancing/player merge coefficient")
      ->capture_default_str();
  run_cmd->add_option("--lr", args.emtl.lr, "Descent step size")
      ->capture_default_str();
  run_cmd->add_option("--steps", args.emtl.steps, "Step budget")
      ->capture_default_str();
  run_cmd->add_option("--seed", args.seed, "Dataset seed (synthreg)")
      ->capture_default_str();
  run_cmd
      ->add_option("--scale", args.scale,
                   "Per-task loss scale factors, comma separated")
      ->delimiter(',');
  run_cmd->add_option("--out", args.out_dir,
                      "Output directory for the trajectory CSV");
  run_cmd
      ->add_option("--record-every", args.record_every,
                   "Record every k-th step (the last step is always kept)")
      ->capture_default_str();
  run_cmd
      ->add_option("--init", args.init,
                   "Starting point, comma separated (default: problem's first "
                   "init)")
      ->delimiter(',');
  run_cmd->add_flag("--lr-halving", args.lr_halving,
                    "Halve the step size after every 40% of the budget");
  run_cmd->add_flag("--balance-losses", args.balance_losses,
                    "banditmtl running-mean loss normalization");

  std::string grid_config;
  CLI::App* grid_cmd =
      app.add_subcommand("grid", "Run a JSON-configured batch of runs");
  grid_cmd->add_option("--config", grid_config, "Grid JSON config file")
      ->required();

  std::string diag_config;
  CLI::App* diag_cmd = app.add_subcommand(
      "diag-theorem1", "Rate-gap diagnostic sweep over rho and dataset seeds");
  diag_cmd->add_option("--config", diag_config, "Diagnostic JSON config file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run_cmd->parsed()) return do_run(args);
    if (grid_cmd->parsed()) return do_grid(grid_config);
    if (diag_cmd->parsed()) return do_diag(diag_config);
    std::cerr << app.help();
    return kExitConfig;
  } catch (const InvalidInputError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const RunError& e) {
    std::fprintf(stderr, "run failed: %s\n", e.what());
    return kExitRun;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failed: %s\n", e.what());
    return kExitRun;
  }
}
