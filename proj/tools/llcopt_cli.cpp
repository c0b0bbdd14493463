// llcopt: train / optimize / evaluate / simulate / baseline.
//
// Exit codes: 0 success, 1 invalid input or usage, 2 runtime failure.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "llcopt/baselines.hpp"
#include "llcopt/checkpoint.hpp"
#include "llcopt/circuit.hpp"
#include "llcopt/config.hpp"
#include "llcopt/environment.hpp"
#include "llcopt/evaluation.hpp"
#include "llcopt/simd/kernels.hpp"
#include "llcopt/training.hpp"

namespace fs = std::filesystem;
using namespace llcopt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

RunConfig resolve_config(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

std::pair<int, int> parse_grid(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw ValidationError("--grid must look like 5x5");
  try {
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw ValidationError("--grid must look like 5x5");
  }
}

std::ofstream open_output(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

void print_params(const CircuitParams& p) {
  std::cout << fmt::format("L_r = {:.6g} H\nL_m = {:.6g} H\nC_r = {:.6g} F\nk   = {:.6g}\nf_1 = {:.6g} Hz\nf_2 = {:.6g} Hz\n",
                           p.L_r, p.L_m, p.C_r, p.k, p.f_1, p.f_2);
}

std::string range_text(const Range& r, double scale = 1.0, const char* unit = "") {
  return fmt::format("[{:g}, {:g}]{}", r.lo * scale, r.hi * scale, unit);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LLC resonant converter parameter optimization with reinforcement learning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "llcopt 1.0");

  // train
  auto* train = app.add_subcommand("train", "Train PPO agents on randomly drawn target configurations");
  std::string train_config;
  std::string train_out;
  std::optional<int> train_seeds;
  std::optional<std::int64_t> train_episodes;
  std::optional<int> train_workers;
  bool train_verbose = false;
  train->add_option("--config", train_config, "Run configuration file (JSON)")->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "Output directory for metrics and checkpoints")->required();
  train->add_option("--seeds", train_seeds, "Number of seeds, counting up from the first configured seed")
      ->check(CLI::PositiveNumber);
  train->add_option("--episodes", train_episodes, "Episodes per seed (overrides the config)")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--workers", train_workers, "Rollout worker threads")->check(CLI::PositiveNumber);
  train->add_flag("--verbose", train_verbose, "Print per-batch progress to stderr");

  // optimize
  auto* optimize = app.add_subcommand("optimize", "Optimize one target configuration with a trained agent");
  std::string opt_ckpt;
  std::string opt_config;
  TargetSpec opt_target;
  std::uint64_t opt_seed = 0;
  std::string opt_trace = "optimize_trace.csv";
  optimize->add_option("--checkpoint", opt_ckpt, "Trained checkpoint")->required()->check(CLI::ExistingFile);
  optimize->add_option("--config", opt_config, "Run configuration (environment and loss model)")
      ->check(CLI::ExistingFile);
  optimize->add_option("--pt1", opt_target.p_t1, "Target power at f_1 in W, " + range_text(ranges::kPt1))
      ->required()
      ->check(CLI::Range(ranges::kPt1.lo, ranges::kPt1.hi));
  optimize->add_option("--pt2", opt_target.p_t2, "Target power at f_2 in W, " + range_text(ranges::kPt2))
      ->required()
      ->check(CLI::Range(ranges::kPt2.lo, ranges::kPt2.hi));
  optimize->add_option("--vin", opt_target.V_in, "Input voltage in V, " + range_text(ranges::kVin))
      ->check(CLI::Range(ranges::kVin.lo, ranges::kVin.hi))
      ->capture_default_str();
  optimize->add_option("--rl", opt_target.R_L, "Load resistance in Ohm, " + range_text(ranges::kRload))
      ->check(CLI::Range(ranges::kRload.lo, ranges::kRload.hi))
      ->capture_default_str();
  optimize->add_option("--seed", opt_seed, "Seed for the random starting design")->capture_default_str();
  optimize->add_option("--trace", opt_trace, "Per-step trace CSV output")->capture_default_str();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Grid evaluation of a trained agent over target powers");
  std::string eval_ckpt;
  std::string eval_config;
  std::string eval_grid = "5x5";
  std::optional<int> eval_inits;
  std::optional<std::uint64_t> eval_seed;
  std::string eval_out = "evaluation";
  int eval_workers = 1;
  evaluate->add_option("--checkpoint", eval_ckpt, "Trained checkpoint")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--config", eval_config, "Run configuration file (JSON)")->check(CLI::ExistingFile);
  evaluate->add_option("--grid", eval_grid, "Grid size N1xN2 over p_t1 " + range_text(ranges::kPt1) + " W and p_t2 " +
                                                range_text(ranges::kPt2) + " W")
      ->capture_default_str();
  evaluate->add_option("--inits", eval_inits, "Random starting designs per cell (default 5)")->check(CLI::PositiveNumber);
  evaluate->add_option("--seed", eval_seed, "Evaluation seed");
  evaluate->add_option("--out", eval_out, "Output prefix; writes <prefix>.json and <prefix>.csv")->capture_default_str();
  evaluate->add_option("--workers", eval_workers, "Worker threads")->check(CLI::PositiveNumber);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Evaluate the circuit model at one frequency");
  CircuitParams sim;
  double sim_f = 0.0;
  std::string sim_config;
  bool sim_lossless = false;
  simulate->add_option("--lr", sim.L_r, "Resonant inductance in H, " + range_text(ranges::kLr, 1e6, " uH"))->required();
  simulate->add_option("--lm", sim.L_m, "Magnetizing inductance in H, " + range_text(ranges::kLm, 1e6, " uH"))
      ->required();
  simulate->add_option("--cr", sim.C_r, "Resonant capacitance in F, " + range_text(ranges::kCr, 1e9, " nF"))->required();
  simulate->add_option("--k", sim.k, "Coupling factor, " + range_text(ranges::kK))->required();
  simulate->add_option("--f", sim_f, "Switching frequency in Hz (> 0; operating ranges f_1 " +
                                         range_text(ranges::kF1, 1e-3, " kHz") + ", f_2 " +
                                         range_text(ranges::kF2, 1e-3, " kHz") + ")")
      ->required()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--vin", sim.V_in, "Input voltage in V, " + range_text(ranges::kVin))->required();
  simulate->add_option("--rload", sim.R_L, "Load resistance in Ohm, " + range_text(ranges::kRload))->required();
  simulate->add_option("--config", sim_config, "Run configuration (loss model)")->check(CLI::ExistingFile);
  simulate->add_flag("--lossless", sim_lossless, "Zero all series resistances");

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Derivative-free reference optimizers");
  std::string bl_method = "random";
  std::int64_t bl_budget = 50;
  TargetSpec bl_target;
  std::uint64_t bl_seed = 0;
  double bl_step = 0.05;
  std::string bl_config;
  std::string bl_grid;
  int bl_inits = 5;
  std::string bl_out = "baseline";
  baseline->add_option("--method", bl_method, "random | hillclimb")
      ->check(CLI::IsMember({"random", "hillclimb"}))
      ->capture_default_str();
  baseline->add_option("--budget", bl_budget, "Circuit evaluations per run")->check(CLI::PositiveNumber)->capture_default_str();
  baseline->add_option("--pt1", bl_target.p_t1, "Target power at f_1 in W, " + range_text(ranges::kPt1))
      ->check(CLI::Range(ranges::kPt1.lo, ranges::kPt1.hi))
      ->capture_default_str();
  baseline->add_option("--pt2", bl_target.p_t2, "Target power at f_2 in W, " + range_text(ranges::kPt2))
      ->check(CLI::Range(ranges::kPt2.lo, ranges::kPt2.hi))
      ->capture_default_str();
  baseline->add_option("--vin", bl_target.V_in, "Input voltage in V, " + range_text(ranges::kVin))
      ->check(CLI::Range(ranges::kVin.lo, ranges::kVin.hi))
      ->capture_default_str();
  baseline->add_option("--rl", bl_target.R_L, "Load resistance in Ohm, " + range_text(ranges::kRload))
      ->check(CLI::Range(ranges::kRload.lo, ranges::kRload.hi))
      ->capture_default_str();
  baseline->add_option("--seed", bl_seed, "Seed")->capture_default_str();
  baseline->add_option("--step-frac", bl_step, "Hill-climb step as a fraction of each range, (0, 0.1]")
      ->check(CLI::Range(1e-12, 0.1))
      ->capture_default_str();
  baseline->add_option("--config", bl_config, "Run configuration file (JSON)")->check(CLI::ExistingFile);
  baseline->add_option("--grid", bl_grid, "Run the grid protocol N1xN2 instead of a single target");
  baseline->add_option("--inits", bl_inits, "Runs per grid cell")->check(CLI::PositiveNumber)->capture_default_str();
  baseline->add_option("--out", bl_out, "Grid output prefix; writes <prefix>.json and <prefix>.csv")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*train) {
      RunConfig cfg = resolve_config(train_config);
      if (train_episodes) cfg.training.episodes = *train_episodes;
      if (train_workers) cfg.training.workers = *train_workers;
      if (train_seeds) {
        const std::uint64_t first = cfg.training.seeds.front();
        cfg.training.seeds.clear();
        for (int i = 0; i < *train_seeds; ++i) cfg.training.seeds.push_back(first + static_cast<std::uint64_t>(i));
      }
      cfg.validate();
      std::cerr << "kernels: " << simd::active_kernels().name << "\n";
      const TrainingSummary s = run_training(cfg, train_out, train_verbose);
      {
        std::ofstream resolved = open_output(fs::path(train_out) / "resolved_config.json");
        resolved << to_json(cfg).dump(2) << "\n";
      }
      for (const auto& seed : s.seeds) {
        std::cout << fmt::format("seed {}: last-500 mean reward {:.4f}, checkpoint {}\n", seed.seed, seed.tail_reward,
                                 seed.checkpoint.string());
      }
      std::cout << "aggregate: " << s.aggregate_csv.string() << "\n";
      return kExitOk;
    }

    if (*optimize) {
      const RunConfig cfg = resolve_config(opt_config);
      opt_target.validate();
      const Checkpoint ckpt = load_checkpoint(opt_ckpt);
      const auto trace = trace_episode(ckpt.network, opt_target, opt_seed, cfg.env);
      {
        std::ofstream os = open_output(opt_trace);
        os << "# config_hash=" << config_hash(cfg) << "\n";
        write_trace_csv(os, trace);
      }
      const TraceRow& last = trace.back();
      print_params(last.params);
      std::cout << fmt::format("p_r1 = {:.6g} W (target {:g}), e_1 = {:.4f}\n", last.points.first.p_r, opt_target.p_t1,
                               last.points.first.e);
      std::cout << fmt::format("p_r2 = {:.6g} W (target {:g}), e_2 = {:.4f}\n", last.points.second.p_r,
                               opt_target.p_t2, last.points.second.e);
      std::cout << fmt::format("reward = {:.6f}\ntrace: {}\n", last.reward.total, opt_trace);
      return kExitOk;
    }

    if (*evaluate) {
      RunConfig cfg = resolve_config(eval_config);
      const auto [n1, n2] = parse_grid(eval_grid);
      GridSpec grid = GridSpec::uniform(n1, n2, cfg.evaluation.V_in, cfg.evaluation.R_L);
      grid.sample_operating_conditions = cfg.evaluation.sample_operating_conditions;
      const Checkpoint ckpt = load_checkpoint(eval_ckpt);
      const EvalReport report = grid_eval(ckpt.network, grid, eval_inits.value_or(cfg.evaluation.inits),
                                          eval_seed.value_or(cfg.evaluation.seed), cfg.env, eval_workers);
      nlohmann::json j = to_json(report);
      j["config_hash"] = config_hash(cfg);
      {
        std::ofstream os = open_output(eval_out + ".json");
        os << j.dump(2) << "\n";
      }
      {
        std::ofstream os = open_output(eval_out + ".csv");
        os << "# config_hash=" << config_hash(cfg) << "\n";
        write_eval_csv(os, report);
      }
      std::cout << fmt::format("cells {}  samples {}\nmean reward {:.4f}\nmean cell deviation {:.2f} % (max {:.2f} %)\n"
                               "mean efficiency {:.4f}\n",
                               report.cells.size(), report.samples.size(), report.mean_reward(),
                               report.mean_cell_dev_pct(), report.max_cell_dev_pct(), report.mean_efficiency());
      return kExitOk;
    }

    if (*simulate) {
      const RunConfig cfg = resolve_config(sim_config);
      const LossModel loss = sim_lossless ? LossModel::lossless() : cfg.env.loss;
      sim.f_1 = ranges::kF1.lo;
      sim.f_2 = ranges::kF2.lo;
      sim.validate();
      const OperatingPointResult r = simulate_operating_point(sim, sim_f, loss);
      std::cout << fmt::format("f   = {:.6g} Hz\np_r = {:.6g} W\ne   = {:.6g}\n", r.f, r.p_r, r.e);
      return kExitOk;
    }

    if (*baseline) {
      const RunConfig cfg = resolve_config(bl_config);
      const auto method = bl_method == "random" ? BaselineMethod::Random : BaselineMethod::HillClimb;
      if (!bl_grid.empty()) {
        const auto [n1, n2] = parse_grid(bl_grid);
        const GridSpec grid = GridSpec::uniform(n1, n2, cfg.evaluation.V_in, cfg.evaluation.R_L);
        const EvalReport report = baseline_grid_eval(method, bl_budget, grid, bl_inits, bl_seed, cfg.env, bl_step);
        nlohmann::json j = to_json(report);
        j["config_hash"] = config_hash(cfg);
        {
          std::ofstream os = open_output(bl_out + ".json");
          os << j.dump(2) << "\n";
        }
        {
          std::ofstream os = open_output(bl_out + ".csv");
          os << "# config_hash=" << config_hash(cfg) << "\n";
          write_eval_csv(os, report);
        }
        std::cout << fmt::format("{} budget {}: mean reward {:.4f}, mean cell deviation {:.2f} %, mean efficiency {:.4f}\n",
                                 report.method, bl_budget, report.mean_reward(), report.mean_cell_dev_pct(),
                                 report.mean_efficiency());
        return kExitOk;
      }
      bl_target.validate();
      const BaselineResult r = method == BaselineMethod::Random
                                   ? random_search(bl_target, bl_budget, bl_seed, cfg.env)
                                   : hill_climb(bl_target, bl_budget, bl_step, bl_seed, cfg.env);
      print_params(r.best_params);
      std::cout << fmt::format("reward = {:.6f}\nevaluations = {}\n", r.best_reward, r.evaluations_used);
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitInvalid;
}
