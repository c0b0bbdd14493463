#pragma once

// Grid evaluation of a trained policy (or a baseline) over target power pairs,
// and single-episode traces.
//
// EvalReport JSON schema:
// {
//   "method": "agent" | "random" | "hillclimb",
//   "cells": [ { "p_t1", "p_t2", "V_in", "R_L", "mean_reward", "mean_dev_pct1",
//                "mean_dev_pct2", "mean_dev_pct", "mean_e1", "mean_e2" } ... ],
//   "samples": [ { "cell", "init", "L_r", "L_m", "C_r", "k", "f_1", "f_2",
//                  "p_r1", "p_r2", "e_1", "e_2", "dev_pct1", "dev_pct2", "reward" } ... ]
// }
// Deviations are percent of the target power: 100·|p_r - p_t| / p_t.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llcopt/environment.hpp"
#include "llcopt/network.hpp"

namespace llcopt {

struct GridSpec {
  std::vector<double> p_t1;
  std::vector<double> p_t2;
  double V_in = 450.0;
  double R_L = 35.0;
  bool sample_operating_conditions = false;  // draw V_in, R_L per cell instead

  /// n1 x n2 evenly spaced points spanning the allowed target ranges.
  [[nodiscard]] static GridSpec uniform(int n1, int n2, double V_in = 450.0, double R_L = 35.0);

  /// Cell targets, p_t1-major. `seed` is only used when sampling V_in/R_L.
  [[nodiscard]] std::vector<TargetSpec> targets(std::uint64_t seed) const;
};

struct EvalSample {
  std::size_t cell = 0;
  int init = 0;
  CircuitParams params;
  double p_r1 = 0.0;
  double p_r2 = 0.0;
  double e_1 = 0.0;
  double e_2 = 0.0;
  double dev_pct1 = 0.0;
  double dev_pct2 = 0.0;
  double reward = 0.0;

  friend bool operator==(const EvalSample&, const EvalSample&) = default;
};

struct EvalCell {
  TargetSpec target;
  double mean_reward = 0.0;
  double mean_dev_pct1 = 0.0;
  double mean_dev_pct2 = 0.0;
  double mean_dev_pct = 0.0;  // of the per-sample average over both points
  double mean_e1 = 0.0;
  double mean_e2 = 0.0;

  friend bool operator==(const EvalCell&, const EvalCell&) = default;
};

struct EvalReport {
  std::string method = "agent";
  std::vector<EvalCell> cells;
  std::vector<EvalSample> samples;

  [[nodiscard]] double mean_reward() const;
  [[nodiscard]] double mean_cell_dev_pct() const;
  [[nodiscard]] double max_cell_dev_pct() const;
  [[nodiscard]] double mean_efficiency() const;  // over all samples and both points

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Fills a sample's derived fields from its final design.
[[nodiscard]] EvalSample make_sample(std::size_t cell, int init, const CircuitParams& final_params,
                                     const TargetSpec& target, const EpisodeConfig& cfg);

/// Recomputes every cell aggregate from the samples.
void aggregate_cells(EvalReport& report);

[[nodiscard]] EvalReport grid_eval(const ActorCritic& net, const GridSpec& grid, int inits, std::uint64_t seed,
                                   const EpisodeConfig& cfg = {}, int workers = 1);

enum class BaselineMethod { Random, HillClimb };

/// Same protocol with a derivative-free baseline limited to `budget` evaluations per run.
[[nodiscard]] EvalReport baseline_grid_eval(BaselineMethod method, std::int64_t budget, const GridSpec& grid,
                                            int inits, std::uint64_t seed, const EpisodeConfig& cfg = {},
                                            double step_frac = 0.05);

[[nodiscard]] nlohmann::json to_json(const EvalReport& report);
[[nodiscard]] EvalReport eval_report_from_json(const nlohmann::json& j);

/// One row per sample, prefixed with the method name.
void write_eval_csv(std::ostream& os, const EvalReport& report, bool header = true);

/// Greedy episode from a random starting design; one row per step.
[[nodiscard]] std::vector<TraceRow> trace_episode(const ActorCritic& net, const TargetSpec& target,
                                                  std::uint64_t seed, const EpisodeConfig& cfg = {});

}  // namespace llcopt
