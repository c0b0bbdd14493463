#pragma once

// Run configuration file (JSON). Every section and key is optional; missing
// keys keep their defaults, unknown keys are rejected. Schema:
//
// {
//   "environment": { "steps": 50, "threshold": 0.815 },
//   "loss_model":  { "R_Lr": 0.07, "R_Cr": 0.035, "R_Lm": 0.35 },
//   "network":     { "hidden": 256, "hidden_layers": 2 },
//   "ppo": { "learning_rate": 1e-5, "clip_eps": 0.2, "gamma": 0.99, "gae_lambda": 0.95,
//            "epochs_per_batch": 10, "batch_episodes": 80, "minibatch_size": 128,
//            "value_coeff": 1.0, "entropy_coeff": 0.0,
//            "initial_log_std": 0.0 },
//   "training":   { "episodes": 80000, "seeds": [0], "workers": 1, "checkpoint_interval": 25 },
//   "evaluation": { "grid_pt1": 5, "grid_pt2": 5, "inits": 5, "V_in": 450, "R_L": 35,
//                   "sample_operating_conditions": false, "seed": 12345 }
// }

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llcopt/environment.hpp"
#include "llcopt/network.hpp"
#include "llcopt/ppo.hpp"

namespace llcopt {

struct TrainingConfig {
  std::int64_t episodes = 80000;
  std::vector<std::uint64_t> seeds{0};
  int workers = 1;
  int checkpoint_interval = 25;  // batches
};

struct EvaluationConfig {
  int grid_pt1 = 5;
  int grid_pt2 = 5;
  int inits = 5;
  double V_in = 450.0;
  double R_L = 35.0;
  bool sample_operating_conditions = false;
  std::uint64_t seed = 12345;
};

struct RunConfig {
  EpisodeConfig env;
  NetworkShape network;
  PpoConfig ppo;
  TrainingConfig training;
  EvaluationConfig evaluation;

  void validate() const;
};

[[nodiscard]] RunConfig run_config_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const RunConfig& cfg);
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);

/// FNV-1a 64 over the canonical JSON dump, as 16 hex digits.
[[nodiscard]] std::string config_hash(const RunConfig& cfg);

}  // namespace llcopt
