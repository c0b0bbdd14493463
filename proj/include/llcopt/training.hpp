#pragma once

// Episode rollouts, the PPO training loop and policy evaluation.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "llcopt/checkpoint.hpp"
#include "llcopt/config.hpp"
#include "llcopt/environment.hpp"
#include "llcopt/ppo.hpp"

namespace llcopt {

struct EpisodeRequest {
  std::uint64_t seed = 0;
  std::optional<TargetSpec> target;  // nullopt: drawn from the allowed ranges
};

struct EpisodeOutcome {
  TargetSpec target;
  CircuitParams initial;
  CircuitParams final;
  RewardBreakdown final_reward;
  Trajectory trajectory;        // filled for stochastic rollouts
  std::vector<TraceRow> trace;  // filled when requested
};

enum class ActionMode { Sample, Greedy };

/// Runs each request as one full episode. Episode i depends only on
/// requests[i] and the weights: the environment is reset with the request
/// seed and actions are sampled from an RNG derived from it, so the split
/// over `workers` threads never changes any outcome.
[[nodiscard]] std::vector<EpisodeOutcome> run_episodes(const ActorCritic& net, const EpisodeConfig& env_cfg,
                                                       std::span<const EpisodeRequest> requests, ActionMode mode,
                                                       bool record_trace, int workers = 1);

struct BatchMetrics {
  std::uint64_t batch = 0;
  std::uint64_t episodes_done = 0;
  double reward_mean = 0.0;
  double reward_min = 0.0;
  double reward_max = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double kl = 0.0;
  std::vector<double> episode_rewards;
};

void write_metrics_header(std::ostream& os, const std::string& config_hash);
void write_metrics_row(std::ostream& os, const BatchMetrics& m);

/// Training state for one seed.
class Trainer {
 public:
  Trainer(const RunConfig& cfg, std::uint64_t seed);
  /// Resumes from a checkpoint that carries optimizer and RNG state.
  Trainer(const RunConfig& cfg, const Checkpoint& ckpt);

  /// Collects min(batch_episodes, remaining) episodes and runs one PPO update.
  BatchMetrics train_batch(std::uint64_t episodes);

  [[nodiscard]] Checkpoint checkpoint() const;
  [[nodiscard]] const ActorCritic& network() const { return net_; }
  [[nodiscard]] std::uint64_t episodes_done() const { return episodes_done_; }
  [[nodiscard]] std::uint64_t batches_done() const { return batches_done_; }

 private:
  RunConfig cfg_;
  ActorCritic net_;
  AdamState opt_;
  std::mt19937_64 rng_;
  std::uint64_t episodes_done_ = 0;
  std::uint64_t batches_done_ = 0;
};

struct SeedSummary {
  std::uint64_t seed = 0;
  std::filesystem::path metrics_csv;
  std::filesystem::path checkpoint;
  std::vector<BatchMetrics> history;
  /// Mean terminal reward over the last `tail` episodes (tail = min(500, episodes)).
  double tail_reward = 0.0;
};

struct TrainingSummary {
  std::vector<SeedSummary> seeds;
  std::filesystem::path aggregate_csv;
};

/// Trains one agent per configured seed under out_dir/seed_<s>/ and writes
/// out_dir/aggregate.csv (mean/std across seeds per batch). A non-finite
/// loss saves out_dir/seed_<s>/halted.ckpt and rethrows.
TrainingSummary run_training(const RunConfig& cfg, const std::filesystem::path& out_dir, bool verbose = false);

/// Mean of the last `n` values (all of them if fewer).
[[nodiscard]] double tail_mean(std::span<const double> values, std::size_t n);

struct TargetEvaluation {
  TargetSpec target;
  std::vector<EpisodeOutcome> runs;
  double mean_reward = 0.0;
  double mean_rel_dev1 = 0.0;  // |p_r - p_t| / p_t
  double mean_rel_dev2 = 0.0;
  double mean_e1 = 0.0;
  double mean_e2 = 0.0;
};

/// Greedy-policy episodes from `inits_per_target` random starting designs per target.
[[nodiscard]] std::vector<TargetEvaluation> evaluate_policy(const ActorCritic& net, const EpisodeConfig& env_cfg,
                                                            std::span<const TargetSpec> targets,
                                                            int inits_per_target, std::uint64_t seed,
                                                            int workers = 1);

}  // namespace llcopt
