#pragma once

// Derivative-free reference optimizers over the same reward as the agent.

#include <cstdint>
#include <string>
#include <vector>

#include "llcopt/environment.hpp"

namespace llcopt {

struct BaselineResult {
  CircuitParams best_params;
  double best_reward = 0.0;      // reward with the configured threshold
  double best_smooth = 0.0;      // reward with threshold 0, used for tie-breaking
  std::int64_t evaluations_used = 0;
  std::vector<double> best_smooth_history;  // running max of the smooth reward, per evaluation
};

/// `budget` uniform designs; keeps the best by (reward, smooth reward).
[[nodiscard]] BaselineResult random_search(const TargetSpec& target, std::int64_t budget, std::uint64_t seed,
                                           const EpisodeConfig& cfg = {});

/// Greedy single-coordinate local search accepting on the threshold-free
/// reward, restarting from a fresh random design after `restart_after`
/// consecutive rejections.
[[nodiscard]] BaselineResult hill_climb(const TargetSpec& target, std::int64_t budget, double step_frac,
                                        std::uint64_t seed, const EpisodeConfig& cfg = {},
                                        int restart_after = 500);

}  // namespace llcopt
