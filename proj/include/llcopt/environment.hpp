#pragma once

// Episodic parameter-tuning environment around the circuit model.
//
// One episode: draw a random starting design (and, in training mode, a random
// target), then apply `steps` bounded parameter updates. The only reward is
// emitted after the last step.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "llcopt/circuit.hpp"

namespace llcopt {

/// Calling step() on a finished episode, or similar API misuse.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline constexpr int kStateDim = 16;
inline constexpr int kActionDim = kNumTunables;
inline constexpr double kPowerScale = 5000.0;

using EnvState = std::array<double, kStateDim>;
using Action = std::array<double, kActionDim>;

struct TargetSpec {
  double p_t1 = 200.0;
  double p_t2 = 4500.0;
  double V_in = 450.0;
  double R_L = 35.0;

  void validate() const;
  friend bool operator==(const TargetSpec&, const TargetSpec&) = default;
};

struct EpisodeConfig {
  int steps = 50;
  double threshold = 0.815;
  LossModel loss{};

  void validate() const;
};

struct OperatingPoints {
  OperatingPointResult first;
  OperatingPointResult second;
};

/// Canberra-type power reward 1 - |p_r - p_t| / (p_r + p_t).
[[nodiscard]] double power_reward(double p_r, double p_t);

/// Rescales a power reward above the threshold onto [0, 1]; nullopt marks a lost episode.
[[nodiscard]] std::optional<double> scale_power_reward(double r_p, double threshold);

/// Mean of the two efficiencies and the two scaled power rewards, or 0 if either is lost.
[[nodiscard]] double total_reward(double e_1, double e_2, std::optional<double> r_p1, std::optional<double> r_p2);

struct RewardBreakdown {
  double r_e1 = 0.0;
  double r_e2 = 0.0;
  double r_p1_raw = 0.0;
  double r_p2_raw = 0.0;
  std::optional<double> r_p1;  // nullopt = below threshold
  std::optional<double> r_p2;
  double total = 0.0;

  [[nodiscard]] bool lost() const { return !r_p1 || !r_p2; }
};

[[nodiscard]] RewardBreakdown reward_breakdown(const OperatingPoints& points, const TargetSpec& target,
                                               double threshold);

/// Convex step gain (10^x - 1) / 9 on [0, 1].
[[nodiscard]] double log_step_gain(double x);

/// Applies one shaped update: each parameter moves by sign(a)·10%·range·gain(|a|), then is clamped.
[[nodiscard]] CircuitParams shape_action(const Action& action, const CircuitParams& current);

[[nodiscard]] OperatingPoints simulate_both(const CircuitParams& params, const LossModel& loss);

/// Full evaluation of one design against one target, as seen at the end of an episode.
[[nodiscard]] RewardBreakdown evaluate_design(const CircuitParams& params, const TargetSpec& target,
                                              const EpisodeConfig& cfg);

[[nodiscard]] EnvState make_state(const CircuitParams& params, const OperatingPoints& points,
                                  const TargetSpec& target);

[[nodiscard]] TargetSpec sample_target(std::mt19937_64& rng);
/// Uniform draw of the six tunables; V_in and R_L are taken from `target`.
[[nodiscard]] CircuitParams sample_design(const TargetSpec& target, std::mt19937_64& rng);

struct StepResult {
  EnvState state{};
  double reward = 0.0;
  bool done = false;
};

/// One row of an episode trace, recorded after each step.
struct TraceRow {
  int step = 0;
  CircuitParams params;
  OperatingPoints points;
  RewardBreakdown reward;
  double emitted = 0.0;  // reward returned by step(): zero until the last step
};

class Environment {
 public:
  explicit Environment(EpisodeConfig cfg = {});

  /// Starts an episode. Without a target one is drawn from the allowed ranges.
  EnvState reset(std::optional<TargetSpec> target, std::uint64_t seed);
  /// Starts an episode from a known design (V_in and R_L are overwritten by the target).
  EnvState reset_to(const TargetSpec& target, const CircuitParams& initial);

  StepResult step(const Action& action);

  [[nodiscard]] const EpisodeConfig& config() const { return cfg_; }
  [[nodiscard]] const CircuitParams& params() const { return params_; }
  [[nodiscard]] const TargetSpec& target() const { return target_; }
  [[nodiscard]] const OperatingPoints& points() const { return points_; }
  [[nodiscard]] const EnvState& state() const { return state_; }
  [[nodiscard]] int step_count() const { return step_count_; }
  [[nodiscard]] bool done() const { return started_ && step_count_ >= cfg_.steps; }
  [[nodiscard]] RewardBreakdown current_reward() const;
  [[nodiscard]] TraceRow trace_row(double emitted) const;

 private:
  void refresh();

  EpisodeConfig cfg_;
  CircuitParams params_;
  TargetSpec target_;
  OperatingPoints points_;
  EnvState state_{};
  int step_count_ = 0;
  bool started_ = false;
};

/// Writes `step,L_r,...,f_2,p_r1,p_r2,e_1,e_2,r_e1,r_e2,r_p1,r_p2,lost,total,reward` rows.
void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows);

}  // namespace llcopt
