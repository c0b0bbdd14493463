#pragma once

// Proximal policy optimization for the tuning environment: diagonal Gaussian
// actions, generalized advantage estimation, clipped surrogate, Adam.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "llcopt/environment.hpp"
#include "llcopt/network.hpp"

namespace llcopt {

struct PpoConfig {
  double learning_rate = 1e-5;
  double clip_eps = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int epochs_per_batch = 10;
  int batch_episodes = 80;
  int minibatch_size = 128;
  double value_coeff = 1.0;
  double entropy_coeff = 0.0;
  double initial_log_std = 0.0;  // starting value of every log_std entry
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

struct Transition {
  EnvState state{};
  Action action{};  // pre-clamp Gaussian sample
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  bool done = false;
};

using Trajectory = std::vector<Transition>;

struct SampledAction {
  Action action{};  // clamped to [-1, 1], what the environment receives
  Action raw{};
  double log_prob = 0.0;
};

[[nodiscard]] double gaussian_log_prob(std::span<const double> x, std::span<const double> mean,
                                       std::span<const double> log_std);
[[nodiscard]] double gaussian_entropy(std::span<const double> log_std);

/// Draws raw ~ N(mean, exp(log_std)); log_prob refers to the raw sample.
[[nodiscard]] SampledAction sample_action(std::span<const double> mean, std::span<const double> log_std,
                                          std::mt19937_64& rng);

/// Deterministic action: the mean, clamped.
[[nodiscard]] Action greedy_action(std::span<const double> mean);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Unnormalized advantages and value targets for one trajectory. The value
/// after a `done` transition is taken as zero; otherwise the next stored value
/// (or zero after the last entry) is used.
[[nodiscard]] GaeResult compute_gae(const Trajectory& traj, double gamma, double lambda);

/// In place: zero mean, unit variance (population), epsilon 1e-8 on the std.
void normalize_advantages(std::span<double> adv);

/// Flattened training samples for one update.
struct SampleBatch {
  Matrix states;
  Matrix actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;

  [[nodiscard]] std::size_t size() const { return old_log_probs.size(); }
};

/// GAE per trajectory, then batch-wide advantage normalization.
[[nodiscard]] SampleBatch build_sample_batch(const std::vector<Trajectory>& batch, const PpoConfig& cfg);

struct LossTerms {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double total = 0.0;
};

/// Scratch buffers reused across minibatches.
struct PpoWorkspace {
  Matrix states;
  Matrix grad_mean;
  Matrix grad_value;
  MlpCache policy_cache;
  MlpCache value_cache;
};

/// Loss over the samples in `indices`; when `grad` is non-empty, its gradient
/// with respect to all network parameters is added into it.
LossTerms ppo_loss(const ActorCritic& net, const SampleBatch& batch, std::span<const std::size_t> indices,
                   const PpoConfig& cfg, std::span<double> grad, PpoWorkspace& ws);

class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad, double lr, double beta1, double beta2,
            double eps);

  [[nodiscard]] std::uint64_t steps() const { return t_; }
  [[nodiscard]] std::vector<double>& first_moment() { return m_; }
  [[nodiscard]] std::vector<double>& second_moment() { return v_; }
  [[nodiscard]] const std::vector<double>& first_moment() const { return m_; }
  [[nodiscard]] const std::vector<double>& second_moment() const { return v_; }
  void set_steps(std::uint64_t t) { t_ = t; }

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double approx_kl = 0.0;
  double entropy = 0.0;
  int minibatches = 0;
};

/// Runs cfg.epochs_per_batch epochs of shuffled minibatch Adam steps. Stats
/// are means over all minibatches, measured before each step. Throws
/// NumericError (weights untouched by the offending minibatch) on a
/// non-finite loss or gradient.
UpdateStats ppo_update(ActorCritic& net, AdamState& opt, const std::vector<Trajectory>& batch,
                       const PpoConfig& cfg, std::mt19937_64& rng);

}  // namespace llcopt
