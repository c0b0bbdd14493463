#include "llcopt/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include <fmt/format.h>

namespace llcopt {

namespace {

constexpr std::uint64_t kActionStreamSalt = 0x9E3779B97F4A7C15ULL;

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void run_slice(const ActorCritic& net, const EpisodeConfig& env_cfg, std::span<const EpisodeRequest> requests,
               ActionMode mode, bool record_trace, std::span<EpisodeOutcome> out) {
  const std::size_t n = requests.size();
  if (n == 0) return;
  std::vector<Environment> envs(n, Environment(env_cfg));
  std::vector<std::mt19937_64> action_rngs;
  action_rngs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    envs[i].reset(requests[i].target, requests[i].seed);
    action_rngs.emplace_back(requests[i].seed ^ kActionStreamSalt);
    out[i].target = envs[i].target();
    out[i].initial = envs[i].params();
    if (mode == ActionMode::Sample) out[i].trajectory.reserve(static_cast<std::size_t>(env_cfg.steps));
    if (record_trace) out[i].trace.reserve(static_cast<std::size_t>(env_cfg.steps));
  }

  const std::vector<double> log_std = net.log_std();
  Matrix states(n, kStateDim);
  MlpCache pc;
  MlpCache vc;
  for (int t = 0; t < env_cfg.steps; ++t) {
    for (std::size_t i = 0; i < n; ++i) std::copy(envs[i].state().begin(), envs[i].state().end(), states.row(i));
    net.forward_batch(states, pc, vc);
    const Matrix& means = pc.outputs.back();
    const Matrix& values = vc.outputs.back();
    for (std::size_t i = 0; i < n; ++i) {
      const std::span<const double> mean(means.row(i), kActionDim);
      Transition tr;
      Action action{};
      if (mode == ActionMode::Sample) {
        const SampledAction s = sample_action(mean, log_std, action_rngs[i]);
        action = s.action;
        tr.state = envs[i].state();
        tr.action = s.raw;
        tr.log_prob = s.log_prob;
        tr.value = values(i, 0);
      } else {
        action = greedy_action(mean);
      }
      const StepResult r = envs[i].step(action);
      if (mode == ActionMode::Sample) {
        tr.reward = r.reward;
        tr.done = r.done;
        out[i].trajectory.push_back(tr);
      }
      if (record_trace) out[i].trace.push_back(envs[i].trace_row(r.reward));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    out[i].final = envs[i].params();
    out[i].final_reward = envs[i].current_reward();
  }
}

}  // namespace

std::vector<EpisodeOutcome> run_episodes(const ActorCritic& net, const EpisodeConfig& env_cfg,
                                         std::span<const EpisodeRequest> requests, ActionMode mode, bool record_trace,
                                         int workers) {
  require_env_compatible(net);
  std::vector<EpisodeOutcome> out(requests.size());
  const std::size_t n = requests.size();
  const std::size_t w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, std::max<std::size_t>(n, 1));
  if (w == 1) {
    run_slice(net, env_cfg, requests, mode, record_trace, out);
    return out;
  }
  std::vector<std::jthread> threads;
  std::vector<std::exception_ptr> errors(w);
  for (std::size_t k = 0; k < w; ++k) {
    const std::size_t begin = n * k / w;
    const std::size_t end = n * (k + 1) / w;
    threads.emplace_back([&, k, begin, end] {
      try {
        run_slice(net, env_cfg, requests.subspan(begin, end - begin), mode, record_trace,
                  std::span(out).subspan(begin, end - begin));
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  threads.clear();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

void write_metrics_header(std::ostream& os, const std::string& config_hash) {
  os << "# config_hash=" << config_hash << "\n";
  os << "batch,episodes_done,reward_mean,reward_min,reward_max,policy_loss,value_loss,kl\n";
}

void write_metrics_row(std::ostream& os, const BatchMetrics& m) {
  os << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", m.batch, m.episodes_done,
                    m.reward_mean, m.reward_min, m.reward_max, m.policy_loss, m.value_loss, m.kl);
}

Trainer::Trainer(const RunConfig& cfg, std::uint64_t seed) : cfg_(cfg), net_(cfg.network), rng_(seed) {
  cfg_.validate();
  net_.initialize(rng_, cfg.ppo.initial_log_std);
  opt_ = AdamState(net_.parameter_count());
}

Trainer::Trainer(const RunConfig& cfg, const Checkpoint& ckpt)
    : cfg_(cfg),
      net_(ckpt.network),
      opt_(ckpt.optimizer),
      episodes_done_(ckpt.episodes_done),
      batches_done_(ckpt.batches_done) {
  cfg_.validate();
  if (!(ckpt.network.shape() == cfg.network)) {
    throw CheckpointError("checkpoint network shape differs from the run configuration");
  }
  if (!ckpt.has_optimizer || ckpt.rng_state.empty()) {
    throw CheckpointError("checkpoint lacks optimizer or RNG state; cannot resume training");
  }
  std::istringstream is(ckpt.rng_state);
  is >> rng_;
  if (!is) throw CheckpointError("checkpoint field 'rng_state' is not a valid generator state");
}

BatchMetrics Trainer::train_batch(std::uint64_t episodes) {
  std::vector<EpisodeRequest> requests(episodes);
  for (auto& r : requests) r.seed = rng_();
  const auto outcomes = run_episodes(net_, cfg_.env, requests, ActionMode::Sample, false, cfg_.training.workers);

  std::vector<Trajectory> batch;
  batch.reserve(outcomes.size());
  BatchMetrics m;
  for (const auto& o : outcomes) {
    batch.push_back(o.trajectory);
    m.episode_rewards.push_back(o.trajectory.back().reward);
  }
  const UpdateStats stats = ppo_update(net_, opt_, batch, cfg_.ppo, rng_);

  episodes_done_ += episodes;
  ++batches_done_;
  m.batch = batches_done_;
  m.episodes_done = episodes_done_;
  m.reward_mean = std::accumulate(m.episode_rewards.begin(), m.episode_rewards.end(), 0.0) /
                  static_cast<double>(m.episode_rewards.size());
  m.reward_min = *std::min_element(m.episode_rewards.begin(), m.episode_rewards.end());
  m.reward_max = *std::max_element(m.episode_rewards.begin(), m.episode_rewards.end());
  m.policy_loss = stats.policy_loss;
  m.value_loss = stats.value_loss;
  m.kl = stats.approx_kl;
  return m;
}

Checkpoint Trainer::checkpoint() const {
  return Checkpoint{net_, opt_, true, rng_to_string(rng_), episodes_done_, batches_done_};
}

double tail_mean(std::span<const double> values, std::size_t n) {
  if (values.empty()) return 0.0;
  const std::size_t k = std::min(n, values.size());
  return std::accumulate(values.end() - static_cast<std::ptrdiff_t>(k), values.end(), 0.0) / static_cast<double>(k);
}

TrainingSummary run_training(const RunConfig& cfg, const std::filesystem::path& out_dir, bool verbose) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " + ec.message());
  const std::string hash = config_hash(cfg);

  TrainingSummary summary;
  for (const std::uint64_t seed : cfg.training.seeds) {
    const auto dir = out_dir / fmt::format("seed_{}", seed);
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

    SeedSummary s;
    s.seed = seed;
    s.metrics_csv = dir / "metrics.csv";
    s.checkpoint = dir / "final.ckpt";
    std::ofstream csv(s.metrics_csv, std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write " + s.metrics_csv.string());
    write_metrics_header(csv, hash);

    Trainer trainer(cfg, seed);
    std::vector<double> rewards;
    const auto total = static_cast<std::uint64_t>(cfg.training.episodes);
    const auto per_batch = static_cast<std::uint64_t>(cfg.ppo.batch_episodes);
    while (trainer.episodes_done() < total) {
      BatchMetrics m;
      try {
        m = trainer.train_batch(std::min(per_batch, total - trainer.episodes_done()));
      } catch (const NumericError& e) {
        save_checkpoint(dir / "halted.ckpt", trainer.checkpoint());
        throw NumericError(fmt::format("seed {} halted after {} episodes: {}", seed, trainer.episodes_done(),
                                       e.what()));
      }
      write_metrics_row(csv, m);
      csv.flush();
      rewards.insert(rewards.end(), m.episode_rewards.begin(), m.episode_rewards.end());
      if (verbose) {
        std::cerr << fmt::format("seed {} batch {} episodes {} reward {:.4f} (last500 {:.4f}) kl {:.4g}\n", seed,
                                 m.batch, m.episodes_done, m.reward_mean, tail_mean(rewards, 500), m.kl);
      }
      if (trainer.batches_done() % static_cast<std::uint64_t>(cfg.training.checkpoint_interval) == 0) {
        save_checkpoint(dir / "latest.ckpt", trainer.checkpoint());
      }
      m.episode_rewards.clear();
      s.history.push_back(std::move(m));
    }
    save_checkpoint(s.checkpoint, trainer.checkpoint());
    s.tail_reward = tail_mean(rewards, 500);
    summary.seeds.push_back(std::move(s));
  }

  summary.aggregate_csv = out_dir / "aggregate.csv";
  std::ofstream agg(summary.aggregate_csv, std::ios::trunc);
  agg << "# config_hash=" << hash << "\n";
  agg << "batch,episodes_done,seeds,reward_mean,reward_std,reward_min,reward_max\n";
  const std::size_t batches = summary.seeds.empty() ? 0 : summary.seeds.front().history.size();
  for (std::size_t b = 0; b < batches; ++b) {
    std::vector<double> means;
    double lo = 1.0;
    double hi = 0.0;
    for (const auto& s : summary.seeds) {
      const auto& m = s.history[b];
      means.push_back(m.reward_mean);
      lo = std::min(lo, m.reward_min);
      hi = std::max(hi, m.reward_max);
    }
    const double n = static_cast<double>(means.size());
    const double mean = std::accumulate(means.begin(), means.end(), 0.0) / n;
    double var = 0.0;
    for (double x : means) var += (x - mean) * (x - mean);
    agg << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", b + 1, summary.seeds.front().history[b].episodes_done,
                       means.size(), mean, std::sqrt(var / n), lo, hi);
  }
  return summary;
}

std::vector<TargetEvaluation> evaluate_policy(const ActorCritic& net, const EpisodeConfig& env_cfg,
                                              std::span<const TargetSpec> targets, int inits_per_target,
                                              std::uint64_t seed, int workers) {
  require_env_compatible(net);
  if (inits_per_target < 1) throw ValidationError("inits_per_target must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<EpisodeRequest> requests;
  for (const auto& t : targets) {
    t.validate();
    for (int i = 0; i < inits_per_target; ++i) requests.push_back({rng(), t});
  }
  auto outcomes = run_episodes(net, env_cfg, requests, ActionMode::Greedy, false, workers);

  std::vector<TargetEvaluation> out;
  out.reserve(targets.size());
  const auto per = static_cast<std::size_t>(inits_per_target);
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    TargetEvaluation te;
    te.target = targets[ti];
    for (std::size_t i = 0; i < per; ++i) te.runs.push_back(std::move(outcomes[ti * per + i]));
    for (const auto& r : te.runs) {
      const OperatingPoints pts = simulate_both(r.final, env_cfg.loss);
      te.mean_reward += r.final_reward.total;
      te.mean_rel_dev1 += std::abs(pts.first.p_r - te.target.p_t1) / te.target.p_t1;
      te.mean_rel_dev2 += std::abs(pts.second.p_r - te.target.p_t2) / te.target.p_t2;
      te.mean_e1 += pts.first.e;
      te.mean_e2 += pts.second.e;
    }
    const double k = 1.0 / static_cast<double>(per);
    te.mean_reward *= k;
    te.mean_rel_dev1 *= k;
    te.mean_rel_dev2 *= k;
    te.mean_e1 *= k;
    te.mean_e2 *= k;
    out.push_back(std::move(te));
  }
  return out;
}

}  // namespace llcopt
