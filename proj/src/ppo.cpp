#include "llcopt/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "llcopt/simd/kernels.hpp"

namespace llcopt {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2π)

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void PpoConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ValidationError("ppo.learning_rate must be >= 0");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ValidationError("ppo.clip_eps must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("ppo.gamma must lie in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ValidationError("ppo.gae_lambda must lie in [0, 1]");
  if (epochs_per_batch < 1) throw ValidationError("ppo.epochs_per_batch must be >= 1");
  if (batch_episodes < 1) throw ValidationError("ppo.batch_episodes must be >= 1");
  if (minibatch_size < 1) throw ValidationError("ppo.minibatch_size must be >= 1");
  if (value_coeff < 0.0 || entropy_coeff < 0.0) throw ValidationError("ppo loss coefficients must be >= 0");
  if (!(initial_log_std >= -5.0 && initial_log_std <= 2.0)) {
    throw ValidationError("ppo.initial_log_std must lie in [-5, 2]");
  }
}

double gaussian_log_prob(std::span<const double> x, std::span<const double> mean, std::span<const double> log_std) {
  double lp = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double z = (x[d] - mean[d]) / std::exp(log_std[d]);
    lp += -0.5 * z * z - log_std[d] - kHalfLog2Pi;
  }
  return lp;
}

double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.0;
  for (double s : log_std) h += s + 0.5 + kHalfLog2Pi;
  return h;
}

SampledAction sample_action(std::span<const double> mean, std::span<const double> log_std, std::mt19937_64& rng) {
  SampledAction out;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int d = 0; d < kActionDim; ++d) {
    out.raw[d] = mean[d] + std::exp(log_std[d]) * normal(rng);
    out.action[d] = std::clamp(out.raw[d], -1.0, 1.0);
  }
  out.log_prob = gaussian_log_prob(out.raw, mean, log_std);
  return out;
}

Action greedy_action(std::span<const double> mean) {
  Action a{};
  for (int d = 0; d < kActionDim; ++d) a[d] = std::clamp(mean[d], -1.0, 1.0);
  return a;
}

GaeResult compute_gae(const Trajectory& traj, double gamma, double lambda) {
  const std::size_t n = traj.size();
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const Transition& tr = traj[t];
    const double next_value = (tr.done || t + 1 == n) ? 0.0 : traj[t + 1].value;
    const double delta = tr.reward + gamma * next_value - tr.value;
    running = tr.done ? delta : delta + gamma * lambda * running;
    out.advantages[t] = running;
    out.returns[t] = running + tr.value;
  }
  return out;
}

void normalize_advantages(std::span<double> adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (auto& a : adv) a = (a - mean) / (sd + 1e-8);
}

SampleBatch build_sample_batch(const std::vector<Trajectory>& batch, const PpoConfig& cfg) {
  std::size_t total = 0;
  for (const auto& t : batch) total += t.size();
  SampleBatch s;
  s.states.resize(total, kStateDim);
  s.actions.resize(total, kActionDim);
  s.old_log_probs.reserve(total);
  s.advantages.reserve(total);
  s.returns.reserve(total);
  std::size_t row = 0;
  for (const auto& traj : batch) {
    const GaeResult g = compute_gae(traj, cfg.gamma, cfg.gae_lambda);
    for (std::size_t t = 0; t < traj.size(); ++t, ++row) {
      std::copy(traj[t].state.begin(), traj[t].state.end(), s.states.row(row));
      std::copy(traj[t].action.begin(), traj[t].action.end(), s.actions.row(row));
      s.old_log_probs.push_back(traj[t].log_prob);
      s.advantages.push_back(g.advantages[t]);
      s.returns.push_back(g.returns[t]);
    }
  }
  normalize_advantages(s.advantages);
  return s;
}

LossTerms ppo_loss(const ActorCritic& net, const SampleBatch& batch, std::span<const std::size_t> indices,
                   const PpoConfig& cfg, std::span<double> grad, PpoWorkspace& ws) {
  const std::size_t m = indices.size();
  const std::size_t sd = net.shape().state_dim;
  const std::size_t ad = net.shape().action_dim;
  if (ws.states.rows != m || ws.states.cols != sd) ws.states.resize(m, sd);
  for (std::size_t i = 0; i < m; ++i) std::copy_n(batch.states.row(indices[i]), sd, ws.states.row(i));

  net.forward_batch(ws.states, ws.policy_cache, ws.value_cache);
  const Matrix& mean = ws.policy_cache.outputs.back();
  const Matrix& value = ws.value_cache.outputs.back();

  const std::vector<double> log_std = net.log_std();
  std::vector<double> std_dev(ad);
  for (std::size_t d = 0; d < ad; ++d) std_dev[d] = std::exp(log_std[d]);

  const bool want_grad = !grad.empty();
  if (want_grad) {
    ws.grad_mean.resize(m, ad);
    ws.grad_value.resize(m, 1);
  }
  std::vector<double> grad_log_std(ad, 0.0);

  const double inv_m = 1.0 / static_cast<double>(m);
  LossTerms out;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t idx = indices[i];
    const double* a = batch.actions.row(idx);
    const double* mu = mean.row(i);
    double lp = 0.0;
    for (std::size_t d = 0; d < ad; ++d) {
      const double z = (a[d] - mu[d]) / std_dev[d];  // same arithmetic as gaussian_log_prob
      lp += -0.5 * z * z - log_std[d] - kHalfLog2Pi;
    }
    const double ratio = std::exp(lp - batch.old_log_probs[idx]);
    const double adv = batch.advantages[idx];
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv;
    out.policy_loss -= std::min(unclipped, clipped);
    out.approx_kl += batch.old_log_probs[idx] - lp;

    const double err = value(i, 0) - batch.returns[idx];
    out.value_loss += err * err;

    if (want_grad) {
      // d(-min(...))/d(log_prob); zero when the clipped branch is the active minimum
      const double g_lp = (unclipped <= clipped ? -unclipped : 0.0) * inv_m;
      for (std::size_t d = 0; d < ad; ++d) {
        const double z = (a[d] - mu[d]) / std_dev[d];
        ws.grad_mean(i, d) = g_lp * z / std_dev[d];
        grad_log_std[d] += g_lp * (z * z - 1.0);
      }
      ws.grad_value(i, 0) = cfg.value_coeff * 2.0 * err * inv_m;
    }
  }
  out.policy_loss *= inv_m;
  out.value_loss *= inv_m;
  out.approx_kl *= inv_m;
  out.entropy = gaussian_entropy(log_std);
  out.total = out.policy_loss + cfg.value_coeff * out.value_loss - cfg.entropy_coeff * out.entropy;

  if (want_grad) {
    net.policy().backward(net.policy_params(), ws.states, ws.policy_cache, ws.grad_mean,
                          grad.subspan(0, net.policy().parameter_count()));
    net.value().backward(net.value_params(), ws.states, ws.value_cache, ws.grad_value,
                         grad.subspan(net.value_offset(), net.value().parameter_count()));
    const auto stored = net.parameters().subspan(net.log_std_offset(), ad);
    for (std::size_t d = 0; d < ad; ++d) {
      if (stored[d] < kLogStdMin || stored[d] > kLogStdMax) continue;  // clamp blocks the gradient
      grad[net.log_std_offset() + d] += grad_log_std[d] - cfg.entropy_coeff;
    }
  }
  return out;
}

void AdamState::step(std::span<double> params, std::span<const double> grad, double lr, double beta1, double beta2,
                     double eps) {
  if (m_.size() != params.size()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = std::sqrt(1.0 - std::pow(beta2, static_cast<double>(t_)));
  simd::active_kernels().adam_step(params.data(), grad.data(), m_.data(), v_.data(), params.size(), beta1, beta2,
                                   lr * bc2 / bc1, eps * bc2);
}

UpdateStats ppo_update(ActorCritic& net, AdamState& opt, const std::vector<Trajectory>& batch,
                       const PpoConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  if (batch.empty()) throw std::invalid_argument("ppo_update: empty batch");
  const SampleBatch samples = build_sample_batch(batch, cfg);
  const std::size_t n = samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(net.parameter_count());
  PpoWorkspace ws;
  UpdateStats stats;
  const auto mb = static_cast<std::size_t>(cfg.minibatch_size);
  for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(mb, n - start));
      std::fill(grad.begin(), grad.end(), 0.0);
      const LossTerms loss = ppo_loss(net, samples, idx, cfg, grad, ws);
      if (!std::isfinite(loss.total) || !all_finite(grad)) {
        throw NumericError(fmt::format("non-finite PPO loss at epoch {} minibatch {}: policy={} value={} kl={}",
                                       epoch, start / mb, loss.policy_loss, loss.value_loss, loss.approx_kl));
      }
      opt.step(net.parameters(), grad, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
      net.clamp_log_std();
      stats.policy_loss += loss.policy_loss;
      stats.value_loss += loss.value_loss;
      stats.approx_kl += loss.approx_kl;
      stats.entropy += loss.entropy;
      ++stats.minibatches;
    }
  }
  const double k = 1.0 / static_cast<double>(stats.minibatches);
  stats.policy_loss *= k;
  stats.value_loss *= k;
  stats.approx_kl *= k;
  stats.entropy *= k;
  return stats;
}

}  // namespace llcopt
