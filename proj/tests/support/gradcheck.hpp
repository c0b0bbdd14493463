#pragma once

// Central finite-difference check of the full PPO loss gradient on a small
// randomly drawn actor-critic and sample batch.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "llcopt/network.hpp"
#include "llcopt/ppo.hpp"

namespace gradcheck {

struct Instance {
  llcopt::ActorCritic net;
  llcopt::SampleBatch batch;
  llcopt::PpoConfig cfg;
};

inline Instance make_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  Instance in{llcopt::ActorCritic({5, 4, 2, 3}), {}, {}};
  in.cfg.clip_eps = 0.2;
  in.cfg.value_coeff = 0.5;
  in.cfg.entropy_coeff = 0.01;
  in.net.initialize(rng);
  auto params = in.net.parameters();
  for (auto& p : params) p += 0.5 * n01(rng);
  for (std::size_t d = 0; d < 3; ++d) {
    params[in.net.log_std_offset() + d] = std::uniform_real_distribution<double>(-1.0, 0.5)(rng);
  }

  const std::size_t m = 8;
  auto& b = in.batch;
  b.states.resize(m, 5);
  b.actions.resize(m, 3);
  for (auto& x : b.states.data) x = n01(rng);
  for (auto& x : b.actions.data) x = n01(rng);
  const auto log_std = in.net.log_std();
  for (std::size_t i = 0; i < m; ++i) {
    const auto out = in.net.forward(std::span<const double>(b.states.row(i), 5));
    const double lp = llcopt::gaussian_log_prob(std::span<const double>(b.actions.row(i), 3), out.mean, log_std);
    // keep each ratio at least 1e-3 away from the clip kinks
    double shift = 0.0;
    do {
      shift = 0.3 * n01(rng);
    } while (std::abs(std::exp(-shift) - 0.8) < 1e-3 || std::abs(std::exp(-shift) - 1.2) < 1e-3);
    b.old_log_probs.push_back(lp + shift);
    b.advantages.push_back(n01(rng));
    b.returns.push_back(n01(rng));
  }
  return in;
}

/// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
inline double max_relative_error(Instance& in, double h = 1e-5) {
  std::vector<std::size_t> idx(in.batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  llcopt::PpoWorkspace ws;
  std::vector<double> analytic(in.net.parameter_count(), 0.0);
  (void)llcopt::ppo_loss(in.net, in.batch, idx, in.cfg, analytic, ws);

  auto params = in.net.parameters();
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double keep = params[p];
    params[p] = keep + h;
    const double up = llcopt::ppo_loss(in.net, in.batch, idx, in.cfg, {}, ws).total;
    params[p] = keep - h;
    const double down = llcopt::ppo_loss(in.net, in.batch, idx, in.cfg, {}, ws).total;
    params[p] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[p]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[p] - numeric) / denom);
  }
  return worst;
}

}  // namespace gradcheck
