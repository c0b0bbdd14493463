#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <doctest.h>

#include "llcopt/circuit.hpp"
#include "llcopt/network.hpp"
#include "llcopt/ppo.hpp"
#include "support/gradcheck.hpp"

using namespace llcopt;

namespace {

Trajectory make_traj(const std::vector<double>& rewards, const std::vector<double>& values) {
  Trajectory t(rewards.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i].reward = rewards[i];
    t[i].value = values[i];
  }
  t.back().done = true;
  return t;
}

std::vector<Trajectory> random_batch(const ActorCritic& net, std::size_t episodes, std::size_t len,
                                     std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<Trajectory> batch;
  for (std::size_t e = 0; e < episodes; ++e) {
    Trajectory t(len);
    for (std::size_t i = 0; i < len; ++i) {
      for (auto& s : t[i].state) s = n01(rng);
      const auto out = net.forward(t[i].state);
      const SampledAction a = sample_action(out.mean, out.log_std, rng);
      t[i].action = a.raw;
      t[i].log_prob = a.log_prob;
      t[i].value = out.value;
      t[i].reward = i + 1 == len ? n01(rng) : 0.0;
      t[i].done = i + 1 == len;
    }
    batch.push_back(std::move(t));
  }
  return batch;
}

}  // namespace

TEST_CASE("zero network outputs zero mean and value") {
  ActorCritic net;
  std::fill(net.parameters().begin(), net.parameters().end(), 0.0);
  EnvState s{};
  s.fill(0.3);
  const auto out = net.forward(s);
  for (double m : out.mean) CHECK(m == 0.0);
  CHECK(out.value == 0.0);
}

TEST_CASE("forward is pure and rejects non-finite input") {
  ActorCritic net;
  std::mt19937_64 rng(1);
  net.initialize(rng);
  EnvState s{};
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = 0.1 * static_cast<double>(i);
  const auto a = net.forward(s);
  const auto b = net.forward(s);
  CHECK(a.mean == b.mean);
  CHECK(a.value == b.value);
  s[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)net.forward(s), NumericError);
}

TEST_CASE("initialization") {
  ActorCritic net;
  std::mt19937_64 rng(2);
  net.initialize(rng, -0.7);
  for (double v : net.log_std()) CHECK(v == -0.7);
  // hidden layer rows are orthogonal with norm sqrt(2)
  const Mlp& pi = net.policy();
  const auto p = net.parameters();
  const std::size_t in = pi.sizes()[1];
  const double* w = p.data() + pi.weight_offset(1);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      double dot = 0.0;
      for (std::size_t k = 0; k < in; ++k) dot += w[r * in + k] * w[c * in + k];
      CHECK(dot == doctest::Approx(r == c ? 2.0 : 0.0).epsilon(1e-12).scale(1.0));
    }
  }
  for (std::size_t i = 0; i < pi.sizes()[1]; ++i) CHECK(p[pi.bias_offset(0) + i] == 0.0);
  net.parameters()[net.log_std_offset()] = 9.0;
  net.clamp_log_std();
  CHECK(net.log_std()[0] == kLogStdMax);
}

TEST_CASE("PPO loss gradient matches central differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto in = gradcheck::make_instance(seed);
    CAPTURE(seed);
    CHECK(gradcheck::max_relative_error(in) <= 1e-4);
  }
}

TEST_CASE("gaussian helpers") {
  const std::vector<double> mean{0.1, -0.2};
  const std::vector<double> ls{-0.5, 0.3};
  const std::vector<double> x{0.4, 0.0};
  double expect = 0.0;
  for (int d = 0; d < 2; ++d) {
    const double s = std::exp(ls[d]);
    expect += std::log(std::exp(-0.5 * std::pow((x[d] - mean[d]) / s, 2)) / (s * std::sqrt(2.0 * M_PI)));
  }
  CHECK(gaussian_log_prob(x, mean, ls) == doctest::Approx(expect).epsilon(1e-13));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> a{u(rng), u(rng)};
    std::vector<double> b = a;
    b[i % 2] += 0.01 + std::abs(u(rng));
    CHECK(gaussian_entropy(b) > gaussian_entropy(a));
  }
}

TEST_CASE("action sampling") {
  std::vector<double> mean{0.3, -0.7, 1.4, -2.0, 0.0, 0.95};
  SUBCASE("near-deterministic at the minimum log-std") {
    std::vector<double> ls(6, kLogStdMin);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 1000; ++i) {
      const SampledAction a = sample_action(mean, ls, rng);
      for (int d = 0; d < 6; ++d) {
        CHECK(std::abs(a.action[d] - std::clamp(mean[d], -1.0, 1.0)) < 0.03);
        CHECK(a.action[d] == std::clamp(a.raw[d], -1.0, 1.0));
      }
      CHECK(a.log_prob == gaussian_log_prob(a.raw, mean, ls));
    }
  }
  SUBCASE("reproducible under a fixed seed") {
    std::vector<double> ls(6, 0.0);
    std::mt19937_64 r1(6);
    std::mt19937_64 r2(6);
    CHECK(sample_action(mean, ls, r1).raw == sample_action(mean, ls, r2).raw);
  }
  SUBCASE("empirical mean converges") {
    std::vector<double> ls{-1.0, -0.5, 0.0, 0.2, -2.0, 0.5};
    std::mt19937_64 rng(7);
    const int n = 100000;
    std::vector<double> sum(6, 0.0);
    for (int i = 0; i < n; ++i) {
      const SampledAction a = sample_action(mean, ls, rng);
      for (int d = 0; d < 6; ++d) sum[d] += a.raw[d];
    }
    for (int d = 0; d < 6; ++d) {
      CHECK(std::abs(sum[d] / n - mean[d]) <= 3.0 * std::exp(ls[d]) / std::sqrt(static_cast<double>(n)));
    }
  }
  CHECK(greedy_action(mean) == Action{0.3, -0.7, 1.0, -1.0, 0.0, 0.95});
}

TEST_CASE("GAE") {
  SUBCASE("null signal") {
    const auto g = compute_gae(make_traj({0, 0, 0, 0}, {0, 0, 0, 0}), 0.99, 0.95);
    for (double a : g.advantages) CHECK(a == 0.0);
  }
  SUBCASE("lambda 0 is the one-step TD error") {
    const auto t = make_traj({0.0, 0.5, 0.0, 1.0}, {0.2, -0.1, 0.4, 0.3});
    const auto g = compute_gae(t, 0.9, 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double next = i + 1 < t.size() ? t[i + 1].value : 0.0;
      CHECK(g.advantages[i] == t[i].reward + 0.9 * next - t[i].value);
      CHECK(g.returns[i] == g.advantages[i] + t[i].value);
    }
  }
  SUBCASE("lambda 1, gamma 1, zero values: every advantage is the terminal reward") {
    const auto g = compute_gae(make_traj({0, 0, 0, 0, 0.73}, {0, 0, 0, 0, 0}), 1.0, 1.0);
    for (double a : g.advantages) CHECK(a == 0.73);
  }
  SUBCASE("done resets the recursion") {
    Trajectory t = make_traj({1.0, 2.0}, {0.0, 0.0});
    t[0].done = true;
    const auto g = compute_gae(t, 1.0, 1.0);
    CHECK(g.advantages[0] == 1.0);
    CHECK(g.advantages[1] == 2.0);
  }
  SUBCASE("normalization") {
    std::vector<double> a{1.0, 2.0, 3.0, 4.0};
    normalize_advantages(a);
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / 4.0;
    double var = 0.0;
    for (double x : a) var += (x - mean) * (x - mean);
    CHECK(std::abs(mean) < 1e-15);
    CHECK(var / 4.0 == doctest::Approx(1.0).epsilon(1e-7));
  }
}

TEST_CASE("surrogate at ratio one is minus the mean advantage") {
  ActorCritic net;
  std::mt19937_64 rng(8);
  net.initialize(rng);
  PpoConfig cfg;
  const auto batch = random_batch(net, 3, 50, rng);
  const SampleBatch s = build_sample_batch(batch, cfg);
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  PpoWorkspace ws;
  const LossTerms l = ppo_loss(net, s, idx, cfg, {}, ws);
  double mean_adv = 0.0;
  for (double a : s.advantages) mean_adv += a;
  mean_adv /= static_cast<double>(s.size());
  CHECK(std::abs(l.policy_loss + mean_adv) <= 1e-15);
  CHECK(l.approx_kl == 0.0);
}

TEST_CASE("zero advantages give no policy gradient") {
  ActorCritic net;
  std::mt19937_64 rng(9);
  net.initialize(rng);
  PpoConfig cfg;
  auto batch = random_batch(net, 2, 50, rng);
  SampleBatch s = build_sample_batch(batch, cfg);
  std::fill(s.advantages.begin(), s.advantages.end(), 0.0);
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  PpoWorkspace ws;
  std::vector<double> grad(net.parameter_count(), 0.0);
  (void)ppo_loss(net, s, idx, cfg, grad, ws);
  for (std::size_t i = 0; i < net.value_offset(); ++i) REQUIRE(grad[i] == 0.0);
  double value_norm = 0.0;
  for (std::size_t i = net.value_offset(); i < grad.size(); ++i) value_norm += std::abs(grad[i]);
  CHECK(value_norm > 0.0);
}

TEST_CASE("clipped objective never exceeds the unclipped surrogate") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> r(0.0, 3.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double rho = r(rng);
    const double a = n01(rng);
    const double obj = std::min(rho * a, std::clamp(rho, 0.8, 1.2) * a);
    REQUIRE(obj <= rho * a);
    REQUIRE(obj <= std::max(rho * a, std::clamp(rho, 0.8, 1.2) * a));
  }
}

TEST_CASE("ppo_update with zero learning rate leaves weights bit-identical") {
  ActorCritic net;
  std::mt19937_64 rng(11);
  net.initialize(rng);
  const std::vector<double> before(net.parameters().begin(), net.parameters().end());
  PpoConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs_per_batch = 2;
  AdamState opt(net.parameter_count());
  const auto batch = random_batch(net, 4, 50, rng);
  const UpdateStats st = ppo_update(net, opt, batch, cfg, rng);
  CHECK(std::equal(before.begin(), before.end(), net.parameters().begin()));
  CHECK(st.minibatches == 2 * 2);
  CHECK(opt.steps() == 4);
}

TEST_CASE("ppo_update improves the surrogate and reports finite statistics") {
  ActorCritic net;
  std::mt19937_64 rng(12);
  net.initialize(rng);
  PpoConfig cfg;
  cfg.learning_rate = 1e-3;
  AdamState opt(net.parameter_count());
  const auto batch = random_batch(net, 4, 50, rng);
  const SampleBatch s = build_sample_batch(batch, cfg);
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  PpoWorkspace ws;
  const double before = ppo_loss(net, s, idx, cfg, {}, ws).total;
  const UpdateStats st = ppo_update(net, opt, batch, cfg, rng);
  CHECK(std::isfinite(st.policy_loss));
  CHECK(std::isfinite(st.value_loss));
  CHECK(ppo_loss(net, s, idx, cfg, {}, ws).total < before);
}

TEST_CASE("non-finite loss aborts the update") {
  ActorCritic net;
  std::mt19937_64 rng(13);
  net.initialize(rng);
  PpoConfig cfg;
  auto batch = random_batch(net, 1, 50, rng);
  batch[0].back().reward = std::numeric_limits<double>::infinity();
  AdamState opt(net.parameter_count());
  const std::vector<double> before(net.parameters().begin(), net.parameters().end());
  CHECK_THROWS_AS(ppo_update(net, opt, batch, cfg, rng), NumericError);
  CHECK(std::equal(before.begin(), before.end(), net.parameters().begin()));
}

TEST_CASE("PPO config validation") {
  PpoConfig c;
  CHECK_NOTHROW(c.validate());
  c.clip_eps = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = PpoConfig{};
  c.learning_rate = -1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = PpoConfig{};
  c.initial_log_std = -6.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}
