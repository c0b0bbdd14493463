#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <doctest.h>

#include "llcopt/baselines.hpp"
#include "llcopt/evaluation.hpp"
#include "llcopt/training.hpp"

using namespace llcopt;
namespace fs = std::filesystem;

namespace {

const TargetSpec kMid{200.0, 4500.0, 450.0, 35.0};

RunConfig small_config() {
  RunConfig c;
  c.network.hidden = 16;
  c.ppo.batch_episodes = 4;
  c.ppo.epochs_per_batch = 2;
  c.ppo.minibatch_size = 64;
  c.ppo.learning_rate = 1e-3;
  c.training.episodes = 12;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("llcopt_test_" + name);
  fs::remove_all(p);
  return p;
}

ActorCritic untrained(std::uint64_t seed) {
  ActorCritic net;
  std::mt19937_64 rng(seed);
  net.initialize(rng);
  return net;
}

}  // namespace

TEST_CASE("tail mean") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(tail_mean(v, 2) == 3.5);
  CHECK(tail_mean(v, 10) == 2.5);
  CHECK(tail_mean(std::vector<double>{}, 3) == 0.0);
}

TEST_CASE("training with a fixed seed is reproducible") {
  const RunConfig cfg = small_config();
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  const TrainingSummary sa = run_training(cfg, a);
  (void)run_training(cfg, b);
  const std::string csv = slurp(a / "seed_0" / "metrics.csv");
  CHECK(csv == slurp(b / "seed_0" / "metrics.csv"));
  CHECK(csv.rfind("# config_hash=" + config_hash(cfg), 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2 + 3);
  CHECK(slurp(a / "seed_0" / "final.ckpt") == slurp(b / "seed_0" / "final.ckpt"));
  CHECK(sa.seeds.size() == 1);
  CHECK(sa.seeds[0].history.size() == 3);

  SUBCASE("worker count does not change any output") {
    RunConfig w = cfg;
    w.training.workers = 3;
    const fs::path c = scratch("det_c");
    (void)run_training(w, c);
    CHECK(slurp(c / "seed_0" / "metrics.csv") == csv);
    fs::remove_all(c);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("zero episodes writes the initial checkpoint and an empty metrics body") {
  RunConfig cfg = small_config();
  cfg.training.episodes = 0;
  const fs::path out = scratch("zero");
  const TrainingSummary s = run_training(cfg, out);
  CHECK(fs::exists(out / "seed_0" / "final.ckpt"));
  const std::string csv = slurp(out / "seed_0" / "metrics.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(s.seeds[0].history.empty());
  const Checkpoint c = load_checkpoint(out / "seed_0" / "final.ckpt");
  const Trainer fresh(cfg, 0);
  CHECK(std::equal(c.network.parameters().begin(), c.network.parameters().end(),
                   fresh.network().parameters().begin()));
  fs::remove_all(out);
}

TEST_CASE("several seeds produce an aggregate") {
  RunConfig cfg = small_config();
  cfg.training.episodes = 8;
  cfg.training.seeds = {0, 1, 2};
  const fs::path out = scratch("agg");
  const TrainingSummary s = run_training(cfg, out);
  CHECK(s.seeds.size() == 3);
  std::ifstream is(s.aggregate_csv);
  std::string line;
  std::getline(is, line);
  CHECK(line.rfind("# config_hash=", 0) == 0);
  std::getline(is, line);
  CHECK(line == "batch,episodes_done,seeds,reward_mean,reward_std,reward_min,reward_max");
  int rows = 0;
  while (std::getline(is, line)) {
    if (!line.empty()) ++rows;
    CHECK(line.find(",3,") != std::string::npos);
  }
  CHECK(rows == 2);
  fs::remove_all(out);
}

TEST_CASE("unwritable output directory fails at startup") {
  RunConfig cfg = small_config();
  CHECK_THROWS(run_training(cfg, "/proc/llcopt_forbidden"));
}

TEST_CASE("episode rollouts") {
  const ActorCritic net = untrained(5);
  const EpisodeConfig env;
  std::vector<EpisodeRequest> req{{1, kMid}, {2, std::nullopt}, {3, kMid}};
  const auto a = run_episodes(net, env, req, ActionMode::Sample, true, 1);
  const auto b = run_episodes(net, env, req, ActionMode::Sample, true, 2);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].trajectory.size() == 50);
    CHECK(a[i].trace.size() == 50);
    CHECK(a[i].final == b[i].final);
    CHECK(a[i].final_reward.total == a[i].trajectory.back().reward);
    CHECK(a[i].trajectory.back().done);
    for (std::size_t t = 0; t + 1 < a[i].trajectory.size(); ++t) CHECK(a[i].trajectory[t].reward == 0.0);
  }
  CHECK(a[0].target == kMid);
  // a single request reproduces its episode regardless of its neighbours
  const auto solo = run_episodes(net, env, std::span(&req[2], 1), ActionMode::Sample, false, 1);
  CHECK(solo[0].final == a[2].final);
}

TEST_CASE("evaluate_policy is deterministic and an untrained policy scores low") {
  const ActorCritic net = untrained(6);
  const std::vector<TargetSpec> targets{kMid, TargetSpec{140.0, 4700.0, 450.0, 35.0}};
  const auto a = evaluate_policy(net, EpisodeConfig{}, targets, 20, 99);
  const auto b = evaluate_policy(net, EpisodeConfig{}, targets, 20, 99);
  REQUIRE(a.size() == 2);
  double mean = 0.0;
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(a[t].runs.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) CHECK(a[t].runs[i].final == b[t].runs[i].final);
    mean += a[t].mean_reward / 2.0;
  }
  CHECK(mean < 0.2);
}

TEST_CASE("grid evaluation") {
  const ActorCritic net = untrained(7);
  SUBCASE("single cell") {
    GridSpec g = GridSpec::uniform(1, 1);
    const EvalReport r = grid_eval(net, g, 1, 3);
    CHECK(r.cells.size() == 1);
    CHECK(r.samples.size() == 1);
    CHECK(r.cells[0].target.p_t1 == 200.0);
    CHECK(r.cells[0].target.p_t2 == 4500.0);
  }
  SUBCASE("default grid axes") {
    const GridSpec g = GridSpec::uniform(5, 5);
    CHECK(g.p_t1 == std::vector<double>{100, 150, 200, 250, 300});
    CHECK(g.p_t2 == std::vector<double>{4000, 4250, 4500, 4750, 5000});
    CHECK(g.targets(0).size() == 25);
    GridSpec empty;
    CHECK_THROWS_AS((void)empty.targets(0), ValidationError);
  }
  SUBCASE("cell means, deviations and JSON round trip") {
    const EvalReport r = grid_eval(net, GridSpec::uniform(2, 3), 3, 11);
    REQUIRE(r.cells.size() == 6);
    REQUIRE(r.samples.size() == 18);
    for (std::size_t c = 0; c < r.cells.size(); ++c) {
      double reward = 0.0, dev = 0.0, e1 = 0.0;
      for (const auto& s : r.samples) {
        if (s.cell != c) continue;
        reward += s.reward;
        dev += 0.5 * (s.dev_pct1 + s.dev_pct2);
        e1 += s.e_1;
        const TargetSpec& t = r.cells[c].target;
        CHECK(s.dev_pct1 == 100.0 * std::abs(s.p_r1 - t.p_t1) / t.p_t1);
        CHECK(s.dev_pct2 == 100.0 * std::abs(s.p_r2 - t.p_t2) / t.p_t2);
      }
      CHECK(r.cells[c].mean_reward == doctest::Approx(reward / 3.0).epsilon(1e-15));
      CHECK(r.cells[c].mean_dev_pct == doctest::Approx(dev / 3.0).epsilon(1e-15));
      CHECK(r.cells[c].mean_e1 == doctest::Approx(e1 / 3.0).epsilon(1e-15));
    }
    const EvalReport back = eval_report_from_json(nlohmann::json::parse(to_json(r).dump()));
    CHECK(back == r);
    CHECK_THROWS_AS((void)eval_report_from_json(nlohmann::json::parse("{}")), ValidationError);
  }
}

TEST_CASE("trace episode") {
  const ActorCritic net = untrained(8);
  const auto rows = trace_episode(net, TargetSpec{140.0, 4700.0, 450.0, 35.0}, 1);
  REQUIRE(rows.size() == 50);
  CHECK(rows.front().step == 1);
  CHECK(rows.back().step == 50);
  CHECK(rows.back().emitted == rows.back().reward.total);
  for (const auto& r : rows) CHECK(r.params.in_range());
}

TEST_CASE("random search") {
  SUBCASE("budget one returns the single draw") {
    const BaselineResult r = random_search(kMid, 1, 5);
    std::mt19937_64 rng(5);
    const CircuitParams p = sample_design(kMid, rng);
    CHECK(r.best_params == p);
    CHECK(r.evaluations_used == 1);
  }
  SUBCASE("deterministic, re-evaluable and monotone in the budget") {
    const BaselineResult a = random_search(kMid, 1000, 17);
    const BaselineResult b = random_search(kMid, 1000, 17);
    CHECK(a.best_params == b.best_params);
    CHECK(a.best_reward == evaluate_design(a.best_params, kMid, EpisodeConfig{}).total);
    const BaselineResult big = random_search(kMid, 100000, 17);
    CHECK(big.best_reward >= a.best_reward);
    for (std::size_t i = 1; i < a.best_smooth_history.size(); ++i) {
      CHECK(a.best_smooth_history[i] >= a.best_smooth_history[i - 1]);
    }
  }
  SUBCASE("regression fixture") {
    const BaselineResult r = random_search(kMid, 10000, 0);
    CHECK(r.best_reward == doctest::Approx(0.92504626064809625).epsilon(1e-12));
  }
  CHECK_THROWS_AS((void)random_search(kMid, 0, 1), ValidationError);
}

TEST_CASE("hill climb") {
  SUBCASE("budget one returns the initial point") {
    const BaselineResult r = hill_climb(kMid, 1, 0.05, 5);
    std::mt19937_64 rng(5);
    CHECK(r.best_params == sample_design(kMid, rng));
  }
  SUBCASE("smooth best never decreases and the result re-evaluates exactly") {
    const BaselineResult r = hill_climb(kMid, 3000, 0.05, 9);
    CHECK(r.evaluations_used == 3000);
    REQUIRE(r.best_smooth_history.size() == 3000);
    for (std::size_t i = 1; i < r.best_smooth_history.size(); ++i) {
      REQUIRE(r.best_smooth_history[i] >= r.best_smooth_history[i - 1]);
    }
    CHECK(r.best_reward == evaluate_design(r.best_params, kMid, EpisodeConfig{}).total);
    const BaselineResult again = hill_climb(kMid, 3000, 0.05, 9);
    CHECK(again.best_params == r.best_params);
  }
  CHECK_THROWS_AS((void)hill_climb(kMid, 10, 0.0, 1), ValidationError);
  CHECK_THROWS_AS((void)hill_climb(kMid, 10, 0.2, 1), ValidationError);
}

TEST_CASE("baseline grid evaluation") {
  const EvalReport r = baseline_grid_eval(BaselineMethod::HillClimb, 50, GridSpec::uniform(2, 2), 2, 1);
  CHECK(r.method == "hillclimb");
  CHECK(r.cells.size() == 4);
  CHECK(r.samples.size() == 8);
  CHECK(r == baseline_grid_eval(BaselineMethod::HillClimb, 50, GridSpec::uniform(2, 2), 2, 1));
}
