#include "llcopt/baselines.hpp"

#include <algorithm>
#include <random>

namespace llcopt {

namespace {

struct Scored {
  CircuitParams params;
  double reward = 0.0;
  double smooth = 0.0;
};

class Evaluator {
 public:
  Evaluator(const TargetSpec& target, const EpisodeConfig& cfg) : target_(target), cfg_(cfg), smooth_cfg_(cfg) {
    target_.validate();
    cfg_.validate();
    smooth_cfg_.threshold = 0.0;
  }

  Scored operator()(const CircuitParams& p) {
    ++count_;
    CircuitParams q = p;
    q.V_in = target_.V_in;
    q.R_L = target_.R_L;
    const OperatingPoints pts = simulate_both(q, cfg_.loss);
    return {q, reward_breakdown(pts, target_, cfg_.threshold).total,
            reward_breakdown(pts, target_, smooth_cfg_.threshold).total};
  }

  [[nodiscard]] std::int64_t count() const { return count_; }

 private:
  TargetSpec target_;
  EpisodeConfig cfg_;
  EpisodeConfig smooth_cfg_;
  std::int64_t count_ = 0;
};

bool better(const Scored& a, const Scored& b) {
  return a.reward > b.reward || (a.reward == b.reward && a.smooth > b.smooth);
}

void record(BaselineResult& r, const Scored& s, bool first) {
  if (first || better(s, Scored{r.best_params, r.best_reward, r.best_smooth})) {
    r.best_params = s.params;
    r.best_reward = s.reward;
    r.best_smooth = s.smooth;
  }
  const double prev = r.best_smooth_history.empty() ? s.smooth : r.best_smooth_history.back();
  r.best_smooth_history.push_back(std::max(prev, s.smooth));
}

}  // namespace

BaselineResult random_search(const TargetSpec& target, std::int64_t budget, std::uint64_t seed,
                             const EpisodeConfig& cfg) {
  if (budget < 1) throw ValidationError("random_search: budget must be >= 1");
  Evaluator eval(target, cfg);
  std::mt19937_64 rng(seed);
  BaselineResult r;
  for (std::int64_t i = 0; i < budget; ++i) record(r, eval(sample_design(target, rng)), i == 0);
  r.evaluations_used = eval.count();
  return r;
}

BaselineResult hill_climb(const TargetSpec& target, std::int64_t budget, double step_frac, std::uint64_t seed,
                          const EpisodeConfig& cfg, int restart_after) {
  if (budget < 1) throw ValidationError("hill_climb: budget must be >= 1");
  if (!(step_frac > 0.0 && step_frac <= 0.1)) throw ValidationError("hill_climb: step_frac must lie in (0, 0.1]");
  Evaluator eval(target, cfg);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, kNumTunables - 1);
  std::uniform_real_distribution<double> jitter(-step_frac, step_frac);

  BaselineResult r;
  Scored current = eval(sample_design(target, rng));
  record(r, current, true);
  int rejections = 0;
  while (eval.count() < budget) {
    if (rejections >= restart_after) {
      current = eval(sample_design(target, rng));
      record(r, current, false);
      rejections = 0;
      continue;
    }
    auto values = current.params.tunables();
    const int i = pick(rng);
    const Range& range = ranges::kTunable[static_cast<std::size_t>(i)];
    values[static_cast<std::size_t>(i)] = range.clamp(values[static_cast<std::size_t>(i)] + jitter(rng) * range.width());
    CircuitParams candidate = current.params;
    candidate.set_tunables(values);
    const Scored s = eval(candidate);
    record(r, s, false);
    if (s.smooth > current.smooth) {
      current = s;
      rejections = 0;
    } else {
      ++rejections;
    }
  }
  r.evaluations_used = eval.count();
  return r;
}

}  // namespace llcopt
