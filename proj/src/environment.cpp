#include "llcopt/environment.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include <fmt/format.h>

namespace llcopt {

namespace {

void check_target_field(const char* name, double v, const Range& r) {
  if (!std::isfinite(v) || !r.contains(v)) {
    throw ValidationError(fmt::format("{} = {} outside allowed range [{}, {}]", name, v, r.lo, r.hi));
  }
}

}  // namespace

void TargetSpec::validate() const {
  check_target_field("p_t1", p_t1, ranges::kPt1);
  check_target_field("p_t2", p_t2, ranges::kPt2);
  check_target_field("V_in", V_in, ranges::kVin);
  check_target_field("R_L", R_L, ranges::kRload);
}

void EpisodeConfig::validate() const {
  if (steps < 1) throw ValidationError("steps per episode must be >= 1");
  if (!(threshold >= 0.0 && threshold < 1.0)) throw ValidationError("reward threshold must lie in [0, 1)");
  loss.validate();
}

double power_reward(double p_r, double p_t) {
  if (p_r < 0.0 || p_t < 0.0 || p_r + p_t == 0.0) {
    throw std::domain_error("power_reward: powers must be non-negative with a positive sum");
  }
  return 1.0 - std::abs(p_r - p_t) / (p_r + p_t);
}

std::optional<double> scale_power_reward(double r_p, double threshold) {
  if (r_p < threshold) return std::nullopt;
  return (r_p - threshold) * (1.0 / (1.0 - threshold));
}

double total_reward(double e_1, double e_2, std::optional<double> r_p1, std::optional<double> r_p2) {
  if (!r_p1 || !r_p2) return 0.0;
  return 0.25 * (e_1 + *r_p1 + e_2 + *r_p2);
}

RewardBreakdown reward_breakdown(const OperatingPoints& points, const TargetSpec& target, double threshold) {
  RewardBreakdown b;
  b.r_e1 = points.first.e;
  b.r_e2 = points.second.e;
  b.r_p1_raw = power_reward(points.first.p_r, target.p_t1);
  b.r_p2_raw = power_reward(points.second.p_r, target.p_t2);
  b.r_p1 = scale_power_reward(b.r_p1_raw, threshold);
  b.r_p2 = scale_power_reward(b.r_p2_raw, threshold);
  b.total = total_reward(b.r_e1, b.r_e2, b.r_p1, b.r_p2);
  return b;
}

double log_step_gain(double x) { return (std::pow(10.0, x) - 1.0) / 9.0; }

CircuitParams shape_action(const Action& action, const CircuitParams& current) {
  auto values = current.tunables();
  for (int i = 0; i < kActionDim; ++i) {
    double a = action[i];
    if (std::isnan(a)) a = 0.0;
    a = std::clamp(a, -1.0, 1.0);
    const Range& r = ranges::kTunable[i];
    const double delta = std::copysign(0.10 * r.width() * log_step_gain(std::abs(a)), a);
    values[i] = r.clamp(values[i] + delta);
  }
  CircuitParams next = current;
  next.set_tunables(values);
  return next;
}

OperatingPoints simulate_both(const CircuitParams& params, const LossModel& loss) {
  return {simulate_operating_point(params, params.f_1, loss), simulate_operating_point(params, params.f_2, loss)};
}

RewardBreakdown evaluate_design(const CircuitParams& params, const TargetSpec& target, const EpisodeConfig& cfg) {
  CircuitParams p = params;
  p.V_in = target.V_in;
  p.R_L = target.R_L;
  return reward_breakdown(simulate_both(p, cfg.loss), target, cfg.threshold);
}

EnvState make_state(const CircuitParams& params, const OperatingPoints& points, const TargetSpec& target) {
  EnvState s{};
  const auto values = params.tunables();
  for (int i = 0; i < kNumTunables; ++i) {
    const Range& r = ranges::kTunable[i];
    s[i] = (values[i] - r.lo) / r.width();
  }
  s[6] = points.first.p_r / kPowerScale;
  s[7] = points.second.p_r / kPowerScale;
  s[8] = points.first.e;
  s[9] = points.second.e;
  s[10] = target.p_t1 / kPowerScale;
  s[11] = target.p_t2 / kPowerScale;
  s[12] = 1.0 - power_reward(points.first.p_r, target.p_t1);
  s[13] = 1.0 - power_reward(points.second.p_r, target.p_t2);
  s[14] = (target.V_in - ranges::kVin.lo) / ranges::kVin.width();
  s[15] = (target.R_L - ranges::kRload.lo) / ranges::kRload.width();
  return s;
}

TargetSpec sample_target(std::mt19937_64& rng) {
  auto draw = [&rng](const Range& r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); };
  TargetSpec t;
  t.p_t1 = draw(ranges::kPt1);
  t.p_t2 = draw(ranges::kPt2);
  t.V_in = draw(ranges::kVin);
  t.R_L = draw(ranges::kRload);
  return t;
}

CircuitParams sample_design(const TargetSpec& target, std::mt19937_64& rng) {
  std::array<double, kNumTunables> v{};
  for (int i = 0; i < kNumTunables; ++i) {
    const Range& r = ranges::kTunable[i];
    v[i] = std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
  }
  CircuitParams p;
  p.set_tunables(v);
  p.V_in = target.V_in;
  p.R_L = target.R_L;
  return p;
}

Environment::Environment(EpisodeConfig cfg) : cfg_(cfg) { cfg_.validate(); }

EnvState Environment::reset(std::optional<TargetSpec> target, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (target) {
    target->validate();
  } else {
    target = sample_target(rng);
  }
  return reset_to(*target, sample_design(*target, rng));
}

EnvState Environment::reset_to(const TargetSpec& target, const CircuitParams& initial) {
  target.validate();
  target_ = target;
  params_ = initial;
  params_.V_in = target.V_in;
  params_.R_L = target.R_L;
  params_.validate();
  step_count_ = 0;
  started_ = true;
  refresh();
  return state_;
}

StepResult Environment::step(const Action& action) {
  if (!started_) throw UsageError("step() called before reset()");
  if (done()) throw UsageError("step() called on a finished episode; call reset()");
  params_ = shape_action(action, params_);
  ++step_count_;
  refresh();
  StepResult out;
  out.state = state_;
  out.done = step_count_ >= cfg_.steps;
  out.reward = out.done ? current_reward().total : 0.0;
  return out;
}

RewardBreakdown Environment::current_reward() const { return reward_breakdown(points_, target_, cfg_.threshold); }

TraceRow Environment::trace_row(double emitted) const {
  return TraceRow{step_count_, params_, points_, current_reward(), emitted};
}

void Environment::refresh() {
  points_ = simulate_both(params_, cfg_.loss);
  state_ = make_state(params_, points_, target_);
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  os << "step,L_r,L_m,C_r,k,f_1,f_2,p_r1,p_r2,e_1,e_2,r_e1,r_e2,r_p1,r_p2,lost,total,reward\n";
  for (const auto& r : rows) {
    const auto& p = r.params;
    os << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},", r.step,
                      p.L_r, p.L_m, p.C_r, p.k, p.f_1, p.f_2, r.points.first.p_r, r.points.second.p_r,
                      r.points.first.e, r.points.second.e);
    os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{},{:.17g},{:.17g}\n", r.reward.r_e1, r.reward.r_e2,
                      r.reward.r_p1.value_or(0.0), r.reward.r_p2.value_or(0.0), r.reward.lost() ? 1 : 0,
                      r.reward.total, r.emitted);
  }
}

}  // namespace llcopt
