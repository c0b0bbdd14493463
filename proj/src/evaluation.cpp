#include "llcopt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "llcopt/baselines.hpp"
#include "llcopt/training.hpp"

namespace llcopt {

namespace {

std::vector<double> linspace(const Range& r, int n) {
  if (n == 1) return {0.5 * (r.lo + r.hi)};
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = r.lo + r.width() * i / (n - 1);
  return v;
}

const char* method_name(BaselineMethod m) { return m == BaselineMethod::Random ? "random" : "hillclimb"; }

}  // namespace

GridSpec GridSpec::uniform(int n1, int n2, double V_in, double R_L) {
  if (n1 < 1 || n2 < 1) throw ValidationError("grid dimensions must be >= 1");
  GridSpec g;
  g.p_t1 = linspace(ranges::kPt1, n1);
  g.p_t2 = linspace(ranges::kPt2, n2);
  g.V_in = V_in;
  g.R_L = R_L;
  return g;
}

std::vector<TargetSpec> GridSpec::targets(std::uint64_t seed) const {
  if (p_t1.empty() || p_t2.empty()) throw ValidationError("evaluation grid is empty");
  std::mt19937_64 rng(seed);
  std::vector<TargetSpec> out;
  for (double a : p_t1) {
    for (double b : p_t2) {
      TargetSpec t{a, b, V_in, R_L};
      if (sample_operating_conditions) {
        t.V_in = std::uniform_real_distribution<double>(ranges::kVin.lo, ranges::kVin.hi)(rng);
        t.R_L = std::uniform_real_distribution<double>(ranges::kRload.lo, ranges::kRload.hi)(rng);
      }
      t.validate();
      out.push_back(t);
    }
  }
  return out;
}

double EvalReport::mean_reward() const {
  double s = 0.0;
  for (const auto& x : samples) s += x.reward;
  return samples.empty() ? 0.0 : s / static_cast<double>(samples.size());
}

double EvalReport::mean_cell_dev_pct() const {
  double s = 0.0;
  for (const auto& c : cells) s += c.mean_dev_pct;
  return cells.empty() ? 0.0 : s / static_cast<double>(cells.size());
}

double EvalReport::max_cell_dev_pct() const {
  double m = 0.0;
  for (const auto& c : cells) m = std::max(m, c.mean_dev_pct);
  return m;
}

double EvalReport::mean_efficiency() const {
  double s = 0.0;
  for (const auto& x : samples) s += x.e_1 + x.e_2;
  return samples.empty() ? 0.0 : s / (2.0 * static_cast<double>(samples.size()));
}

EvalSample make_sample(std::size_t cell, int init, const CircuitParams& final_params, const TargetSpec& target,
                       const EpisodeConfig& cfg) {
  CircuitParams p = final_params;
  p.V_in = target.V_in;
  p.R_L = target.R_L;
  const OperatingPoints pts = simulate_both(p, cfg.loss);
  EvalSample s;
  s.cell = cell;
  s.init = init;
  s.params = p;
  s.p_r1 = pts.first.p_r;
  s.p_r2 = pts.second.p_r;
  s.e_1 = pts.first.e;
  s.e_2 = pts.second.e;
  s.dev_pct1 = 100.0 * std::abs(s.p_r1 - target.p_t1) / target.p_t1;
  s.dev_pct2 = 100.0 * std::abs(s.p_r2 - target.p_t2) / target.p_t2;
  s.reward = reward_breakdown(pts, target, cfg.threshold).total;
  return s;
}

void aggregate_cells(EvalReport& report) {
  std::vector<std::size_t> counts(report.cells.size(), 0);
  for (auto& c : report.cells) {
    const TargetSpec t = c.target;
    c = EvalCell{};
    c.target = t;
  }
  for (const auto& s : report.samples) {
    EvalCell& c = report.cells.at(s.cell);
    ++counts[s.cell];
    c.mean_reward += s.reward;
    c.mean_dev_pct1 += s.dev_pct1;
    c.mean_dev_pct2 += s.dev_pct2;
    c.mean_dev_pct += 0.5 * (s.dev_pct1 + s.dev_pct2);
    c.mean_e1 += s.e_1;
    c.mean_e2 += s.e_2;
  }
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    if (counts[i] == 0) continue;
    const double n = static_cast<double>(counts[i]);
    EvalCell& c = report.cells[i];
    c.mean_reward /= n;
    c.mean_dev_pct1 /= n;
    c.mean_dev_pct2 /= n;
    c.mean_dev_pct /= n;
    c.mean_e1 /= n;
    c.mean_e2 /= n;
  }
}

EvalReport grid_eval(const ActorCritic& net, const GridSpec& grid, int inits, std::uint64_t seed,
                     const EpisodeConfig& cfg, int workers) {
  const auto targets = grid.targets(seed);
  const auto results = evaluate_policy(net, cfg, targets, inits, seed, workers);
  EvalReport report;
  report.method = "agent";
  for (std::size_t c = 0; c < results.size(); ++c) {
    report.cells.push_back(EvalCell{targets[c]});
    for (std::size_t i = 0; i < results[c].runs.size(); ++i) {
      report.samples.push_back(make_sample(c, static_cast<int>(i), results[c].runs[i].final, targets[c], cfg));
    }
  }
  aggregate_cells(report);
  return report;
}

EvalReport baseline_grid_eval(BaselineMethod method, std::int64_t budget, const GridSpec& grid, int inits,
                              std::uint64_t seed, const EpisodeConfig& cfg, double step_frac) {
  if (inits < 1) throw ValidationError("inits must be >= 1");
  const auto targets = grid.targets(seed);
  std::mt19937_64 rng(seed);
  EvalReport report;
  report.method = method_name(method);
  for (std::size_t c = 0; c < targets.size(); ++c) {
    report.cells.push_back(EvalCell{targets[c]});
    for (int i = 0; i < inits; ++i) {
      const std::uint64_t run_seed = rng();
      const BaselineResult r = method == BaselineMethod::Random
                                   ? random_search(targets[c], budget, run_seed, cfg)
                                   : hill_climb(targets[c], budget, step_frac, run_seed, cfg);
      report.samples.push_back(make_sample(c, i, r.best_params, targets[c], cfg));
    }
  }
  aggregate_cells(report);
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"p_t1", c.target.p_t1},
                     {"p_t2", c.target.p_t2},
                     {"V_in", c.target.V_in},
                     {"R_L", c.target.R_L},
                     {"mean_reward", c.mean_reward},
                     {"mean_dev_pct1", c.mean_dev_pct1},
                     {"mean_dev_pct2", c.mean_dev_pct2},
                     {"mean_dev_pct", c.mean_dev_pct},
                     {"mean_e1", c.mean_e1},
                     {"mean_e2", c.mean_e2}});
  }
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : report.samples) {
    samples.push_back({{"cell", s.cell},         {"init", s.init},         {"L_r", s.params.L_r},
                       {"L_m", s.params.L_m},    {"C_r", s.params.C_r},    {"k", s.params.k},
                       {"f_1", s.params.f_1},    {"f_2", s.params.f_2},    {"V_in", s.params.V_in},
                       {"R_L", s.params.R_L},    {"p_r1", s.p_r1},         {"p_r2", s.p_r2},
                       {"e_1", s.e_1},           {"e_2", s.e_2},           {"dev_pct1", s.dev_pct1},
                       {"dev_pct2", s.dev_pct2}, {"reward", s.reward}});
  }
  return {{"method", report.method}, {"cells", cells}, {"samples", samples}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.method = j.at("method").get<std::string>();
    for (const auto& c : j.at("cells")) {
      EvalCell cell;
      cell.target = {c.at("p_t1").get<double>(), c.at("p_t2").get<double>(), c.at("V_in").get<double>(),
                     c.at("R_L").get<double>()};
      cell.mean_reward = c.at("mean_reward").get<double>();
      cell.mean_dev_pct1 = c.at("mean_dev_pct1").get<double>();
      cell.mean_dev_pct2 = c.at("mean_dev_pct2").get<double>();
      cell.mean_dev_pct = c.at("mean_dev_pct").get<double>();
      cell.mean_e1 = c.at("mean_e1").get<double>();
      cell.mean_e2 = c.at("mean_e2").get<double>();
      r.cells.push_back(cell);
    }
    for (const auto& s : j.at("samples")) {
      EvalSample x;
      x.cell = s.at("cell").get<std::size_t>();
      x.init = s.at("init").get<int>();
      x.params = {s.at("L_r").get<double>(), s.at("L_m").get<double>(), s.at("C_r").get<double>(),
                  s.at("k").get<double>(),   s.at("f_1").get<double>(), s.at("f_2").get<double>(),
                  s.at("V_in").get<double>(), s.at("R_L").get<double>()};
      x.p_r1 = s.at("p_r1").get<double>();
      x.p_r2 = s.at("p_r2").get<double>();
      x.e_1 = s.at("e_1").get<double>();
      x.e_2 = s.at("e_2").get<double>();
      x.dev_pct1 = s.at("dev_pct1").get<double>();
      x.dev_pct2 = s.at("dev_pct2").get<double>();
      x.reward = s.at("reward").get<double>();
      r.samples.push_back(x);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed evaluation report: ") + e.what());
  }
  return r;
}

void write_eval_csv(std::ostream& os, const EvalReport& report, bool header) {
  if (header) {
    os << "method,cell,init,p_t1,p_t2,V_in,R_L,L_r,L_m,C_r,k,f_1,f_2,p_r1,p_r2,e_1,e_2,dev_pct1,dev_pct2,reward\n";
  }
  for (const auto& s : report.samples) {
    const TargetSpec& t = report.cells.at(s.cell).target;
    const CircuitParams& p = s.params;
    os << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},", report.method, s.cell, s.init, t.p_t1, t.p_t2,
                      t.V_in, t.R_L);
    os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},", p.L_r, p.L_m, p.C_r, p.k, p.f_1, p.f_2);
    os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", s.p_r1, s.p_r2, s.e_1, s.e_2,
                      s.dev_pct1, s.dev_pct2, s.reward);
  }
}

std::vector<TraceRow> trace_episode(const ActorCritic& net, const TargetSpec& target, std::uint64_t seed,
                                    const EpisodeConfig& cfg) {
  const EpisodeRequest req{seed, target};
  auto out = run_episodes(net, cfg, std::span(&req, 1), ActionMode::Greedy, true);
  return std::move(out.front().trace);
}

}  // namespace llcopt
