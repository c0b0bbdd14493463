#include "llcopt/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

namespace llcopt {

namespace {

using nlohmann::json;

const json& section(const json& root, const char* name, const std::set<std::string>& allowed) {
  static const json empty = json::object();
  if (!root.contains(name)) return empty;
  const json& s = root.at(name);
  if (!s.is_object()) throw ValidationError(fmt::format("config section '{}' must be an object", name));
  for (const auto& [key, _] : s.items()) {
    if (!allowed.contains(key)) throw ValidationError(fmt::format("unknown config key '{}.{}'", name, key));
  }
  return s;
}

template <typename T>
void read(const json& s, const char* sec, const char* key, T& out) {
  if (!s.contains(key)) return;
  try {
    out = s.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("config key '{}.{}': {}", sec, key, e.what()));
  }
}

}  // namespace

void RunConfig::validate() const {
  env.validate();
  ppo.validate();
  if (network.hidden == 0) throw ValidationError("network.hidden must be >= 1");
  if (training.episodes < 0) throw ValidationError("training.episodes must be >= 0");
  if (training.seeds.empty()) throw ValidationError("training.seeds must list at least one seed");
  if (training.workers < 1) throw ValidationError("training.workers must be >= 1");
  if (training.checkpoint_interval < 1) throw ValidationError("training.checkpoint_interval must be >= 1");
  if (evaluation.grid_pt1 < 1 || evaluation.grid_pt2 < 1) throw ValidationError("evaluation grid must be non-empty");
  if (evaluation.inits < 1) throw ValidationError("evaluation.inits must be >= 1");
  if (!ranges::kVin.contains(evaluation.V_in)) throw ValidationError("evaluation.V_in outside [400, 500]");
  if (!ranges::kRload.contains(evaluation.R_L)) throw ValidationError("evaluation.R_L outside [30, 40]");
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config root must be an object");
  const std::set<std::string> sections{"environment", "loss_model", "network", "ppo", "training", "evaluation"};
  for (const auto& [key, _] : j.items()) {
    if (!sections.contains(key)) throw ValidationError(fmt::format("unknown config section '{}'", key));
  }
  RunConfig c;
  const json& env = section(j, "environment", {"steps", "threshold"});
  read(env, "environment", "steps", c.env.steps);
  read(env, "environment", "threshold", c.env.threshold);

  const json& loss = section(j, "loss_model", {"R_Lr", "R_Cr", "R_Lm"});
  read(loss, "loss_model", "R_Lr", c.env.loss.R_Lr);
  read(loss, "loss_model", "R_Cr", c.env.loss.R_Cr);
  read(loss, "loss_model", "R_Lm", c.env.loss.R_Lm);

  const json& net = section(j, "network", {"hidden", "hidden_layers"});
  read(net, "network", "hidden", c.network.hidden);
  read(net, "network", "hidden_layers", c.network.hidden_layers);

  const json& ppo = section(j, "ppo",
                            {"learning_rate", "clip_eps", "gamma", "gae_lambda", "epochs_per_batch", "batch_episodes",
                             "minibatch_size", "value_coeff", "entropy_coeff", "initial_log_std"});
  read(ppo, "ppo", "learning_rate", c.ppo.learning_rate);
  read(ppo, "ppo", "clip_eps", c.ppo.clip_eps);
  read(ppo, "ppo", "gamma", c.ppo.gamma);
  read(ppo, "ppo", "gae_lambda", c.ppo.gae_lambda);
  read(ppo, "ppo", "epochs_per_batch", c.ppo.epochs_per_batch);
  read(ppo, "ppo", "batch_episodes", c.ppo.batch_episodes);
  read(ppo, "ppo", "minibatch_size", c.ppo.minibatch_size);
  read(ppo, "ppo", "value_coeff", c.ppo.value_coeff);
  read(ppo, "ppo", "entropy_coeff", c.ppo.entropy_coeff);
  read(ppo, "ppo", "initial_log_std", c.ppo.initial_log_std);

  const json& tr = section(j, "training", {"episodes", "seeds", "workers", "checkpoint_interval"});
  read(tr, "training", "episodes", c.training.episodes);
  read(tr, "training", "seeds", c.training.seeds);
  read(tr, "training", "workers", c.training.workers);
  read(tr, "training", "checkpoint_interval", c.training.checkpoint_interval);

  const json& ev = section(j, "evaluation",
                           {"grid_pt1", "grid_pt2", "inits", "V_in", "R_L", "sample_operating_conditions", "seed"});
  read(ev, "evaluation", "grid_pt1", c.evaluation.grid_pt1);
  read(ev, "evaluation", "grid_pt2", c.evaluation.grid_pt2);
  read(ev, "evaluation", "inits", c.evaluation.inits);
  read(ev, "evaluation", "V_in", c.evaluation.V_in);
  read(ev, "evaluation", "R_L", c.evaluation.R_L);
  read(ev, "evaluation", "sample_operating_conditions", c.evaluation.sample_operating_conditions);
  read(ev, "evaluation", "seed", c.evaluation.seed);

  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  return json{
      {"environment", {{"steps", c.env.steps}, {"threshold", c.env.threshold}}},
      {"loss_model", {{"R_Lr", c.env.loss.R_Lr}, {"R_Cr", c.env.loss.R_Cr}, {"R_Lm", c.env.loss.R_Lm}}},
      {"network", {{"hidden", c.network.hidden}, {"hidden_layers", c.network.hidden_layers}}},
      {"ppo",
       {{"learning_rate", c.ppo.learning_rate},
        {"clip_eps", c.ppo.clip_eps},
        {"gamma", c.ppo.gamma},
        {"gae_lambda", c.ppo.gae_lambda},
        {"epochs_per_batch", c.ppo.epochs_per_batch},
        {"batch_episodes", c.ppo.batch_episodes},
        {"minibatch_size", c.ppo.minibatch_size},
        {"value_coeff", c.ppo.value_coeff},
        {"entropy_coeff", c.ppo.entropy_coeff},
        {"initial_log_std", c.ppo.initial_log_std}}},
      {"training",
       {{"episodes", c.training.episodes},
        {"seeds", c.training.seeds},
        {"workers", c.training.workers},
        {"checkpoint_interval", c.training.checkpoint_interval}}},
      {"evaluation",
       {{"grid_pt1", c.evaluation.grid_pt1},
        {"grid_pt2", c.evaluation.grid_pt2},
        {"inits", c.evaluation.inits},
        {"V_in", c.evaluation.V_in},
        {"R_L", c.evaluation.R_L},
        {"sample_operating_conditions", c.evaluation.sample_operating_conditions},
        {"seed", c.evaluation.seed}}},
  };
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open config file: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("config file {} is not valid JSON: {}", path.string(), e.what()));
  }
  return run_config_from_json(j);
}

std::string config_hash(const RunConfig& cfg) {
  // worker count does not change any output, so it is left out of the hash
  json j = to_json(cfg);
  j["training"].erase("workers");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace llcopt
