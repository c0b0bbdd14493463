#pragma once

// Binary checkpoint format (little-endian, version 1):
//
//   magic          8 bytes  "LLCOPTCK"
//   version        u32
//   state_dim      u32
//   hidden         u32
//   hidden_layers  u32
//   action_dim     u32
//   episodes_done  u64
//   batches_done   u64
//   adam_steps     u64
//   has_optimizer  u32      1 if the Adam moments follow the parameters
//   rng_len        u32      length of the textual std::mt19937_64 state
//   rng_state      rng_len bytes
//   param_count    u64
//   parameters     param_count x f64, in ActorCritic's flat order
//   [adam m, adam v: param_count x f64 each, when has_optimizer]
//
// Loading checks magic, version, dimensions and length, and reports the
// offending field.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "llcopt/network.hpp"
#include "llcopt/ppo.hpp"

namespace llcopt {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[9] = "LLCOPTCK";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ActorCritic network;
  AdamState optimizer;
  bool has_optimizer = false;
  std::string rng_state;  // empty when not recorded
  std::uint64_t episodes_done = 0;
  std::uint64_t batches_done = 0;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
[[nodiscard]] Checkpoint read_checkpoint(std::istream& is);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws CheckpointError unless the network matches the environment's state/action sizes.
void require_env_compatible(const ActorCritic& net);

}  // namespace llcopt
