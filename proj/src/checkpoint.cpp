#include "llcopt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include <fmt/format.h>

namespace llcopt {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

template <typename T>
T get(std::istream& is, const char* field) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw CheckpointError(fmt::format("checkpoint truncated while reading '{}'", field));
  }
  return v;
}

void get_doubles(std::istream& is, std::vector<double>& v, const char* field) {
  if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)))) {
    throw CheckpointError(fmt::format("checkpoint truncated while reading '{}'", field));
  }
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  const NetworkShape& s = ckpt.network.shape();
  os.write(kCheckpointMagic, 8);
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.state_dim));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.hidden));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.hidden_layers));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.action_dim));
  put<std::uint64_t>(os, ckpt.episodes_done);
  put<std::uint64_t>(os, ckpt.batches_done);
  put<std::uint64_t>(os, ckpt.optimizer.steps());
  put<std::uint32_t>(os, ckpt.has_optimizer ? 1U : 0U);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.rng_state.size()));
  os.write(ckpt.rng_state.data(), static_cast<std::streamsize>(ckpt.rng_state.size()));
  const auto params = ckpt.network.parameters();
  put<std::uint64_t>(os, params.size());
  os.write(reinterpret_cast<const char*>(params.data()), static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (ckpt.has_optimizer) {
    if (ckpt.optimizer.first_moment().size() != params.size() || ckpt.optimizer.second_moment().size() != params.size()) {
      throw CheckpointError("optimizer state size does not match the network");
    }
    put_doubles(os, ckpt.optimizer.first_moment());
    put_doubles(os, ckpt.optimizer.second_moment());
  }
  if (!os) throw CheckpointError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8)) throw CheckpointError("checkpoint truncated while reading 'magic'");
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0) throw CheckpointError("bad checkpoint field 'magic'");
  const auto version = get<std::uint32_t>(is, "version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(fmt::format("unsupported checkpoint field 'version' = {} (expected {})", version,
                                      kCheckpointVersion));
  }
  NetworkShape shape;
  shape.state_dim = get<std::uint32_t>(is, "state_dim");
  shape.hidden = get<std::uint32_t>(is, "hidden");
  shape.hidden_layers = get<std::uint32_t>(is, "hidden_layers");
  shape.action_dim = get<std::uint32_t>(is, "action_dim");
  if (shape.state_dim == 0 || shape.hidden == 0 || shape.action_dim == 0 || shape.hidden > (1U << 16) ||
      shape.hidden_layers > 64) {
    throw CheckpointError("implausible checkpoint layer dimensions");
  }
  Checkpoint ckpt{ActorCritic(shape), AdamState{}, false, {}, 0, 0};
  ckpt.episodes_done = get<std::uint64_t>(is, "episodes_done");
  ckpt.batches_done = get<std::uint64_t>(is, "batches_done");
  const auto adam_steps = get<std::uint64_t>(is, "adam_steps");
  const auto has_opt = get<std::uint32_t>(is, "has_optimizer");
  if (has_opt > 1) throw CheckpointError("bad checkpoint field 'has_optimizer'");
  const auto rng_len = get<std::uint32_t>(is, "rng_len");
  if (rng_len > (1U << 20)) throw CheckpointError("bad checkpoint field 'rng_len'");
  ckpt.rng_state.resize(rng_len);
  if (rng_len > 0 && !is.read(ckpt.rng_state.data(), rng_len)) {
    throw CheckpointError("checkpoint truncated while reading 'rng_state'");
  }
  const auto count = get<std::uint64_t>(is, "param_count");
  if (count != ckpt.network.parameter_count()) {
    throw CheckpointError(fmt::format("checkpoint field 'param_count' = {} does not match layer dimensions ({})",
                                      count, ckpt.network.parameter_count()));
  }
  std::vector<double> params(count);
  get_doubles(is, params, "parameters");
  std::copy(params.begin(), params.end(), ckpt.network.parameters().begin());
  ckpt.has_optimizer = has_opt == 1;
  if (ckpt.has_optimizer) {
    AdamState opt(count);
    get_doubles(is, opt.first_moment(), "adam_m");
    get_doubles(is, opt.second_moment(), "adam_v");
    opt.set_steps(adam_steps);
    ckpt.optimizer = std::move(opt);
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot open checkpoint for writing: " + tmp.string());
    write_checkpoint(os, ckpt);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint: " + path.string());
  return read_checkpoint(is);
}

void require_env_compatible(const ActorCritic& net) {
  const NetworkShape& s = net.shape();
  if (s.state_dim != static_cast<std::size_t>(kStateDim) || s.action_dim != static_cast<std::size_t>(kActionDim)) {
    throw CheckpointError(fmt::format("checkpoint network is {}->{} but the environment needs {}->{}", s.state_dim,
                                      s.action_dim, kStateDim, kActionDim));
  }
}

}  // namespace llcopt
