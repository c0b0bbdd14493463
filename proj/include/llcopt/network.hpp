#pragma once

// Policy and value networks with hand-written backpropagation.
//
// All trainable numbers of an ActorCritic live in one flat vector, ordered:
//   policy layer 0 weight (out x in, row-major), bias, ..., policy head weight, bias,
//   log_std (action_dim),
//   value layer 0 weight, bias, ..., value head weight, bias.
// Checkpoints and the optimizer state use the same order.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace llcopt {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  void resize(std::size_t r, std::size_t c) {
    rows = r;
    cols = c;
    data.assign(r * c, 0.0);
  }
  [[nodiscard]] double* row(std::size_t i) { return data.data() + i * cols; }
  [[nodiscard]] const double* row(std::size_t i) const { return data.data() + i * cols; }
  [[nodiscard]] double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Activations kept from a forward pass for the backward pass.
struct MlpCache {
  std::vector<Matrix> outputs;  // one per layer; hidden ones hold tanh outputs
  Matrix grad_a;
  Matrix grad_b;
};

/// Layout of a tanh MLP with a linear head, over externally owned parameters.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<std::size_t> sizes);

  [[nodiscard]] std::size_t parameter_count() const { return count_; }
  [[nodiscard]] std::size_t num_layers() const { return sizes_.size() - 1; }
  [[nodiscard]] std::size_t input_dim() const { return sizes_.front(); }
  [[nodiscard]] std::size_t output_dim() const { return sizes_.back(); }
  [[nodiscard]] const std::vector<std::size_t>& sizes() const { return sizes_; }
  [[nodiscard]] std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  [[nodiscard]] std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + sizes_[layer] * sizes_[layer + 1];
  }

  /// Returns the head output (also cache.outputs.back()).
  const Matrix& forward(std::span<const double> params, const Matrix& input, MlpCache& cache) const;

  /// Accumulates parameter gradients given d(loss)/d(head output).
  void backward(std::span<const double> params, const Matrix& input, MlpCache& cache, const Matrix& grad_output,
                std::span<double> grads) const;

  /// Orthogonal hidden layers with gain sqrt(2), head with `head_gain`, zero biases.
  void initialize(std::span<double> params, double head_gain, std::mt19937_64& rng) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t count_ = 0;
};

/// Fills a rows x cols matrix with orthonormal rows (or columns, if taller) times gain.
void orthogonal_init(std::span<double> w, std::size_t rows, std::size_t cols, double gain, std::mt19937_64& rng);

struct NetworkShape {
  std::size_t state_dim = 16;
  std::size_t hidden = 256;
  std::size_t hidden_layers = 2;
  std::size_t action_dim = 6;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

/// Gaussian policy (state-independent log-std) plus value function.
class ActorCritic {
 public:
  explicit ActorCritic(NetworkShape shape = {});

  void initialize(std::mt19937_64& rng, double initial_log_std = 0.0);

  [[nodiscard]] const NetworkShape& shape() const { return shape_; }
  [[nodiscard]] const Mlp& policy() const { return policy_; }
  [[nodiscard]] const Mlp& value() const { return value_; }

  [[nodiscard]] std::span<double> parameters() { return params_; }
  [[nodiscard]] std::span<const double> parameters() const { return params_; }
  [[nodiscard]] std::size_t parameter_count() const { return params_.size(); }

  [[nodiscard]] std::span<const double> policy_params() const { return {params_.data(), policy_.parameter_count()}; }
  [[nodiscard]] std::span<const double> value_params() const {
    return {params_.data() + value_offset_, value_.parameter_count()};
  }
  [[nodiscard]] std::size_t log_std_offset() const { return policy_.parameter_count(); }
  [[nodiscard]] std::size_t value_offset() const { return value_offset_; }

  /// log-std as used by the policy, clamped to [kLogStdMin, kLogStdMax].
  [[nodiscard]] std::vector<double> log_std() const;
  /// Re-imposes the log-std bounds on the stored values.
  void clamp_log_std();

  struct Output {
    std::vector<double> mean;
    std::vector<double> log_std;
    double value = 0.0;
  };

  /// Single-state evaluation; throws NumericError on a non-finite state.
  [[nodiscard]] Output forward(std::span<const double> state) const;

  /// Batched evaluation into caller-provided caches (rows = states).
  void forward_batch(const Matrix& states, MlpCache& policy_cache, MlpCache& value_cache) const;

 private:
  NetworkShape shape_;
  Mlp policy_;
  Mlp value_;
  std::size_t value_offset_ = 0;
  std::vector<double> params_;
};

}  // namespace llcopt
