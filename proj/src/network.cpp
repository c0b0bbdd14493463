#include "llcopt/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "llcopt/circuit.hpp"
#include "llcopt/simd/kernels.hpp"

namespace llcopt {

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least an input and an output size");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(count_);
    count_ += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
}

const Matrix& Mlp::forward(std::span<const double> params, const Matrix& input, MlpCache& cache) const {
  const auto& k = simd::active_kernels();
  const std::size_t layers = num_layers();
  cache.outputs.resize(layers);
  const Matrix* in = &input;
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix& out = cache.outputs[l];
    if (out.rows != input.rows || out.cols != sizes_[l + 1]) out.resize(input.rows, sizes_[l + 1]);
    k.linear_forward(in->data.data(), params.data() + weight_offset(l), params.data() + bias_offset(l),
                     out.data.data(), input.rows, sizes_[l + 1], sizes_[l]);
    if (l + 1 < layers) k.tanh_inplace(out.data.data(), out.data.size());
    in = &out;
  }
  return cache.outputs.back();
}

void Mlp::backward(std::span<const double> params, const Matrix& input, MlpCache& cache, const Matrix& grad_output,
                   std::span<double> grads) const {
  const auto& k = simd::active_kernels();
  const std::size_t m = input.rows;
  cache.grad_a = grad_output;
  Matrix* grad = &cache.grad_a;
  Matrix* spare = &cache.grad_b;
  for (std::size_t l = num_layers(); l-- > 0;) {
    if (l + 1 < num_layers()) k.tanh_backward(cache.outputs[l].data.data(), grad->data.data(), grad->data.size());
    const Matrix& layer_in = l == 0 ? input : cache.outputs[l - 1];
    k.linear_backward_weights(grad->data.data(), layer_in.data.data(), grads.data() + weight_offset(l),
                              grads.data() + bias_offset(l), m, sizes_[l + 1], sizes_[l]);
    if (l > 0) {
      if (spare->rows != m || spare->cols != sizes_[l]) spare->resize(m, sizes_[l]);
      k.linear_backward_input(grad->data.data(), params.data() + weight_offset(l), spare->data.data(), m,
                              sizes_[l + 1], sizes_[l]);
      std::swap(grad, spare);
    }
  }
}

void Mlp::initialize(std::span<double> params, double head_gain, std::mt19937_64& rng) const {
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const bool head = l + 1 == num_layers();
    orthogonal_init(params.subspan(weight_offset(l), sizes_[l] * sizes_[l + 1]), sizes_[l + 1], sizes_[l],
                    head ? head_gain : std::sqrt(2.0), rng);
    std::fill_n(params.begin() + static_cast<std::ptrdiff_t>(bias_offset(l)), sizes_[l + 1], 0.0);
  }
}

void orthogonal_init(std::span<double> w, std::size_t rows, std::size_t cols, double gain, std::mt19937_64& rng) {
  // Modified Gram-Schmidt on the longer dimension's vectors of a Gaussian matrix.
  const bool by_rows = rows <= cols;
  const std::size_t count = by_rows ? rows : cols;
  const std::size_t len = by_rows ? cols : rows;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> basis;
  basis.reserve(count);
  while (basis.size() < count) {
    std::vector<double> v(len);
    for (auto& x : v) x = normal(rng);
    for (const auto& b : basis) {
      double d = 0.0;
      for (std::size_t i = 0; i < len; ++i) d += v[i] * b[i];
      for (std::size_t i = 0; i < len; ++i) v[i] -= d * b[i];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-10) continue;
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  for (std::size_t a = 0; a < count; ++a) {
    for (std::size_t b = 0; b < len; ++b) {
      const std::size_t r = by_rows ? a : b;
      const std::size_t c = by_rows ? b : a;
      w[r * cols + c] = gain * basis[a][b];
    }
  }
}

ActorCritic::ActorCritic(NetworkShape shape) : shape_(shape) {
  if (shape_.state_dim == 0 || shape_.hidden == 0 || shape_.action_dim == 0) {
    throw std::invalid_argument("network dimensions must be positive");
  }
  std::vector<std::size_t> trunk{shape_.state_dim};
  for (std::size_t i = 0; i < shape_.hidden_layers; ++i) trunk.push_back(shape_.hidden);
  auto policy_sizes = trunk;
  policy_sizes.push_back(shape_.action_dim);
  auto value_sizes = trunk;
  value_sizes.push_back(1);
  policy_ = Mlp(policy_sizes);
  value_ = Mlp(value_sizes);
  value_offset_ = policy_.parameter_count() + shape_.action_dim;
  params_.assign(value_offset_ + value_.parameter_count(), 0.0);
}

void ActorCritic::initialize(std::mt19937_64& rng, double initial_log_std) {
  std::span<double> all(params_);
  policy_.initialize(all.subspan(0, policy_.parameter_count()), 0.01, rng);
  std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(log_std_offset()), shape_.action_dim,
              std::clamp(initial_log_std, kLogStdMin, kLogStdMax));
  value_.initialize(all.subspan(value_offset_, value_.parameter_count()), 1.0, rng);
}

std::vector<double> ActorCritic::log_std() const {
  std::vector<double> out(params_.begin() + static_cast<std::ptrdiff_t>(log_std_offset()),
                          params_.begin() + static_cast<std::ptrdiff_t>(log_std_offset() + shape_.action_dim));
  for (auto& s : out) s = std::clamp(s, kLogStdMin, kLogStdMax);
  return out;
}

void ActorCritic::clamp_log_std() {
  for (std::size_t i = 0; i < shape_.action_dim; ++i) {
    double& s = params_[log_std_offset() + i];
    s = std::clamp(s, kLogStdMin, kLogStdMax);
  }
}

ActorCritic::Output ActorCritic::forward(std::span<const double> state) const {
  if (state.size() != shape_.state_dim) throw std::invalid_argument("state has wrong dimension");
  Matrix in(1, shape_.state_dim);
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!std::isfinite(state[i])) throw NumericError("non-finite state component " + std::to_string(i));
    in.data[i] = state[i];
  }
  MlpCache pc;
  MlpCache vc;
  forward_batch(in, pc, vc);
  Output out;
  out.mean = pc.outputs.back().data;
  out.log_std = log_std();
  out.value = vc.outputs.back().data[0];
  return out;
}

void ActorCritic::forward_batch(const Matrix& states, MlpCache& policy_cache, MlpCache& value_cache) const {
  policy_.forward(policy_params(), states, policy_cache);
  value_.forward(value_params(), states, value_cache);
}

}  // namespace llcopt
