#include <cmath>

#include "llcopt/simd/kernels.hpp"

namespace llcopt::simd {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void linear_forward(const double* x, const double* w, const double* bias, double* y, std::size_t m, std::size_t n,
                    std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = x + i * k;
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] = dot(xi, w + j * k, k) + bias[j];
  }
}

void linear_backward_input(const double* dy, const double* w, double* dx, std::size_t m, std::size_t n,
                           std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    double* dxi = dx + i * k;
    for (std::size_t c = 0; c < k; ++c) dxi[c] = 0.0;
    for (std::size_t j = 0; j < n; ++j) axpy(dy[i * n + j], w + j * k, dxi, k);
  }
}

void linear_backward_weights(const double* dy, const double* x, double* dw, double* db, std::size_t m,
                             std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = x + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double g = dy[i * n + j];
      db[j] += g;
      axpy(g, xi, dw + j * k, k);
    }
  }
}

void tanh_inplace(double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(y[i]);
}

void tanh_backward(const double* out, double* dy, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dy[i] *= 1.0 - out[i] * out[i];
}

void adam_step(double* w, const double* g, double* m, double* v, std::size_t n, double beta1, double beta2,
               double step_size, double eps_hat) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    w[i] -= step_size * m[i] / (std::sqrt(v[i]) + eps_hat);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::Scalar,
                                 "scalar",
                                 &dot,
                                 &axpy,
                                 &linear_forward,
                                 &linear_backward_input,
                                 &linear_backward_weights,
                                 &tanh_inplace,
                                 &tanh_backward,
                                 &adam_step};
  return table;
}

}  // namespace llcopt::simd
