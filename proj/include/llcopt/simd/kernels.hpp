#pragma once

// Dense double-precision kernels behind the policy/value networks.
//
// Every ISA variant fills the same table. The scalar table is the reference;
// vector tables must agree with it to rounding (see tests/test_kernels.cpp).
// For the forward kernel, the value computed for one output element depends
// only on its own input row, never on how rows are blocked, so batched and
// single-row inference give bit-identical results within one ISA.

#include <cstddef>
#include <string_view>

namespace llcopt::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);

  // y[n] += alpha * x[n]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // y[m x n] = x[m x k] * w[n x k]^T + bias[n]
  void (*linear_forward)(const double* x, const double* w, const double* bias, double* y, std::size_t m,
                         std::size_t n, std::size_t k);

  // dx[m x k] = dy[m x n] * w[n x k]
  void (*linear_backward_input)(const double* dy, const double* w, double* dx, std::size_t m, std::size_t n,
                                std::size_t k);

  // dw[n x k] += dy[m x n]^T * x[m x k];  db[n] += column sums of dy
  void (*linear_backward_weights)(const double* dy, const double* x, double* dw, double* db, std::size_t m,
                                  std::size_t n, std::size_t k);

  // y = tanh(y) elementwise
  void (*tanh_inplace)(double* y, std::size_t n);

  // dy[n] *= 1 - out[n]^2
  void (*tanh_backward)(const double* out, double* dy, std::size_t n);

  // Adam with bias correction folded into step_size = lr * sqrt(1-b2^t) / (1-b1^t)
  // and eps_hat = eps * sqrt(1-b2^t).
  void (*adam_step)(double* w, const double* g, double* m, double* v, std::size_t n, double beta1, double beta2,
                    double step_size, double eps_hat);
};

const KernelTable& scalar_kernels();

/// nullptr when the binary was built without AVX2 support.
const KernelTable* avx2_kernels();

bool cpu_has_avx2_fma();

/// Table used by the networks. Chosen once: the best ISA the CPU supports,
/// unless LLCOPT_ISA=scalar|avx2 says otherwise.
const KernelTable& active_kernels();

/// Overrides the dispatch (tests and benchmarks). Throws if unsupported.
void set_active_isa(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace llcopt::simd
