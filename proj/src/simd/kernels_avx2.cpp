// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma
// -ffp-contract=off; nothing here may be called unless cpu_has_avx2_fma().

#include <immintrin.h>

#include <cmath>

#include "llcopt/simd/kernels.hpp"

namespace llcopt::simd {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s = std::fma(a[i], b[i], s);
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

// R input rows against C weight rows. Each output element owns one
// accumulator stepped over k in fours, so its value is independent of R and C.
template <int R, int C>
inline void forward_block(const double* x, const double* w, const double* bias, double* y, std::size_t n,
                          std::size_t k) {
  __m256d acc[R][C];
  #pragma GCC unroll 8
  for (int r = 0; r < R; ++r)
    #pragma GCC unroll 8
    for (int c = 0; c < C; ++c) acc[r][c] = _mm256_setzero_pd();
  std::size_t p = 0;
  for (; p + 4 <= k; p += 4) {
    __m256d wv[C];
    #pragma GCC unroll 8
    for (int c = 0; c < C; ++c) wv[c] = _mm256_loadu_pd(w + c * k + p);
    #pragma GCC unroll 8
    for (int r = 0; r < R; ++r) {
      const __m256d xv = _mm256_loadu_pd(x + r * k + p);
      #pragma GCC unroll 8
      for (int c = 0; c < C; ++c) acc[r][c] = _mm256_fmadd_pd(xv, wv[c], acc[r][c]);
    }
  }
  #pragma GCC unroll 8
  for (int r = 0; r < R; ++r) {
    #pragma GCC unroll 8
    for (int c = 0; c < C; ++c) {
      double s = hsum(acc[r][c]);
      for (std::size_t q = p; q < k; ++q) s = std::fma(x[r * k + q], w[c * k + q], s);
      y[r * n + c] = s + bias[c];
    }
  }
}

// Column blocks outermost so a 4-row weight slice stays in L1 while every
// input row passes over it.
void linear_forward(const double* x, const double* w, const double* bias, double* y, std::size_t m, std::size_t n,
                    std::size_t k) {
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    std::size_t i = 0;
    for (; i + 2 <= m; i += 2) forward_block<2, 4>(x + i * k, w + j * k, bias + j, y + i * n + j, n, k);
    for (; i < m; ++i) forward_block<1, 4>(x + i * k, w + j * k, bias + j, y + i * n + j, n, k);
  }
  for (; j < n; ++j) {
    std::size_t i = 0;
    for (; i + 2 <= m; i += 2) forward_block<2, 1>(x + i * k, w + j * k, bias + j, y + i * n + j, n, k);
    for (; i < m; ++i) forward_block<1, 1>(x + i * k, w + j * k, bias + j, y + i * n + j, n, k);
  }
}

// dx rows [R] x column vectors [V] of 4 doubles, accumulated over all n weight rows.
template <int R, int V>
inline void backward_input_block(const double* dy, const double* w, double* dx, std::size_t n, std::size_t k) {
  __m256d acc[R][V];
  #pragma GCC unroll 8
  for (int r = 0; r < R; ++r)
    #pragma GCC unroll 8
    for (int v = 0; v < V; ++v) acc[r][v] = _mm256_setzero_pd();
  for (std::size_t j = 0; j < n; ++j) {
    __m256d wv[V];
    #pragma GCC unroll 8
    for (int v = 0; v < V; ++v) wv[v] = _mm256_loadu_pd(w + j * k + 4 * v);
    #pragma GCC unroll 8
    for (int r = 0; r < R; ++r) {
      const __m256d g = _mm256_broadcast_sd(dy + r * n + j);
      #pragma GCC unroll 8
      for (int v = 0; v < V; ++v) acc[r][v] = _mm256_fmadd_pd(g, wv[v], acc[r][v]);
    }
  }
  #pragma GCC unroll 8
  for (int r = 0; r < R; ++r)
    #pragma GCC unroll 8
    for (int v = 0; v < V; ++v) _mm256_storeu_pd(dx + r * k + 4 * v, acc[r][v]);
}

template <int V>
inline void backward_input_cols(const double* dy, const double* w, double* dx, std::size_t m, std::size_t n,
                                std::size_t k) {
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) backward_input_block<2, V>(dy + i * n, w, dx + i * k, n, k);
  for (; i < m; ++i) backward_input_block<1, V>(dy + i * n, w, dx + i * k, n, k);
}

// Column slices of w outermost; each is reused by every row of dy.
void linear_backward_input(const double* dy, const double* w, double* dx, std::size_t m, std::size_t n,
                           std::size_t k) {
  std::size_t c = 0;
  for (; c + 16 <= k; c += 16) backward_input_cols<4>(dy, w + c, dx + c, m, n, k);
  for (; c + 4 <= k; c += 4) backward_input_cols<1>(dy, w + c, dx + c, m, n, k);
  for (; c < k; ++c) {
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s = std::fma(dy[i * n + j], w[j * k + c], s);
      dx[i * k + c] = s;
    }
  }
}

// dw rows [J] x column vectors [V], accumulated over all m samples.
template <int J, int V>
inline void backward_weights_block(const double* dy, const double* x, double* dw, std::size_t m, std::size_t n,
                                   std::size_t k) {
  __m256d acc[J][V];
  #pragma GCC unroll 8
  for (int r = 0; r < J; ++r)
    #pragma GCC unroll 8
    for (int v = 0; v < V; ++v) acc[r][v] = _mm256_loadu_pd(dw + r * k + 4 * v);
  for (std::size_t i = 0; i < m; ++i) {
    __m256d xv[V];
    #pragma GCC unroll 8
    for (int v = 0; v < V; ++v) xv[v] = _mm256_loadu_pd(x + i * k + 4 * v);
    #pragma GCC unroll 8
    for (int r = 0; r < J; ++r) {
      const __m256d g = _mm256_broadcast_sd(dy + i * n + r);
      #pragma GCC unroll 8
      for (int v = 0; v < V; ++v) acc[r][v] = _mm256_fmadd_pd(g, xv[v], acc[r][v]);
    }
  }
  #pragma GCC unroll 8
  for (int r = 0; r < J; ++r)
    #pragma GCC unroll 8
    for (int v = 0; v < V; ++v) _mm256_storeu_pd(dw + r * k + 4 * v, acc[r][v]);
}

template <int V>
inline void backward_weights_cols(const double* dy, const double* x, double* dw, std::size_t m, std::size_t n,
                                  std::size_t k) {
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) backward_weights_block<2, V>(dy + j, x, dw + j * k, m, n, k);
  for (; j < n; ++j) backward_weights_block<1, V>(dy + j, x, dw + j * k, m, n, k);
}

// Column slices of x outermost; each is reused by every output row of dw.
void linear_backward_weights(const double* dy, const double* x, double* dw, double* db, std::size_t m,
                             std::size_t n, std::size_t k) {
  std::size_t c = 0;
  for (; c + 16 <= k; c += 16) backward_weights_cols<4>(dy, x + c, dw + c, m, n, k);
  for (; c + 4 <= k; c += 4) backward_weights_cols<1>(dy, x + c, dw + c, m, n, k);
  for (; c < k; ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      double s = dw[r * k + c];
      for (std::size_t i = 0; i < m; ++i) s = std::fma(dy[i * n + r], x[i * k + c], s);
      dw[r * k + c] = s;
    }
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t r = 0; r < n; ++r) db[r] += dy[i * n + r];
}

void tanh_inplace(double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(y[i]);
}

void tanh_backward(const double* out, double* dy, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d o = _mm256_loadu_pd(out + i);
    const __m256d d = _mm256_sub_pd(one, _mm256_mul_pd(o, o));
    _mm256_storeu_pd(dy + i, _mm256_mul_pd(_mm256_loadu_pd(dy + i), d));
  }
  for (; i < n; ++i) dy[i] *= 1.0 - out[i] * out[i];
}

// No fused operations: results are bit-identical to the scalar reference.
void adam_step(double* w, const double* g, double* m, double* v, std::size_t n, double beta1, double beta2,
               double step_size, double eps_hat) {
  const __m256d b1 = _mm256_set1_pd(beta1);
  const __m256d b2 = _mm256_set1_pd(beta2);
  const __m256d c1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d c2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d lr = _mm256_set1_pd(step_size);
  const __m256d eps = _mm256_set1_pd(eps_hat);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    const __m256d mv = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(c1, gv));
    const __m256d vv =
        _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)), _mm256_mul_pd(_mm256_mul_pd(c2, gv), gv));
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
    const __m256d upd = _mm256_div_pd(_mm256_mul_pd(lr, mv), _mm256_add_pd(_mm256_sqrt_pd(vv), eps));
    _mm256_storeu_pd(w + i, _mm256_sub_pd(_mm256_loadu_pd(w + i), upd));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    w[i] -= step_size * m[i] / (std::sqrt(v[i]) + eps_hat);
  }
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{Isa::Avx2,
                                 "avx2",
                                 &dot,
                                 &axpy,
                                 &linear_forward,
                                 &linear_backward_input,
                                 &linear_backward_weights,
                                 &tanh_inplace,
                                 &tanh_backward,
                                 &adam_step};
  return &table;
}

}  // namespace llcopt::simd
