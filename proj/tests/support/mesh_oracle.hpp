#pragma once

// Independent phasor reference: two-mesh impedance matrix solved by dense
// complex Gaussian elimination with partial pivoting.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>

#include "llcopt/circuit.hpp"

namespace oracle {

using C = std::complex<double>;

template <std::size_t N>
std::array<C, N> solve_dense(std::array<std::array<C, N>, N> a, std::array<C, N> b) {
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < N; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (std::abs(a[piv][col]) == 0.0) throw std::runtime_error("singular mesh matrix");
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < N; ++r) {
      const C f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < N; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::array<C, N> x{};
  for (std::size_t i = N; i-- > 0;) {
    C s = b[i];
    for (std::size_t c = i + 1; c < N; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

struct MeshResult {
  C i_series;
  C i_mag;
  C i_load;
  C v_source;
  double p_load = 0.0;
  double p_loss = 0.0;
  double efficiency = 1.0;
};

// Mesh 1: source, series branch, magnetizing branch. Mesh 2: magnetizing
// branch, load branch. Element values are rebuilt here from first principles.
inline MeshResult solve(const llcopt::CircuitParams& p, double f, const llcopt::LossModel& loss) {
  const double pi = std::numbers::pi;
  const double w = 2.0 * pi * f;
  const C jw{0.0, w};
  const double v1 = 2.0 * std::sqrt(2.0) * p.V_in / pi;  // RMS fundamental of a +-V_in square wave
  const double r_ac = 8.0 * p.R_L / (pi * pi);
  const double l_sigma = p.L_m - p.k * p.L_m;

  const C z1 = C{loss.R_Lr} + C{loss.R_Cr} + jw * p.L_r + C{1.0} / (jw * p.C_r) + jw * l_sigma;
  const C z2 = C{loss.R_Lm} + jw * (p.k * p.L_m);
  const C z3 = jw * l_sigma + C{r_ac};

  const std::array<std::array<C, 2>, 2> m{{{z1 + z2, -z2}, {-z2, z2 + z3}}};
  const auto i = solve_dense<2>(m, {C{v1}, C{0.0}});

  MeshResult out;
  out.v_source = v1;
  out.i_series = i[0];
  out.i_load = i[1];
  out.i_mag = i[0] - i[1];
  out.p_load = std::norm(out.i_load) * r_ac;
  out.p_loss = std::norm(out.i_series) * (loss.R_Lr + loss.R_Cr) + std::norm(out.i_mag) * loss.R_Lm;
  out.efficiency = out.p_loss == 0.0 ? 1.0 : out.p_load / (out.p_load + out.p_loss);
  return out;
}

inline double rel_err(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

inline double rel_err(C a, C b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

// Uniform draw over the tunable and operating-condition ranges.
inline llcopt::CircuitParams random_params(std::mt19937_64& rng) {
  namespace r = llcopt::ranges;
  auto u = [&](const llcopt::Range& range) { return std::uniform_real_distribution<double>(range.lo, range.hi)(rng); };
  llcopt::CircuitParams p;
  p.L_r = u(r::kLr);
  p.L_m = u(r::kLm);
  p.C_r = u(r::kCr);
  p.k = u(r::kK);
  p.f_1 = u(r::kF1);
  p.f_2 = u(r::kF2);
  p.V_in = u(r::kVin);
  p.R_L = u(r::kRload);
  return p;
}

inline double random_frequency(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(llcopt::ranges::kF1.lo, llcopt::ranges::kF2.hi)(rng);
}

}  // namespace oracle
