#include "llcopt/circuit.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <fmt/format.h>

namespace llcopt {

namespace {

void check_range(const char* name, double v, const Range& r) {
  if (!std::isfinite(v) || !r.contains(v)) {
    throw ValidationError(fmt::format("{} = {:g} outside [{:g}, {:g}]", name, v, r.lo, r.hi));
  }
}

bool finite(const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

void CircuitParams::set_tunables(const std::array<double, kNumTunables>& v) {
  L_r = v[0];
  L_m = v[1];
  C_r = v[2];
  k = v[3];
  f_1 = v[4];
  f_2 = v[5];
}

void CircuitParams::validate() const {
  check_range("L_r", L_r, ranges::kLr);
  check_range("L_m", L_m, ranges::kLm);
  check_range("C_r", C_r, ranges::kCr);
  check_range("k", k, ranges::kK);
  check_range("f_1", f_1, ranges::kF1);
  check_range("f_2", f_2, ranges::kF2);
  check_range("V_in", V_in, ranges::kVin);
  check_range("R_L", R_L, ranges::kRload);
}

bool CircuitParams::in_range() const {
  try {
    validate();
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

void LossModel::validate() const {
  for (auto [name, v] : {std::pair{"R_Lr", R_Lr}, std::pair{"R_Cr", R_Cr}, std::pair{"R_Lm", R_Lm}}) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError(std::string(name) + " must be finite and >= 0");
  }
}

double fundamental_voltage(double V_in) { return 4.0 / std::numbers::pi * V_in / std::numbers::sqrt2; }

double reflected_load(double R_L) { return 8.0 / (std::numbers::pi * std::numbers::pi) * R_L; }

double resonant_frequency(double L_r, double C_r) {
  if (!(L_r > 0.0) || !(C_r > 0.0)) throw std::domain_error("resonant_frequency: L_r and C_r must be positive");
  return 1.0 / (2.0 * std::numbers::pi * std::sqrt(L_r * C_r));
}

TankResponse tank_response(const CircuitParams& p, double f, const LossModel& loss) {
  if (!(f > 0.0) || !std::isfinite(f)) throw std::domain_error("tank_response: frequency must be positive");
  if (!(p.L_r > 0.0) || !(p.L_m > 0.0) || !(p.C_r > 0.0)) {
    throw std::domain_error("tank_response: L_r, L_m and C_r must be positive");
  }
  const double w = 2.0 * std::numbers::pi * f;
  const Complex j{0.0, 1.0};
  const double leakage = (1.0 - p.k) * p.L_m;

  const Complex z_series = loss.R_Lr + loss.R_Cr + j * w * p.L_r + 1.0 / (j * w * p.C_r) + j * w * leakage;
  const Complex z_mag = loss.R_Lm + j * w * p.k * p.L_m;
  const Complex z_load = j * w * leakage + reflected_load(p.R_L);

  const Complex z_shunt_sum = z_mag + z_load;
  if (z_shunt_sum == Complex{}) throw NumericError("tank_response: singular shunt impedance");
  const Complex z_parallel = z_mag * z_load / z_shunt_sum;
  const Complex z_in = z_series + z_parallel;
  if (z_in == Complex{} || !finite(z_in)) throw NumericError("tank_response: singular input impedance");

  TankResponse r;
  r.source_voltage = fundamental_voltage(p.V_in);
  r.series_current = r.source_voltage / z_in;
  r.load_voltage = r.series_current * z_parallel;
  // current divider avoids dividing by z_mag / z_load separately
  r.magnetizing_current = r.series_current * z_load / z_shunt_sum;
  r.load_current = r.series_current * z_mag / z_shunt_sum;
  if (!finite(r.series_current) || !finite(r.load_current) || !finite(r.magnetizing_current)) {
    throw NumericError("tank_response: non-finite branch current");
  }
  return r;
}

double ohmic_loss(const TankResponse& r, const LossModel& loss) {
  return std::norm(r.series_current) * (loss.R_Lr + loss.R_Cr) + std::norm(r.magnetizing_current) * loss.R_Lm;
}

OperatingPointResult simulate_operating_point(const CircuitParams& params, double f, const LossModel& loss) {
  const TankResponse r = tank_response(params, f, loss);
  OperatingPointResult out;
  out.f = f;
  out.p_r = std::norm(r.load_current) * reflected_load(params.R_L);
  const double lost = ohmic_loss(r, loss);
  out.e = lost == 0.0 ? 1.0 : out.p_r / (out.p_r + lost);
  return out;
}

}  // namespace llcopt
