#pragma once

// Single-frequency phasor model of a full-bridge LLC resonant converter.
//
// The tank is reduced to three impedances (RMS phasors throughout):
//
//   V1 ──[ R_Lr + R_Cr + jωL_r + 1/(jωC_r) + jω(1-k)L_m ]──┬──[ jω(1-k)L_m + R_ac ]──┐
//                                                         │                         │
//                                                 [ R_Lm + jωkL_m ]                 │
//                                                         │                         │
//   ──────────────────────────────────────────────────────┴─────────────────────────┘
//
// V1 is the fundamental of the full-bridge square wave and R_ac the
// rectifier-reflected load. The coupling factor splits L_m into a T-model of
// a unity-ratio transformer.

#include <array>
#include <complex>
#include <stdexcept>
#include <string>

namespace llcopt {

using Complex = std::complex<double>;

/// Thrown when an input lies outside the physically or contractually valid domain.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numeric routine cannot produce a finite result.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Range {
  double lo;
  double hi;

  [[nodiscard]] constexpr double width() const { return hi - lo; }
  [[nodiscard]] constexpr bool contains(double v) const { return v >= lo && v <= hi; }
  [[nodiscard]] constexpr double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
};

/// Tunable parameter order used everywhere a 6-vector appears.
enum class Tunable : int { Lr = 0, Lm = 1, Cr = 2, K = 3, F1 = 4, F2 = 5 };
inline constexpr int kNumTunables = 6;

namespace ranges {
inline constexpr Range kLr{0.1e-6, 100e-6};
inline constexpr Range kLm{0.1e-6, 100e-6};
inline constexpr Range kCr{1e-9, 1000e-9};
inline constexpr Range kK{0.9, 0.99};
inline constexpr Range kF1{10e3, 50e3};
inline constexpr Range kF2{50e3, 100e3};
inline constexpr Range kVin{400.0, 500.0};
inline constexpr Range kRload{30.0, 40.0};
inline constexpr Range kPt1{100.0, 300.0};
inline constexpr Range kPt2{4000.0, 5000.0};

inline constexpr std::array<Range, kNumTunables> kTunable{kLr, kLm, kCr, kK, kF1, kF2};
inline constexpr std::array<const char*, kNumTunables> kTunableNames{"L_r", "L_m", "C_r", "k", "f_1", "f_2"};
}  // namespace ranges

struct CircuitParams {
  double L_r = 0.0;   // H
  double L_m = 0.0;   // H
  double C_r = 0.0;   // F
  double k = 0.0;
  double f_1 = 0.0;   // Hz
  double f_2 = 0.0;   // Hz
  double V_in = 0.0;  // V
  double R_L = 0.0;   // Ohm

  [[nodiscard]] std::array<double, kNumTunables> tunables() const { return {L_r, L_m, C_r, k, f_1, f_2}; }
  void set_tunables(const std::array<double, kNumTunables>& v);

  /// Throws ValidationError naming the first field outside its range.
  void validate() const;
  [[nodiscard]] bool in_range() const;

  friend bool operator==(const CircuitParams&, const CircuitParams&) = default;
};

// Defaults maximize the share of uniformly drawn designs whose efficiency at
// f_1 and f_2 falls in [0.85, 0.99] (about 59 %).
struct LossModel {
  double R_Lr = 0.07;
  double R_Cr = 0.035;
  double R_Lm = 0.35;

  static constexpr LossModel lossless() { return {0.0, 0.0, 0.0}; }
  void validate() const;

  friend bool operator==(const LossModel&, const LossModel&) = default;
};

struct OperatingPointResult {
  double p_r = 0.0;  // W, into the reflected load
  double e = 1.0;
  double f = 0.0;    // Hz
};

struct TankResponse {
  Complex series_current;
  Complex magnetizing_current;
  Complex load_current;
  Complex load_voltage;  // across the load branch (leakage + R_ac)
  Complex source_voltage;
};

/// Fundamental RMS voltage of a full-bridge square wave with amplitude V_in.
[[nodiscard]] double fundamental_voltage(double V_in);
/// Rectifier load reflected to the AC side, (8/π²)·R_L.
[[nodiscard]] double reflected_load(double R_L);

/// 1 / (2π·sqrt(L_r·C_r)).
[[nodiscard]] double resonant_frequency(double L_r, double C_r);
[[nodiscard]] inline double resonant_frequency(const CircuitParams& p) { return resonant_frequency(p.L_r, p.C_r); }

/// Branch currents and load voltage at frequency `f`. The parameter set is
/// not range-checked here; only positivity of the reactive elements is required.
[[nodiscard]] TankResponse tank_response(const CircuitParams& params, double f, const LossModel& loss);

/// Output power and efficiency at frequency `f`.
[[nodiscard]] OperatingPointResult simulate_operating_point(const CircuitParams& params, double f,
                                                            const LossModel& loss);

/// Total ohmic loss of a solved tank, in W.
[[nodiscard]] double ohmic_loss(const TankResponse& r, const LossModel& loss);

}  // namespace llcopt
