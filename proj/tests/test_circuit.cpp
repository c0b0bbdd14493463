#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "llcopt/circuit.hpp"
#include "support/mesh_oracle.hpp"

using namespace llcopt;

TEST_CASE("resonant frequency closed form") {
  CHECK(resonant_frequency(10e-6, 100e-9) == doctest::Approx(159154.9431).epsilon(1e-9));
  CHECK(resonant_frequency(40e-6, 250e-9) == doctest::Approx(50329.2121).epsilon(1e-9));
  CHECK(resonant_frequency(1.0, 1.0) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK_THROWS_AS((void)resonant_frequency(0.0, 1e-9), std::domain_error);
  CHECK_THROWS_AS((void)resonant_frequency(1e-6, -1e-9), std::domain_error);
}

TEST_CASE("resonant frequency scales by 1/c when L_r and C_r scale by c") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const CircuitParams p = oracle::random_params(rng);
    const double c = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
    CHECK(resonant_frequency(c * p.L_r, c * p.C_r) == doctest::Approx(resonant_frequency(p) / c).epsilon(1e-12));
  }
}

TEST_CASE("lossless resonant peak of the k=1 tank sits at the series resonance") {
  // With k = 1 and no losses the tank reduces to a series L_r-C_r into R_ac
  // shunted by L_m; the load current peaks at f0 for large L_m.
  CircuitParams p{40e-6, 1.0, 250e-9, 1.0, 0.0, 0.0, 450.0, 35.0};
  const double f0 = resonant_frequency(p);
  const double at = oracle::solve(p, f0, LossModel::lossless()).p_load;
  CHECK(oracle::solve(p, f0 * 1.001, LossModel::lossless()).p_load < at);
  CHECK(oracle::solve(p, f0 / 1.001, LossModel::lossless()).p_load < at);
}

TEST_CASE("series L_r-C_r impedance cancels at resonance") {
  const double L = 10e-6;
  const double Cap = 100e-9;
  const double w = 2.0 * std::numbers::pi * resonant_frequency(L, Cap);
  const Complex z = Complex{0.0, w * L} + 1.0 / Complex{0.0, w * Cap};
  CHECK(std::abs(z) < 1e-12 * w * L);
}

TEST_CASE("closed form matches the mesh oracle") {
  std::mt19937_64 rng(1234);
  const LossModel losses[] = {LossModel{}, LossModel::lossless(), LossModel{1.0, 0.3, 2.0}};
  for (const auto& loss : losses) {
    for (int i = 0; i < 1000; ++i) {
      const CircuitParams p = oracle::random_params(rng);
      const double f = oracle::random_frequency(rng);
      const TankResponse r = tank_response(p, f, loss);
      const oracle::MeshResult m = oracle::solve(p, f, loss);
      REQUIRE(oracle::rel_err(r.series_current, m.i_series) <= 1e-9);
      REQUIRE(oracle::rel_err(r.load_current, m.i_load) <= 1e-9);
      REQUIRE(oracle::rel_err(r.magnetizing_current, m.i_mag) <= 1e-9);
      const OperatingPointResult op = simulate_operating_point(p, f, loss);
      REQUIRE(oracle::rel_err(op.p_r, m.p_load) <= 1e-9);
      REQUIRE(oracle::rel_err(op.e, m.efficiency) <= 1e-9);
      REQUIRE(op.f == f);
    }
  }
}

TEST_CASE("lossless efficiency is exactly one") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000; ++i) {
    const CircuitParams p = oracle::random_params(rng);
    const OperatingPointResult op = simulate_operating_point(p, oracle::random_frequency(rng), LossModel::lossless());
    REQUIRE(std::abs(op.e - 1.0) <= 1e-12);
  }
}

TEST_CASE("source real power equals load power plus ohmic loss") {
  std::mt19937_64 rng(5);
  const LossModel loss{};
  for (int i = 0; i < 1000; ++i) {
    const CircuitParams p = oracle::random_params(rng);
    const double f = oracle::random_frequency(rng);
    const TankResponse r = tank_response(p, f, loss);
    const double delivered = (r.source_voltage * std::conj(r.series_current)).real();
    const double p_r = std::norm(r.load_current) * reflected_load(p.R_L);
    REQUIRE(oracle::rel_err(delivered, p_r + ohmic_loss(r, loss)) <= 1e-9);
  }
}

TEST_CASE("raising a resistance never raises efficiency") {
  // Series resistances leave the current split unchanged, so efficiency falls
  // even with currents re-solved. R_Lm reshapes the divider; for it the
  // property holds with the branch currents held fixed.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> bump(1e-3, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const CircuitParams p = oracle::random_params(rng);
    const double f = oracle::random_frequency(rng);
    const LossModel base{};
    const TankResponse r0 = tank_response(p, f, base);
    const double p_r = std::norm(r0.load_current) * reflected_load(p.R_L);
    const double e0 = p_r / (p_r + ohmic_loss(r0, base));
    for (int which = 0; which < 3; ++which) {
      LossModel more = base;
      (which == 0 ? more.R_Lr : which == 1 ? more.R_Cr : more.R_Lm) += bump(rng);
      REQUIRE(p_r / (p_r + ohmic_loss(r0, more)) <= e0);
      if (which < 2) REQUIRE(simulate_operating_point(p, f, more).e <= e0 * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("ideal-coupling limit approaches V1^2 / R_ac") {
  // V1 = (2 sqrt2 / pi) 400 V, R_ac = (8 / pi^2) 35 Ohm: about 4573 W.
  const double expected = std::pow(2.0 * std::sqrt(2.0) / std::numbers::pi * 400.0, 2) /
                          (8.0 / (std::numbers::pi * std::numbers::pi) * 35.0);
  CHECK(expected == doctest::Approx(4573.0).epsilon(1e-3));
  CircuitParams p{10e-6, 1.0, 100e-9, 1.0 - 1e-9, 0.0, 0.0, 400.0, 35.0};
  const double f0 = resonant_frequency(p);
  const double closed = simulate_operating_point(p, f0, LossModel::lossless()).p_r;
  const double mesh = oracle::solve(p, f0, LossModel::lossless()).p_load;
  CHECK(closed == doctest::Approx(expected).epsilon(1e-4));
  CHECK(mesh == doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("open load carries no current") {
  CircuitParams p{20e-6, 60e-6, 100e-9, 0.95, 30e3, 80e3, 450.0, 1e15};
  const TankResponse r = tank_response(p, 50e3, LossModel{});
  CHECK(std::abs(r.load_current) < 1e-9);
}

TEST_CASE("parameter validation names the field") {
  CircuitParams p{20e-6, 60e-6, 100e-9, 0.95, 30e3, 80e3, 450.0, 35.0};
  CHECK_NOTHROW(p.validate());
  CHECK(p.in_range());
  p.k = 0.995;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("k"), ValidationError);
  CHECK_FALSE(p.in_range());
  CHECK_THROWS_AS(LossModel({-1.0, 0.0, 0.0}).validate(), ValidationError);
  CHECK_THROWS_AS((void)tank_response(p, 0.0, LossModel{}), std::domain_error);
}
