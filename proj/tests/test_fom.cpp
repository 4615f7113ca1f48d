#include <catch_amalgamated.hpp>

#include "eotx/fom.hpp"
#include "support/oracles.hpp"
#include "support/points.hpp"

using namespace eotx;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

namespace {

/// 92 pW heated point, eta_e = 0.15 and C_e = 1.
std::pair<DeviceParams, DriveConfig> modulator_point() {
  DriveConfig d;
  d.p_o = 92e-12;
  DeviceParams p = with_eta_e(apply_heating(HeatingModel{}, d, DeviceParams{}).params, 0.15);
  d.p_e = power_for_coop_e(p, d, 1.0);
  return {p, d};
}

/// Resolved microwave mode, optical drive off.
std::pair<DeviceParams, DriveConfig> resolved_electromechanics(double coop_e) {
  auto [p, d] = points::resolved_point(coop_e);
  d.p_o = 0;
  return {p, d};
}

} // namespace

TEST_CASE("theta31 equals the matrix solution") {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 20; ++k) {
    const auto [p, d] = oracle::random_stable_point(rng);
    for (double w : {p.omega_m, 0.97 * p.omega_m, shifted_mechanical_frequency(p, d)}) {
      const cplx ref = oracle::response(p, d, w)(2, 0);
      CHECK(std::abs(theta31(p, d, w) - ref) <= 1e-9 * std::abs(ref));
    }
  }
  DeviceParams p;
  DriveConfig d;
  d.p_e = 0;
  CHECK(theta31(p, d, p.omega_m) == 0.0);
}

TEST_CASE("resolved rate matching") {
  for (double c : {0.2, 1.0, 3.0}) {
    const auto [p, d] = resolved_electromechanics(c);
    const double ce = derive(p, d).coop_e;
    CHECK_THAT(ce, WithinRel(c, 1e-12));
    const double ref = 4 * p.eta(Mode::e) / p.gamma_m() * ce / ((1 + ce) * (1 + ce));
    CHECK_THAT(std::norm(theta31(p, d, p.omega_m)), WithinRel(ref, 1e-3));
    CHECK_THAT(v_pi(p, d, p.omega_m, VpiForm::full),
               WithinRel(v_pi(p, d, p.omega_m, VpiForm::scenario2), 0.05));
  }
}

TEST_CASE("phonon number") {
  const auto [p, d] = resolved_electromechanics(1.0);
  CHECK(phonon_number(p, d, 0, p.omega_m) == 0);
  const double n1 = phonon_number(p, d, 1e-15, p.omega_m);
  CHECK_THAT(phonon_number(p, d, 2e-15, p.omega_m), WithinRel(2 * n1, 1e-14));
  CHECK_THAT(n1, WithinRel(p.eta(Mode::e) / p.gamma_m() * 1e-15 / (hbar * p.omega_e), 1e-3));
  CHECK_THROWS_AS(phonon_number(p, d, -1, p.omega_m), DomainError);
}

TEST_CASE("V_pi forms") {
  SECTION("scenario1 without optical damping is scenario2") {
    auto [p, d] = modulator_point();
    d.p_o = 0;
    CHECK(v_pi(p, d, p.omega_m, VpiForm::scenario1) == v_pi(p, d, p.omega_m, VpiForm::scenario2));
  }
  SECTION("scenario2 is smallest at C_e = 1") {
    auto [p, d] = modulator_point();
    double best = 1e300, best_c = 0;
    for (int k = -20; k <= 20; ++k) {
      const double c = std::pow(10.0, k / 10.0);
      d.p_e = power_for_coop_e(p, d, c);
      const double v = v_pi(p, d, p.omega_m, VpiForm::scenario2);
      if (v < best) best = v, best_c = c;
    }
    CHECK_THAT(best_c, WithinRel(1.0, 1e-12));
  }
  SECTION("diverges as 1 / sqrt(C_e)") {
    auto [p, d] = modulator_point();
    d.p_e = power_for_coop_e(p, d, 1e-4);
    const double v4 = v_pi(p, d, p.omega_m, VpiForm::scenario2);
    d.p_e = power_for_coop_e(p, d, 1e-6);
    const double v6 = v_pi(p, d, p.omega_m, VpiForm::scenario2);
    CHECK_THAT(v6 / v4, WithinRel(10.0, 1e-3));
  }
  SECTION("zero transfer is a domain error") {
    auto [p, d] = modulator_point();
    d.p_e = 0;
    CHECK_THROWS_AS(v_pi(p, d, p.omega_m, VpiForm::full), DomainError);
    CHECK_THROWS_AS(v_pi(p, d, p.omega_m, VpiForm::scenario2), DomainError);
  }
}

TEST_CASE("the V_pi minimum sits at omega_m'") {
  const auto [p, d] = modulator_point();
  const auto m = v_pi_minimum(p, d);
  const double wp = shifted_mechanical_frequency(p, d);
  const double step = bandwidth(p, d) / 20;
  double best = 1e300, best_w = 0;
  for (int k = -100; k <= 100; ++k) {
    const double w = wp + k * step;
    const double v = v_pi(p, d, w, VpiForm::full);
    if (v < best) best = v, best_w = w;
  }
  CHECK(std::abs(best_w - wp) <= step);
  CHECK(m.v_pi <= best * (1 + 1e-12));
  CHECK(std::abs(m.omega - wp) <= step);
}

TEST_CASE("modulator headline numbers") {
  const auto [p, d] = modulator_point();
  CHECK_THAT(to_hz(p.gamma_m()), WithinRel(164.0, 0.02));
  CHECK_THAT(derive(p, d).coop_e, WithinRel(1.0, 1e-12));
  const auto r = modulator_report(p, d);
  CHECK_THAT(r.v_pi, WithinRel(16e-6, 0.2));
  CHECK_THAT(r.e_bit, WithinRel(1.3e-15, 0.2));
  CHECK_THAT(r.e_bit_cyclic, WithinRel(two_pi * r.e_bit, 1e-12));
  CHECK_THAT(r.p_pi, WithinRel(r.v_pi * r.v_pi / (2 * p.z_e), 1e-15));
  CHECK_THAT(energy_per_bit(p, d), WithinRel(r.e_bit, 1e-12));
  CHECK_THAT(energy_per_bit(p, d, BandwidthConvention::cyclic), WithinRel(r.e_bit_cyclic, 1e-12));
  // quadratic in V_pi
  const double v = v_pi_minimum(p, d).v_pi;
  CHECK_THAT(energy_per_bit(p, d), WithinRel(v * v / (2 * p.z_e) / bandwidth(p, d), 1e-12));
}

TEST_CASE("report formatting") {
  const auto [p, d] = modulator_point();
  const auto r = modulator_report(p, d);
  const std::string kv = to_kv(r);
  for (const char* key : {"v_pi_v = ", "e_bit_j = ", "e_bit_cyclic_j = ", "eta_e = ", "gamma_m_hz = "})
    CHECK(kv.find(key) != std::string::npos);
  CHECK(std::count(kv.begin(), kv.end(), '\n') == 15);
}

TEST_CASE("with_eta_e") {
  DeviceParams p;
  CHECK_THAT(with_eta_e(p, 0.15).eta(Mode::e), WithinRel(0.15, 1e-14));
  CHECK(with_eta_e(p, 0.15).kappa_ex_e == p.kappa_ex_e);
  CHECK_THROWS_AS(with_eta_e(p, 0), DomainError);
  CHECK_THROWS_AS(with_eta_e(p, 1.5), DomainError);
}
