#include <catch_amalgamated.hpp>

#include "eotx/params.hpp"
#include "support/oracles.hpp"

using namespace eotx;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

TEST_CASE("loss rates and efficiencies are derived exactly") {
  DeviceParams p;
  for (Mode m : {Mode::e, Mode::o}) {
    CHECK(p.kappa(m) == p.kappa_in(m) + p.kappa_ex(m));
    CHECK(p.eta(m) == p.kappa_ex(m) / p.kappa(m));
    CHECK(p.eta(m) > 0);
    CHECK(p.eta(m) <= 1);
  }
  CHECK_THAT(to_hz(p.kappa(Mode::o)), WithinRel(1.6e9, 1e-12));
}

TEST_CASE("device validation rejects non-positive rates and warns on ordering") {
  DeviceParams p;
  CHECK(validate(p).empty());
  p.gamma_m0 = 0;
  CHECK_THROWS_AS(validate(p), DomainError);
  p = DeviceParams{};
  p.omega_m = 2 * p.omega_e;
  CHECK(validate(p).size() == 1);
  DriveConfig d;
  d.p_o = -1;
  CHECK_THROWS_AS(validate(d), DomainError);
}

TEST_CASE("intracavity photons") {
  DeviceParams p;
  DriveConfig d;
  SECTION("zero power gives zero photons") {
    d.p_o = 0;
    CHECK(intracavity_photons(p, d, Mode::o) == 0);
  }
  SECTION("optical drive of the conversion point") {
    const double n = intracavity_photons(p, d, Mode::o);
    CHECK_THAT(n, WithinAbs(0.208, 0.005));
    CHECK_THAT(n, WithinAbs(0.2, 0.02));
    const double ref = oracle::photons(p.kappa_ex_o, p.kappa(Mode::o), p.omega_o, d.p_o, d.delta_o);
    CHECK_THAT(n, WithinRel(ref, 1e-14));
  }
  SECTION("linear in power") {
    const double n1 = intracavity_photons(p, d, Mode::e);
    d.p_e *= 2;
    CHECK_THAT(intracavity_photons(p, d, Mode::e), WithinRel(2 * n1, 1e-15));
  }
  SECTION("power_for_photons inverts it") {
    const double pw = power_for_photons(p, Mode::o, d.delta_o, 0.185);
    d.p_o = pw;
    CHECK_THAT(intracavity_photons(p, d, Mode::o), WithinRel(0.185, 1e-13));
  }
  SECTION("microwave photons at 601 pW are of order 1e5, not 9e5") {
    const double n = intracavity_photons(p, d, Mode::e);
    CHECK(n > 5e4);
    CHECK(n < 2e5);
  }
}

TEST_CASE("derived drive") {
  DeviceParams p;
  DriveConfig d;
  const auto dd = derive(p, d);
  CHECK_THAT(dd.g_e * dd.g_e, WithinRel(p.g0_e * p.g0_e * dd.n_d_e, 1e-14));
  CHECK_THAT(dd.g_o * dd.g_o, WithinRel(p.g0_o * p.g0_o * dd.n_d_o, 1e-14));
  CHECK_THAT(dd.coop_e, WithinRel(4 * dd.g_e * dd.g_e / (p.kappa(Mode::e) * p.gamma_m()), 1e-14));
  CHECK(dd.gamma_opt_e > 0);
  CHECK(dd.gamma_opt_o > 0);
}

TEST_CASE("optomechanical damping") {
  DeviceParams p;
  DriveConfig d;
  SECTION("zero coupling") { CHECK(damping_rate(0, d.delta_o, p.kappa(Mode::o), p.omega_m) == 0); }
  SECTION("antisymmetric in detuning sign") {
    for (double delta : {p.omega_m, from_hz(126e6), from_hz(3e6)}) {
      const double a = damping_rate(1e4, delta, p.kappa(Mode::o), p.omega_m);
      const double b = damping_rate(1e4, -delta, p.kappa(Mode::o), p.omega_m);
      CHECK_THAT(a, WithinRel(-b, 1e-14));
    }
  }
  SECTION("resolved limit reduces to 4G^2/kappa") {
    const double k = 1e-3 * p.omega_m, g = 0.01 * k;
    CHECK_THAT(damping_rate(g, p.omega_m, k, p.omega_m), WithinRel(4 * g * g / k, 1e-5));
  }
  SECTION("unresolved optical cavity suppresses Gamma_o") {
    d.delta_o = p.omega_m;
    const auto dd = derive(p, d);
    const double resolved = 4 * dd.g_o * dd.g_o / p.kappa(Mode::o);
    const double actual = optomechanical_damping(p, dd, d, Mode::o, p.omega_m);
    // exact ratio for Delta = omega: 1 - k^2/4 / (4 w^2 + k^2/4)
    const double k2 = p.kappa(Mode::o) * p.kappa(Mode::o) / 4;
    CHECK_THAT(actual / resolved, WithinRel(1 - k2 / (4 * p.omega_m * p.omega_m + k2), 1e-12));
    CHECK(actual / resolved < 0.01);
  }
}

TEST_CASE("susceptibilities") {
  DeviceParams p;
  DriveConfig d;
  const cplx ce = susceptibility(p, d, Kind::e, d.delta_e);
  CHECK_THAT(ce.real(), WithinRel(2 / p.kappa(Mode::e), 1e-14));
  CHECK(ce.imag() == 0);
  const cplx cm = susceptibility(p, d, Kind::m, p.omega_m);
  CHECK_THAT(cm.real(), WithinRel(2 / p.gamma_m(), 1e-14));
  const cplx cet = susceptibility(p, d, Kind::e, p.omega_m, true);
  // counter-rotating term sits 2 omega_m away
  const double ke = p.kappa(Mode::e);
  CHECK_THAT(std::abs(cet), WithinRel(1 / std::sqrt(ke * ke / 4 + 4 * p.omega_m * p.omega_m), 1e-12));
  // chi~(w) = chi(-w)*
  for (double w : {0.3 * p.omega_m, p.omega_m, 2.1 * p.omega_m}) {
    const cplx a = susceptibility(p, d, Kind::o, w, true);
    const cplx b = std::conj(susceptibility(p, d, Kind::o, -w));
    CHECK(std::abs(a - b) <= 1e-15 * std::abs(b));
    CHECK((1.0 / susceptibility(p, d, Kind::o, w)).real() > 0);
  }
}

TEST_CASE("Bose occupancy") {
  const double wm = from_hz(11.843e6);
  CHECK(bose_occupancy(0, wm) == 0);
  CHECK_THAT(bose_occupancy(0.70, wm), WithinAbs(1231, 1));
  const double t1 = hbar * wm / (k_boltzmann * std::log(2.0));
  CHECK_THAT(bose_occupancy(t1, wm), WithinRel(1.0, 1e-12));
  CHECK(bose_occupancy(0.5, wm) < bose_occupancy(0.6, wm));
  CHECK(bose_occupancy(0.5, wm) > bose_occupancy(0.5, 1.1 * wm));
  CHECK_THAT(bose_temperature(bose_occupancy(0.37, wm), wm), WithinRel(0.37, 1e-12));
  CHECK_THROWS_AS(bose_occupancy(-1, wm), DomainError);
}

TEST_CASE("heating model") {
  HeatingModel h;
  DeviceParams base;
  DriveConfig d;
  SECTION("no optical power leaves the mechanics cold") {
    d.p_o = 0;
    const auto s = apply_heating(h, d, base);
    CHECK(s.params.gamma_m() == base.gamma_m0);
    CHECK(s.t_m == h.t_floor);
    CHECK(s.t_m_clamped);
  }
  SECTION("log law at 625 pW") {
    const auto s = apply_heating(h, d, base);
    CHECK_THAT(s.t_m, WithinRel(0.18 * std::log(625.0) - 0.47, 1e-14));
    CHECK_THAT(s.t_m, WithinAbs(0.69, 0.005));
    CHECK_FALSE(s.t_m_clamped);
  }
  SECTION("passes through the tabulated damping anchors") {
    for (auto [pw, hz] : {std::pair{92e-12, 164.0}, {1556e-12, 355.0}}) {
      d.p_o = pw;
      CHECK_THAT(to_hz(apply_heating(h, d, base).params.gamma_m()), WithinRel(hz, 0.10));
    }
  }
  SECTION("monotone nondecreasing in both powers") {
    double g_prev = 0, k_prev = 0, t_prev = 0;
    for (double pw = 0; pw <= 2e-9; pw += 1e-11) {
      d.p_o = pw;
      const auto s = apply_heating(h, d, base);
      CHECK(s.params.gamma_m() >= g_prev);
      CHECK(s.params.kappa_in_e >= k_prev);
      CHECK(s.t_m >= t_prev);
      g_prev = s.params.gamma_m(), k_prev = s.params.kappa_in_e, t_prev = s.t_m;
    }
    h.gamma_m_per_p_e = from_hz(1e10);
    d.p_e = 0;
    const double g0 = apply_heating(h, d, base).params.gamma_m();
    d.p_e = 1e-9;
    CHECK(apply_heating(h, d, base).params.gamma_m() > g0);
  }
  SECTION("weak optical power clamps at the fridge floor") {
    d.p_o = 10e-12; // 0.18 ln 10 - 0.47 < 0
    const auto s = apply_heating(h, d, base);
    CHECK(s.t_m == h.t_floor);
    CHECK(s.t_m_clamped);
  }
  SECTION("heated gamma_m never drops below the intrinsic value") {
    base.gamma_m0 = from_hz(500);
    d.p_o = 92e-12;
    CHECK(apply_heating(h, d, base).params.gamma_m() == base.gamma_m0);
  }
  SECTION("validation") {
    h.gamma_m_vs_p_o = {{1e-12, 10}, {0.5e-12, 20}};
    CHECK_THROWS_AS(validate(h), DomainError);
  }
}
