// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <cstdio>
#include <random>
#include <string>

#include "eotx/commands.hpp"
#include "support/oracles.hpp"
#include "support/points.hpp"

using namespace eotx;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what) {
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", what.c_str());
  if (!pass) ++failures;
}

bool within(double x, double ref, double rel) { return std::abs(x - ref) <= rel * std::abs(ref); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

/// Peak of zeta near omega_m' on a fine grid, refined by golden section.
double peak_zeta(const DeviceParams& p, const DriveConfig& d) {
  const auto s = build_matrices(p, d);
  auto f = [&](double w) { return zeta_of(scattering_at(s, w)); };
  const double wc = shifted_mechanical_frequency(p, d), bw = bandwidth(p, d);
  double best_w = wc, best = f(wc);
  for (int k = -200; k <= 200; ++k)
    if (const double v = f(wc + k * bw / 50); v > best) best = v, best_w = wc + k * bw / 50;
  double a = best_w - bw / 50, b = best_w + bw / 50;
  for (int it = 0; it < 80; ++it) {
    const double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
    (f(m1) < f(m2) ? a : b) = f(m1) < f(m2) ? m1 : m2;
  }
  return std::max(best, f((a + b) / 2));
}

struct RandomSet {
  std::vector<oracle::RandomPoint> points;
  std::vector<std::vector<double>> omegas;
};

RandomSet random_set() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  RandomSet s;
  for (int k = 0; k < 100; ++k) {
    s.points.push_back(oracle::random_stable_point(rng));
    std::vector<double> w;
    for (int j = 0; j < 10; ++j) w.push_back(s.points.back().p.omega_m * u(rng));
    s.omegas.push_back(w);
  }
  return s;
}

double fit_estimate(const RunConfig& cfg, CalibKind kind, double noise, std::uint64_t seed,
                    const char* extra = nullptr) {
  CalibrateOptions o;
  o.kind = kind;
  o.synthetic = true;
  o.noise = noise;
  o.seed = seed;
  const auto out = cmd_calibrate(cfg, o);
  const auto j = json::parse(out.files.front().second);
  if (!j["converged"].get<bool>()) return std::numeric_limits<double>::quiet_NaN();
  return extra ? j["extras"][extra].get<double>() : j["estimate"].get<double>();
}

} // namespace

int main() {
  const DeviceParams device;
  const DriveConfig drive;

  { // 1
    const double g = gain(device, drive, Mode::o);
    DriveConfig d = drive;
    d.delta_o = device.kappa(Mode::o) / 2;
    const double nm = n_min(device, d), ref = device.kappa(Mode::o) / (4 * device.omega_m);
    report(1, within(g, 110, 0.05) && within(nm, ref, 0.03) && within(ref, 33.8, 0.01),
           fmt("optical gain %.2f at 126 MHz (110 +-5%%); n_min %.2f vs kappa_o/4omega_m %.2f (3%%)", g, nm, ref));
  }

  const auto [cp, cd] = points::conversion_point();
  { // 2
    const double z = peak_zeta(cp, cd);
    const double r = z / (cp.eta(Mode::e) * cp.eta(Mode::o));
    report(2, z >= 0.008 && z <= 0.015 && r >= 0.7 && r <= 1.4,
           fmt("peak zeta %.3f%% in [0.8, 1.5]%%; zeta/(eta_e eta_o) %.1f%% in [70, 140]%%; Gamma_conv %.1f Hz",
               100 * z, 100 * r, to_hz(bandwidth(cp, cd))));
  }

  { // 3
    const double n = intracavity_photons(device, drive, Mode::o);
    report(3, std::abs(n - 0.21) <= 0.02, fmt("n_d,o %.4f (0.21 +- 0.02)", n));
  }

  { // 4
    RunConfig cfg;
    cfg.drive.p_o = 92e-12;
    cfg.fom.eta_e = 0.15;
    cfg.fom.match_coop_e = true;
    const auto [p, d] = fom_operating_point(cfg);
    const auto r = modulator_report(p, d);
    report(4, within(r.v_pi, 16e-6, 0.2) && within(r.e_bit, 1.3e-15, 0.2) && within(to_hz(p.gamma_m()), 164, 0.02),
           fmt("V_pi %.2f uV (16 +-20%%); E_bit %.3f fJ angular (1.3 +-20%%), %.2f fJ cyclic; gamma_m %.1f Hz, C_e %.3f",
               1e6 * r.v_pi, 1e15 * r.e_bit, 1e15 * r.e_bit_cyclic, to_hz(p.gamma_m()), r.coop_e));
  }

  { // 5
    BathOccupancies b;
    b.n_m = points::conversion_point_n_m();
    const double w = shifted_mechanical_frequency(cp, cd);
    const auto nb = added_noise_full(cp, cd, w, b);
    const auto v = added_noise_vacuum(cp, cd, w);
    const double hi = std::max(nb.n_add_e, nb.n_add_o), lo = std::min(nb.n_add_e, nb.n_add_o);
    const double vac = std::max(v.e / nb.n_add_e, v.o / nb.n_add_o);
    report(5, within(hi, 224, 0.3) && within(lo, 145, 0.3) && vac <= 5e-3,
           fmt("n_add e %.1f, o %.1f vs {224, 145} (30%%); vacuum share %.3f%% (<= 0.5%%); n_m %.0f",
               nb.n_add_e, nb.n_add_o, 100 * vac, b.n_m));
  }

  const auto set = random_set();
  { // 6
    double worst = 0;
    for (std::size_t k = 0; k < set.points.size(); ++k) {
      const auto& [p, d] = set.points[k];
      const auto s = build_matrices(p, d);
      for (double w : set.omegas[k]) {
        const auto pred = oracle::upsilon_from_coefficients(analytic_coefficients(p, d, w), p.eta(Mode::e), p.eta(Mode::o));
        worst = std::max(worst, oracle::max_rel_diff(scattering_at(s, w).upsilon.topRows<2>(), pred, 1e-12));
      }
    }
    report(6, worst <= 1e-9, fmt("analytic coefficients vs matrix solve, 100 x 10: worst relative %.2e (1e-9)", worst));
  }

  { // 7
    double worst = 0;
    for (std::size_t k = 0; k < set.points.size(); ++k) {
      const auto& [p, d] = set.points[k];
      const auto s = build_matrices(p, d);
      for (double w : set.omegas[k]) {
        const auto r = commutator_residuals(scattering_at(s, w));
        worst = std::max({worst, std::abs(r.e), std::abs(r.o)});
      }
    }
    report(7, worst <= 1e-9, fmt("commutator sum rules, 100 x 10: worst residual %.2e (1e-9)", worst));
  }

  { // 8
    const auto [p, d] = points::resolved_point();
    const auto dd = derive(p, d);
    const double z = zeta_full(p, d, p.omega_m);
    const double ref = zeta_resolved_limit(p.eta(Mode::e), p.eta(Mode::o), dd.coop_e, dd.coop_o);
    const auto v = added_noise_vacuum(p, d, p.omega_m);
    const double rel = std::abs(z - ref) / ref;
    report(8, rel <= 1e-5 && v.e < 1e-4 && v.o < 1e-4,
           fmt("resolved limit: zeta %.6f vs %.6f (rel %.1e, 1e-5); vacuum e %.1e, o %.1e (< 1e-4)", z, ref, rel, v.e, v.o));
  }

  { // 9
    RunConfig cfg;
    SweepSpec spec;
    spec.axis = Axis::delta_o_const_nd;
    spec.grid = {5e6, 600e6, 60, true};
    double worst = 0;
    bool ok = true;
    for (const auto& r : run_sweep(cfg, spec)) {
      ok = ok && r.flag == "ok" && std::abs(r.n_d_o - 0.185) < 1e-9;
      worst = std::max(worst, std::abs(r.zeta / (r.theta * r.gain_e * r.gain_o) - 1));
    }
    report(9, ok && worst <= 1e-6,
           fmt("zeta = theta G_e G_o over Delta_o 5-600 MHz at n_d,o 0.185: worst %.2e (1e-6)", worst));
  }

  { // 10
    const double w = shifted_mechanical_frequency(cp, cd);
    const double ref = zeta_full(cp, cd, w);
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-6, 3);
    double worst = 0;
    for (int k = 0; k < 200; ++k) {
      const LineGains g{std::pow(10, u(rng)), std::pow(10, u(rng)), std::pow(10, u(rng)), std::pow(10, u(rng))};
      worst = std::max(worst, std::abs(simulate_calibrated_measurement(cp, cd, w, g).zeta / ref - 1));
    }
    // corners of the gain box
    for (int m = 0; m < 16; ++m) {
      auto pick = [&](int bit) { return (m >> bit) & 1 ? 1e3 : 1e-6; };
      const LineGains g{pick(0), pick(1), pick(2), pick(3)};
      worst = std::max(worst, std::abs(simulate_calibrated_measurement(cp, cd, w, g).zeta / ref - 1));
    }
    report(10, worst <= 1e-6, fmt("four-power scheme over line gains 1e-6..1e3: worst %.2e (1e-6)", worst));
  }

  { // 11
    RunConfig cfg;
    const auto op = resolve(cfg);
    struct Case {
      const char* name;
      CalibKind kind;
      double truth;
      const char* extra;
    };
    const Case cases[] = {{"g0_e", CalibKind::g0e, 67.0, nullptr},
                          {"g0_o", CalibKind::g0o, 662e3, nullptr},
                          {"T_m", CalibKind::bath, op.t_m, "t_m_k"},
                          {"gamma_m", CalibKind::gamma_m, to_hz(op.params.gamma_m()), nullptr}};
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
      const double clean = fit_estimate(cfg, c.kind, 0, 1, c.extra);
      const double noisy = fit_estimate(cfg, c.kind, 0.01, 1, c.extra);
      const double e0 = std::abs(clean / c.truth - 1), e1 = std::abs(noisy / c.truth - 1);
      ok = ok && e0 <= 0.01 && e1 <= 0.05;
      detail += fmt("%s %.2e/%.2e ", c.name, e0, e1);
    }
    report(11, ok, "fit round trips, relative error noiseless/1% noise (1%/5%): " + detail);
  }

  { // 12
    const SetupModel s;
    DriveConfig d = drive;
    const auto p = apply_heating(HeatingModel{}, d, device).params;
    const double n_d = intracavity_photons(p, d, Mode::e);
    const double bg = mw_background(p, d.delta_e, n_d, s.n_add_setup_e);
    const double pr = mw_raw_background(p, s.gain_setup_e, s.n_add_setup_e) / bg;
    const auto r = extract_setup_mw(bg, n_d, p, d.delta_e, pr);
    const double n_qe = quantum_efficiency_model(0.102), eta = eta_qe_from_added_noise(8.8);
    report(12, within(r.n_add_setup_e, 9.9, 1e-9) && within(r.gain_setup_e, 64.1, 1e-9) && within(n_qe, 8.8, 0.01) &&
                   within(eta, 0.102, 0.01),
           fmt("setup extraction (%.4f, %.4f dB); eta_qe 0.102 -> %.3f added, 8.8 added -> eta_qe %.4f", r.n_add_setup_e,
               r.gain_setup_e, n_qe, eta));
  }

  std::printf("%s: %d of 12 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
