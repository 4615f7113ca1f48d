#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include "eotx/transduction.hpp"

namespace eotx {

enum class VpiForm { full, scenario1, scenario2 };
enum class BandwidthConvention { angular, cyclic };

/// Entry (b, a_ext,e) of (-i w I - A)^-1 B in closed form.
inline cplx theta31(const DeviceParams& p, const DriveConfig& d, double omega) {
  const auto dd = derive(p, d, omega);
  const cplx ce = susceptibility(p, d, Kind::e, omega), cet = susceptibility(p, d, Kind::e, omega, true);
  const cplx co = susceptibility(p, d, Kind::o, omega), cot = susceptibility(p, d, Kind::o, omega, true);
  const cplx cm = susceptibility(p, d, Kind::m, omega), cmt = susceptibility(p, d, Kind::m, omega, true);
  const cplx den = 1.0 + (cm - cmt) * (dd.g_e * dd.g_e * (ce - cet) + dd.g_o * dd.g_o * (co - cot));
  return cplx(0, -1) * std::sqrt(p.kappa(Mode::e) * p.eta(Mode::e)) * dd.g_e * ce * cm / den;
}

/// Phonons driven by a microwave signal of power p_signal (W).
inline double phonon_number(const DeviceParams& p, const DriveConfig& d, double p_signal,
                            double omega) {
  if (p_signal < 0) throw DomainError("signal power must be >= 0");
  return std::norm(theta31(p, d, omega)) * p_signal / (hbar * p.omega_e);
}

/// (pi kappa_o / g0_o) sqrt(hbar omega_e 2 Z_e), in volt * sqrt(s).
inline double vpi_prefactor(const DeviceParams& p) {
  return pi * p.kappa(Mode::o) / p.g0_o * std::sqrt(hbar * p.omega_e * 2 * p.z_e);
}

inline double v_pi(const DeviceParams& p, const DriveConfig& d, double omega, VpiForm form) {
  const double k = vpi_prefactor(p);
  if (form == VpiForm::full) {
    const double t = std::abs(theta31(p, d, omega));
    if (!(t > 0)) throw DomainError("V_pi undefined: zero microwave-to-phonon transfer");
    return k / t;
  }
  const auto dd = derive(p, d);
  const double gm = p.gamma_m();
  const double ge = 4 * dd.g_e * dd.g_e / p.kappa(Mode::e);
  const double go = form == VpiForm::scenario1 ? 4 * dd.g_o * dd.g_o / p.kappa(Mode::o) : 0.0;
  if (!(ge > 0)) throw DomainError("V_pi undefined: zero electromechanical damping");
  return 0.5 / std::sqrt(p.eta(Mode::e)) * (gm + ge + go) / std::sqrt(ge) * k;
}

struct VpiMinimum {
  double v_pi = 0;
  double omega = 0;
};

/// Minimum of the full-form V_pi near omega_m'.
inline VpiMinimum v_pi_minimum(const DeviceParams& p, const DriveConfig& d) {
  const double wc = shifted_mechanical_frequency(p, d);
  const double span = 5 * (std::abs(derive(p, d).gamma_opt_e) + p.gamma_m());
  const int n = 401;
  auto f = [&](double w) { return -std::abs(theta31(p, d, w)); };
  double best_w = wc, best = f(wc);
  const double step = 2 * span / (n - 1);
  for (int i = 0; i < n; ++i) {
    const double w = wc - span + i * step;
    const double v = f(w);
    if (v < best) best = v, best_w = w;
  }
  // golden section on the bracketing interval
  double a = best_w - step, b = best_w + step;
  const double r = (std::sqrt(5.0) - 1) / 2;
  double c = b - r * (b - a), e = a + r * (b - a);
  double fc = f(c), fe = f(e);
  for (int it = 0; it < 100 && (b - a) > 1e-12 * std::abs(wc); ++it) {
    if (fc < fe) {
      b = e, e = c, fe = fc;
      c = b - r * (b - a), fc = f(c);
    } else {
      a = c, c = e, fc = fe;
      e = a + r * (b - a), fe = f(e);
    }
  }
  const double w = (a + b) / 2;
  if (!(f(w) < 0)) throw DomainError("V_pi undefined: zero microwave-to-phonon transfer");
  return {vpi_prefactor(p) / -f(w), w};
}

/// Modulation bandwidth Gamma_conv in rad/s (angular) or Hz (cyclic).
inline double modulation_bandwidth(const DeviceParams& p, const DriveConfig& d,
                                   BandwidthConvention c) {
  const double bw = bandwidth(p, d);
  return c == BandwidthConvention::angular ? bw : to_hz(bw);
}

/// P_pi over the conversion bandwidth, using the V_pi minimum.
inline double energy_per_bit(const DeviceParams& p, const DriveConfig& d,
                             BandwidthConvention c = BandwidthConvention::angular) {
  const double v = v_pi_minimum(p, d).v_pi;
  return v * v / (2 * p.z_e) / modulation_bandwidth(p, d, c);
}

struct ModulatorReport {
  double v_pi = 0;      // V
  double v_pi_freq = 0; // rad/s
  double p_pi = 0;      // W
  double e_bit = 0;     // J, angular bandwidth
  double e_bit_cyclic = 0;
  double theta31_mag = 0;
  double v_pi_scenario1 = 0;
  double v_pi_scenario2 = 0;
  // operating point
  double eta_e = 0;
  double gamma_m = 0;   // rad/s
  double coop_e = 0;
  double coop_o = 0;
  double bandwidth = 0; // rad/s
  double p_e = 0, p_o = 0;
};

inline ModulatorReport modulator_report(const DeviceParams& p, const DriveConfig& d) {
  ModulatorReport r;
  const auto m = v_pi_minimum(p, d);
  const auto dd = derive(p, d);
  r.v_pi = m.v_pi;
  r.v_pi_freq = m.omega;
  r.p_pi = m.v_pi * m.v_pi / (2 * p.z_e);
  r.bandwidth = bandwidth(p, d);
  r.e_bit = r.p_pi / r.bandwidth;
  r.e_bit_cyclic = r.p_pi / to_hz(r.bandwidth);
  r.theta31_mag = std::abs(theta31(p, d, m.omega));
  r.v_pi_scenario1 = v_pi(p, d, p.omega_m, VpiForm::scenario1);
  r.v_pi_scenario2 = v_pi(p, d, p.omega_m, VpiForm::scenario2);
  r.eta_e = p.eta(Mode::e);
  r.gamma_m = p.gamma_m();
  r.coop_e = dd.coop_e;
  r.coop_o = dd.coop_o;
  r.p_e = d.p_e;
  r.p_o = d.p_o;
  return r;
}

/// Flat "key = value" block; frequencies in Hz.
inline std::string to_kv(const ModulatorReport& r) {
  std::ostringstream os;
  os.precision(12);
  os << "v_pi_v = " << r.v_pi << '\n'
     << "v_pi_freq_hz = " << to_hz(r.v_pi_freq) << '\n'
     << "p_pi_w = " << r.p_pi << '\n'
     << "e_bit_j = " << r.e_bit << '\n'
     << "e_bit_cyclic_j = " << r.e_bit_cyclic << '\n'
     << "theta31_mag = " << r.theta31_mag << '\n'
     << "v_pi_scenario1_v = " << r.v_pi_scenario1 << '\n'
     << "v_pi_scenario2_v = " << r.v_pi_scenario2 << '\n'
     << "eta_e = " << r.eta_e << '\n'
     << "gamma_m_hz = " << to_hz(r.gamma_m) << '\n'
     << "coop_e = " << r.coop_e << '\n'
     << "coop_o = " << r.coop_o << '\n'
     << "bandwidth_hz = " << to_hz(r.bandwidth) << '\n'
     << "p_e_w = " << r.p_e << '\n'
     << "p_o_w = " << r.p_o << '\n';
  return os.str();
}

/// Sets kappa_in_e so that eta_e takes the given value.
inline DeviceParams with_eta_e(DeviceParams p, double eta_e) {
  if (!(eta_e > 0 && eta_e <= 1)) throw DomainError("eta_e must lie in (0, 1]");
  p.kappa_in_e = p.kappa_ex_e * (1 - eta_e) / eta_e;
  return p;
}

/// Microwave pump power that gives the requested electromechanical cooperativity.
inline double power_for_coop_e(const DeviceParams& p, const DriveConfig& d, double coop_e) {
  const double n_d = coop_e * p.kappa(Mode::e) * p.gamma_m() / (4 * p.g0_e * p.g0_e);
  return power_for_photons(p, Mode::e, d.delta_e, n_d);
}

} // namespace eotx
