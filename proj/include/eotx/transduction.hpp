#pragma once

#include <cmath>
#include <string>

#include "eotx/network.hpp"

namespace eotx {

struct ConversionPoint {
  double omega = 0;      // evaluation frequency, rad/s
  double zeta = 0;
  double theta = 0;
  double gain_e = 1;
  double gain_o = 1;
  double n_min = 0;
  double bandwidth = 0;  // rad/s
  double freq_shift = 0; // rad/s

  double gain() const { return gain_e * gain_o; }
};

inline ScatteringMatrix scattering(const DeviceParams& p, const DriveConfig& d, double omega) {
  return scattering_at(build_matrices(p, d), omega);
}

inline double zeta_of(const ScatteringMatrix& sm) {
  return std::abs(sm(out_o, in_e_ext) * sm(out_e, in_o_ext));
}

/// Bidirectional upper-sideband transduction |S_oe S_eo|.
inline double zeta_full(const DeviceParams& p, const DriveConfig& d, double omega) {
  return zeta_of(scattering(p, d, omega));
}

/// Includes the discarded lower optical sideband.
inline double zeta_both_sidebands(double zeta) { return std::sqrt(2.0) * zeta; }

inline double zeta_resolved_limit(double eta_e, double eta_o, double coop_e, double coop_o) {
  if (coop_e < 0 || coop_o < 0) throw DomainError("cooperativities must be >= 0");
  const double s = 1 + coop_e + coop_o;
  return 4 * eta_e * eta_o * coop_e * coop_o / (s * s);
}

inline void require_detuned(const DriveConfig& d, Mode m) {
  if (d.delta(m) == 0)
    throw DomainError(std::string("gain ") + name(m) + " diverges: 1/Delta_" + name(m) +
                      " with zero detuning");
}

/// G_j = ((Delta + w)^2 + kappa^2/4) / (4 Delta omega_m)
inline double gain(const DeviceParams& p, const DriveConfig& d, Mode m, double omega) {
  require_detuned(d, m);
  const double delta = d.delta(m), k = p.kappa(m);
  return ((delta + omega) * (delta + omega) + k * k / 4) / (4 * delta * p.omega_m);
}

inline double gain(const DeviceParams& p, const DriveConfig& d, Mode m) {
  return gain(p, d, m, p.omega_m);
}

/// Backaction phonon floor ((Delta_o - w_m)^2 + kappa_o^2/4) / (4 Delta_o w_m).
inline double n_min(const DeviceParams& p, const DriveConfig& d) {
  require_detuned(d, Mode::o);
  const double delta = d.delta_o, k = p.kappa(Mode::o), wm = p.omega_m;
  return ((delta - wm) * (delta - wm) + k * k / 4) / (4 * delta * wm);
}

/// Spring shift sum_j Im(G_j^2 (chi_j - chi~_j)) at omega_m.
inline double frequency_shift(const DeviceParams& p, const DriveConfig& d) {
  const auto dd = derive(p, d);
  const double w = p.omega_m;
  double s = 0;
  for (Kind k : {Kind::e, Kind::o}) {
    const double g = k == Kind::e ? dd.g_e : dd.g_o;
    s += std::imag(g * g * (susceptibility(p, d, k, w) - susceptibility(p, d, k, w, true)));
  }
  return s;
}

/// Shifted mechanical resonance omega_m' where the conversion peaks.
inline double shifted_mechanical_frequency(const DeviceParams& p, const DriveConfig& d) {
  return p.omega_m + frequency_shift(p, d);
}

/// Gamma_conv = Gamma_e(omega_m) + gamma_m
inline double bandwidth(const DeviceParams& p, const DriveConfig& d) {
  return derive(p, d).gamma_opt_e + p.gamma_m();
}

/// Pure conversion. Damping rates at omega_m; the mechanical loss term carries the
/// counter-rotating factor omega/omega_m.
inline double theta(const DeviceParams& p, const DriveConfig& d, double omega) {
  const auto dd = derive(p, d);
  const double wp = shifted_mechanical_frequency(p, d);
  const cplx den(p.gamma_m() * omega / p.omega_m + dd.gamma_opt_e + dd.gamma_opt_o,
                 2 * (omega - wp));
  return 4 * p.eta(Mode::e) * p.eta(Mode::o) * std::abs(dd.gamma_opt_e * dd.gamma_opt_o) /
         std::norm(den);
}

inline ConversionPoint decompose(const DeviceParams& p, const DriveConfig& d, double omega) {
  ConversionPoint c;
  c.omega = omega;
  c.gain_e = gain(p, d, Mode::e);
  c.gain_o = gain(p, d, Mode::o);
  c.n_min = n_min(p, d);
  c.zeta = zeta_full(p, d, omega);
  c.theta = theta(p, d, omega);
  c.bandwidth = bandwidth(p, d);
  c.freq_shift = frequency_shift(p, d);
  return c;
}

/// Decomposition at the conversion peak omega_m'.
inline ConversionPoint decompose_at_peak(const DeviceParams& p, const DriveConfig& d) {
  return decompose(p, d, shifted_mechanical_frequency(p, d));
}

/// Unknown gains of the four lines around the device.
struct LineGains {
  double in_e = 1, in_o = 1, out_e = 1, out_o = 1;
};

struct CalibratedMeasurement {
  double p_ee = 0, p_oo = 0, p_eo = 0, p_oe = 0; // detected powers per unit probe power
  double zeta = 0;
};

/// Four-power self-calibration: reflections taken off resonance at
/// Delta_j + offset_factor * kappa_j, transmissions at omega.
inline CalibratedMeasurement simulate_calibrated_measurement(const DeviceParams& p,
                                                             const DriveConfig& d, double omega,
                                                             const LineGains& g,
                                                             double offset_factor = 1e3) {
  if (offset_factor < 10) throw DomainError("off-resonant reflection needs |delta| >= 10 kappa");
  const auto s = build_matrices(p, d);
  const auto on = scattering_at(s, omega);
  const auto off_e = scattering_at(s, d.delta_e + offset_factor * p.kappa(Mode::e));
  const auto off_o = scattering_at(s, d.delta_o + offset_factor * p.kappa(Mode::o));
  CalibratedMeasurement m;
  m.p_eo = g.in_e * std::norm(on(out_o, in_e_ext)) * g.out_o;
  m.p_oe = g.in_o * std::norm(on(out_e, in_o_ext)) * g.out_e;
  m.p_ee = g.in_e * std::norm(off_e(out_e, in_e_ext)) * g.out_e;
  m.p_oo = g.in_o * std::norm(off_o(out_o, in_o_ext)) * g.out_o;
  m.zeta = std::sqrt(m.p_eo * m.p_oe / (m.p_ee * m.p_oo));
  return m;
}

} // namespace eotx
