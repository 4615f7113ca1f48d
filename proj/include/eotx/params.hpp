#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "eotx/units.hpp"

namespace eotx {

using cplx = std::complex<double>;

enum class Mode { e, o };
enum class Kind { e, o, m };

inline const char* name(Mode m) { return m == Mode::e ? "e" : "o"; }

/// Static device constants. Angular quantities in rad/s.
struct DeviceParams {
  double omega_e = from_hz(10.497e9);
  double omega_o = from_hz(198.081e12);
  double omega_m = from_hz(11.843e6);
  double kappa_in_e = from_hz(1.6e6);
  double kappa_ex_e = from_hz(1.15e6);
  double kappa_in_o = from_hz(1.42e9);
  double kappa_ex_o = from_hz(0.18e9);
  /// Mechanical decoherence rate. Zero-pump value unless apply_heating replaced it.
  double gamma_m0 = from_hz(15.0);
  double g0_e = from_hz(67.0);
  double g0_o = from_hz(662e3);
  double z_e = 50.0; // ohm

  double gamma_m() const { return gamma_m0; }
  double omega(Mode m) const { return m == Mode::e ? omega_e : omega_o; }
  double kappa_in(Mode m) const { return m == Mode::e ? kappa_in_e : kappa_in_o; }
  double kappa_ex(Mode m) const { return m == Mode::e ? kappa_ex_e : kappa_ex_o; }
  double kappa(Mode m) const { return kappa_in(m) + kappa_ex(m); }
  double eta(Mode m) const { return kappa_ex(m) / kappa(m); }
  double g0(Mode m) const { return m == Mode::e ? g0_e : g0_o; }
};

struct DriveConfig {
  double p_e = 601e-12; // W
  double p_o = 625e-12; // W
  double delta_e = from_hz(11.843e6);
  double delta_o = from_hz(126e6);

  double power(Mode m) const { return m == Mode::e ? p_e : p_o; }
  double delta(Mode m) const { return m == Mode::e ? delta_e : delta_o; }
  void set_power(Mode m, double p) { (m == Mode::e ? p_e : p_o) = p; }
  void set_delta(Mode m, double d) { (m == Mode::e ? delta_e : delta_o) = d; }
};

struct DerivedDrive {
  double n_d_e = 0, n_d_o = 0;
  double g_e = 0, g_o = 0;
  double coop_e = 0, coop_o = 0;
  double gamma_opt_e = 0, gamma_opt_o = 0;
  double omega = 0; // frequency at which gamma_opt_* were evaluated

  double g(Mode m) const { return m == Mode::e ? g_e : g_o; }
  double n_d(Mode m) const { return m == Mode::e ? n_d_e : n_d_o; }
  double coop(Mode m) const { return m == Mode::e ? coop_e : coop_o; }
  double gamma_opt(Mode m) const { return m == Mode::e ? gamma_opt_e : gamma_opt_o; }
};

/// Throws DomainError on non-positive rates; returns soft warnings.
inline std::vector<std::string> validate(const DeviceParams& p) {
  const std::pair<const char*, double> fields[] = {
      {"omega_e", p.omega_e},       {"omega_o", p.omega_o},       {"omega_m", p.omega_m},
      {"kappa_in_e", p.kappa_in_e}, {"kappa_ex_e", p.kappa_ex_e}, {"kappa_in_o", p.kappa_in_o},
      {"kappa_ex_o", p.kappa_ex_o}, {"gamma_m0", p.gamma_m0},     {"g0_e", p.g0_e},
      {"g0_o", p.g0_o},             {"z_e", p.z_e}};
  for (auto& [n, v] : fields)
    if (!(v > 0) || !std::isfinite(v))
      throw DomainError(std::string("device parameter ") + n + " must be positive and finite");
  std::vector<std::string> warnings;
  if (!(p.omega_m < p.omega_e && p.omega_e < p.omega_o))
    warnings.emplace_back("expected omega_m < omega_e < omega_o");
  return warnings;
}

inline void validate(const DriveConfig& d) {
  if (!(d.p_e >= 0) || !(d.p_o >= 0)) throw DomainError("pump powers must be >= 0");
  if (!std::isfinite(d.delta_e) || !std::isfinite(d.delta_o))
    throw DomainError("detunings must be finite");
}

/// n_d = |E|^2/(kappa^2/4 + Delta^2) with |E|^2 = kappa_ex P / (hbar omega_d), omega_d = omega - Delta.
inline double intracavity_photons(const DeviceParams& p, const DriveConfig& d, Mode m) {
  const double k = p.kappa(m), delta = d.delta(m);
  const double e2 = p.kappa_ex(m) * d.power(m) / (hbar * (p.omega(m) - delta));
  return e2 / (k * k / 4 + delta * delta);
}

/// Pump power that gives n_d photons at detuning delta.
inline double power_for_photons(const DeviceParams& p, Mode m, double delta, double n_d) {
  const double k = p.kappa(m);
  return n_d * (k * k / 4 + delta * delta) * hbar * (p.omega(m) - delta) / p.kappa_ex(m);
}

/// Gamma_j = G^2 [kappa/((Delta-w)^2+kappa^2/4) - kappa/((Delta+w)^2+kappa^2/4)]
inline double damping_rate(double g, double delta, double kappa, double omega) {
  const double k4 = kappa * kappa / 4;
  return g * g * (kappa / ((delta - omega) * (delta - omega) + k4) -
                  kappa / ((delta + omega) * (delta + omega) + k4));
}

inline DerivedDrive derive(const DeviceParams& p, const DriveConfig& d, double omega) {
  DerivedDrive r;
  r.omega = omega;
  r.n_d_e = intracavity_photons(p, d, Mode::e);
  r.n_d_o = intracavity_photons(p, d, Mode::o);
  r.g_e = p.g0_e * std::sqrt(r.n_d_e);
  r.g_o = p.g0_o * std::sqrt(r.n_d_o);
  r.coop_e = 4 * r.g_e * r.g_e / (p.kappa(Mode::e) * p.gamma_m());
  r.coop_o = 4 * r.g_o * r.g_o / (p.kappa(Mode::o) * p.gamma_m());
  r.gamma_opt_e = damping_rate(r.g_e, d.delta_e, p.kappa(Mode::e), omega);
  r.gamma_opt_o = damping_rate(r.g_o, d.delta_o, p.kappa(Mode::o), omega);
  return r;
}

inline DerivedDrive derive(const DeviceParams& p, const DriveConfig& d) {
  return derive(p, d, p.omega_m);
}

inline double optomechanical_damping(const DeviceParams& p, const DerivedDrive& dd,
                                     const DriveConfig& d, Mode m, double omega) {
  return damping_rate(dd.g(m), d.delta(m), p.kappa(m), omega);
}

/// chi^-1 = i(Delta - w) + kappa/2; mirrored gives chi(-w)*.
inline cplx susceptibility(double delta, double kappa, double omega, bool mirrored = false) {
  if (mirrored) return std::conj(1.0 / cplx(kappa / 2, delta + omega));
  return 1.0 / cplx(kappa / 2, delta - omega);
}

inline cplx susceptibility(const DeviceParams& p, const DriveConfig& d, Kind k, double omega,
                           bool mirrored = false) {
  switch (k) {
  case Kind::e: return susceptibility(d.delta_e, p.kappa(Mode::e), omega, mirrored);
  case Kind::o: return susceptibility(d.delta_o, p.kappa(Mode::o), omega, mirrored);
  case Kind::m: break;
  }
  return susceptibility(p.omega_m, p.gamma_m(), omega, mirrored);
}

inline double bose_occupancy(double temperature, double omega) {
  if (temperature < 0 || !(omega > 0)) throw DomainError("bose_occupancy needs T >= 0, omega > 0");
  if (temperature == 0) return 0.0;
  return 1.0 / std::expm1(hbar * omega / (k_boltzmann * temperature));
}

/// Inverse of bose_occupancy.
inline double bose_temperature(double n, double omega) {
  if (!(n > 0)) return 0.0;
  return hbar * omega / (k_boltzmann * std::log1p(1.0 / n));
}

/// Point of a piecewise-linear empirical law in P_o. p in watt.
struct Anchor {
  double p = 0;
  double value = 0;
};

/// Linear interpolation through anchors, linear extrapolation beyond both ends.
inline double interpolate(const std::vector<Anchor>& a, double p) {
  if (a.empty()) throw DomainError("empty anchor table");
  if (a.size() == 1) return a.front().value;
  std::size_t i = 0;
  while (i + 2 < a.size() && p > a[i + 1].p) ++i;
  const double f = (p - a[i].p) / (a[i + 1].p - a[i].p);
  return a[i].value + f * (a[i + 1].value - a[i].value);
}

/// Empirical pump heating of the device.
struct HeatingModel {
  bool enabled = true;
  /// gamma_m vs P_o (rad/s), piecewise linear
  std::vector<Anchor> gamma_m_vs_p_o{
      {0.0, from_hz(15.0)}, {92e-12, from_hz(164.0)}, {1556e-12, from_hz(355.0)}};
  /// d gamma_m / d P_e, rad/s per watt
  double gamma_m_per_p_e = 0.0;
  /// kappa_in_e vs P_o (rad/s), piecewise linear
  std::vector<Anchor> kappa_in_e_vs_p_o{
      {0.0, from_hz(1.6e6)}, {92e-12, from_hz(6.1e6)}, {1556e-12, from_hz(13.9e6)}};
  /// T_m = a ln(P_o / 1 pW) + b, kelvin
  double t_m_a = 0.18;
  double t_m_b = -0.47;
  double t_floor = 0.05;
};

inline void validate(const HeatingModel& h) {
  auto check = [](const std::vector<Anchor>& a, const char* what) {
    if (a.empty()) throw DomainError(std::string(what) + ": no anchors");
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!std::isfinite(a[i].p) || !std::isfinite(a[i].value) || a[i].value <= 0)
        throw DomainError(std::string(what) + ": anchors must be finite and positive");
      if (i > 0 && (a[i].p <= a[i - 1].p || a[i].value < a[i - 1].value))
        throw DomainError(std::string(what) + ": anchors must increase in power and value");
    }
  };
  check(h.gamma_m_vs_p_o, "gamma_m anchors");
  check(h.kappa_in_e_vs_p_o, "kappa_in_e anchors");
  if (!std::isfinite(h.t_m_a) || !std::isfinite(h.t_m_b) || !(h.t_floor >= 0) || h.t_m_a < 0 ||
      !(h.gamma_m_per_p_e >= 0))
    throw DomainError("heating coefficients must be finite; slopes >= 0");
}

struct HeatedState {
  DeviceParams params;
  double t_m = 0;          // kelvin
  bool t_m_clamped = false; // log law fell below the fridge floor
};

inline HeatedState apply_heating(const HeatingModel& h, const DriveConfig& d,
                                 const DeviceParams& base) {
  HeatedState s{base, h.t_floor, true};
  if (!h.enabled) return s;
  s.params.gamma_m0 =
      std::max(base.gamma_m0, interpolate(h.gamma_m_vs_p_o, d.p_o)) + h.gamma_m_per_p_e * d.p_e;
  s.params.kappa_in_e = std::max(base.kappa_in_e, interpolate(h.kappa_in_e_vs_p_o, d.p_o));
  if (d.p_o > 0) {
    const double t = h.t_m_a * std::log(d.p_o / picowatt) + h.t_m_b;
    if (t >= h.t_floor) {
      s.t_m = t;
      s.t_m_clamped = false;
    }
  }
  return s;
}

} // namespace eotx
