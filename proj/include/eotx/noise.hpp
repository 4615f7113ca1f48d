#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "eotx/transduction.hpp"

namespace eotx {

struct BathOccupancies {
  double n_ext_e = 0, n_int_e = 0, n_ext_o = 0, n_int_o = 0;
  double n_m = 0;
};

inline void validate(const BathOccupancies& b) {
  for (double v : {b.n_ext_e, b.n_int_e, b.n_ext_o, b.n_int_o, b.n_m})
    if (!(v >= 0)) throw DomainError("bath occupancies must be >= 0");
}

/// Labels of the ten per-port contributions, in the order they are stored.
/// For the e port "self" is the e mode and "other" the o mode, and vice versa.
inline constexpr std::array<const char*, 10> contribution_labels{
    "ext_self", "int_self", "ext_other", "int_other", "mech",
    "ext_self_dag", "int_self_dag", "ext_other_dag", "int_other_dag", "mech_dag"};

struct NoiseBudget {
  double omega = 0;
  double n_add_e = 0, n_add_o = 0;
  std::array<double, 10> contributions_e{};
  std::array<double, 10> contributions_o{};
};

namespace detail {

inline std::array<double, 10> port_terms(double eta_s, double eta_x, cplx a_ss, cplx a_sx,
                                         cplx a_sm, cplx at_ss, cplx at_sx, cplx at_sm,
                                         double n_ext_s, double n_int_s, double n_ext_x,
                                         double n_int_x, double n_m) {
  return {std::norm(eta_s * a_ss - 1.0) * n_ext_s,
          eta_s * (1 - eta_s) * std::norm(a_ss) * n_int_s,
          eta_s * eta_x * std::norm(a_sx) * n_ext_x,
          eta_s * (1 - eta_x) * std::norm(a_sx) * n_int_x,
          eta_s * std::norm(a_sm) * n_m,
          eta_s * eta_s * std::norm(at_ss) * (n_ext_s + 1),
          eta_s * (1 - eta_s) * std::norm(at_ss) * (n_int_s + 1),
          eta_s * eta_x * std::norm(at_sx) * (n_ext_x + 1),
          eta_s * (1 - eta_x) * std::norm(at_sx) * (n_int_x + 1),
          eta_s * std::norm(at_sm) * (n_m + 1)};
}

inline double sum(const std::array<double, 10>& a) {
  double s = 0;
  for (double v : a) s += v;
  return s;
}

} // namespace detail

inline NoiseBudget added_noise_full(const DeviceParams& p, const DriveConfig& d, double omega,
                                    const BathOccupancies& b) {
  validate(b);
  const auto c = analytic_coefficients(p, d, omega);
  const double ee = p.eta(Mode::e), eo = p.eta(Mode::o);
  NoiseBudget r;
  r.omega = omega;
  r.contributions_e = detail::port_terms(ee, eo, c.alpha_ee, c.alpha_eo, c.alpha_em, c.alpha_t_ee,
                                         c.alpha_t_eo, c.alpha_t_em, b.n_ext_e, b.n_int_e,
                                         b.n_ext_o, b.n_int_o, b.n_m);
  r.contributions_o = detail::port_terms(eo, ee, c.alpha_oo, c.alpha_oe(), c.alpha_om,
                                         c.alpha_t_oo, c.alpha_t_oe, c.alpha_t_om, b.n_ext_o,
                                         b.n_int_o, b.n_ext_e, b.n_int_e, b.n_m);
  r.n_add_e = detail::sum(r.contributions_e);
  r.n_add_o = detail::sum(r.contributions_o);
  return r;
}

struct PortPair {
  double e = 0;
  double o = 0;
};

/// Zero-temperature added noise.
inline PortPair added_noise_vacuum(const DeviceParams& p, const DriveConfig& d, double omega) {
  const auto c = analytic_coefficients(p, d, omega);
  return {p.eta(Mode::e) * (std::norm(c.alpha_t_ee) + std::norm(c.alpha_t_eo) + std::norm(c.alpha_t_em)),
          p.eta(Mode::o) * (std::norm(c.alpha_t_oo) + std::norm(c.alpha_t_oe) + std::norm(c.alpha_t_om))};
}

/// Vacuum added noise through the phonon floor, valid for Delta_e = omega_m and G_e ~ 1.
/// Evaluated at omega_m'.
inline PortPair added_noise_simplified(const DeviceParams& p, const DriveConfig& d) {
  const auto dd = derive(p, d);
  const double th = theta(p, d, shifted_mechanical_frequency(p, d));
  const double nm = n_min(p, d);
  if (nm == 0) return {0, 0};
  return {th / p.eta(Mode::o) * nm,
          th / p.eta(Mode::e) * nm * (nm + 1) * (dd.gamma_opt_o / dd.gamma_opt_e)};
}

/// Quantum-limited amplifier picture: (G_o - 1, G_e - 1).
inline PortPair amplifier_referred_noise(const DeviceParams& p, const DriveConfig& d) {
  return {gain(p, d, Mode::o) - 1, gain(p, d, Mode::e) - 1};
}

/// Detection chain and microwave resonator pedestal.
struct MeasurementChain {
  double n_add_setup_e = 9.9;
  double n_add_setup_o = 8.8;
  bool resonator_noise = true;
  /// broadband resonator occupancy per watt of microwave pump (2.8e-3 per pW)
  double resonator_noise_per_w = 2.8e-3 / picowatt;
};

struct SpectrumLayers {
  double background = 0; // 1 + n_add_setup
  double resonator = 0;  // broadband resonator pedestal
  double transducer = 0; // added noise of the device
  double total() const { return background + resonator + transducer; }
};

struct SpectrumPoint {
  double omega = 0;
  SpectrumLayers e, o;
};

/// Resonator pedestal: occupancy n_e with a Lorentzian of FWHM kappa_e centred on Delta_e.
inline double resonator_pedestal(const DeviceParams& p, const DriveConfig& d,
                                 const MeasurementChain& chain, double omega) {
  if (!chain.resonator_noise) return 0.0;
  const double n_e = chain.resonator_noise_per_w * d.p_e;
  const double k2 = p.kappa(Mode::e) * p.kappa(Mode::e) / 4;
  const double x = omega - d.delta_e;
  return n_e * k2 / (x * x + k2);
}

inline std::vector<SpectrumPoint> output_spectrum(const DeviceParams& p, const DriveConfig& d,
                                                  const std::vector<double>& omega_grid,
                                                  const BathOccupancies& b,
                                                  const MeasurementChain& chain) {
  std::vector<SpectrumPoint> out;
  out.reserve(omega_grid.size());
  for (double w : omega_grid) {
    const auto nb = added_noise_full(p, d, w, b);
    SpectrumPoint s;
    s.omega = w;
    s.e = {1 + chain.n_add_setup_e, resonator_pedestal(p, d, chain, w), nb.n_add_e};
    s.o = {1 + chain.n_add_setup_o, 0.0, nb.n_add_o};
    out.push_back(s);
  }
  return out;
}

} // namespace eotx
