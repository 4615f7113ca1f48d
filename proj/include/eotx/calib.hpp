#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "eotx/fit.hpp"
#include "eotx/noise.hpp"

namespace eotx {

/// Fridge temperature above which the sample is taken to be thermalized (microwave fits).
inline constexpr double thermalization_threshold = 0.150; // K
/// Default for the optical g0 fit, which only averages the warmest spectra.
inline constexpr double optical_thermalization_threshold = 0.400; // K

struct SyntheticSpectrum {
  std::vector<double> omega; // rad/s, rotating frame
  std::vector<double> values;
  std::vector<double> sigma;
  std::map<std::string, double> truth;
  std::uint64_t noise_seed = 0;
  double temperature = 0; // fridge temperature label, K
};

struct SetupModel {
  double gain_setup_e = 64.1; // dB
  double n_add_setup_e = 9.9;
  double gain_setup_o = 17.9; // dB
  double n_add_setup_o = 8.8;
  double eta_qe = 0.102;
  double attenuation_in_e = 76.8; // dB
};

struct SpectrumNoise {
  double sigma_rel = 0;    // multiplicative Gaussian per bin
  std::uint64_t seed = 0;
};

/// Added detection noise of a beam splitter with efficiency eta_qe and a unit-occupancy
/// reference state: (1 - eta_qe) / eta_qe.
inline double quantum_efficiency_model(double eta_qe) {
  if (!(eta_qe > 0 && eta_qe <= 1)) throw DomainError("eta_qe must lie in (0, 1]");
  return (1 - eta_qe) / eta_qe;
}

inline double eta_qe_from_added_noise(double n_add_setup_o) {
  if (!(n_add_setup_o >= 0)) throw DomainError("added noise must be >= 0");
  return 1 / (1 + n_add_setup_o);
}

/// eta_qe and the optical background agree to within rel_tol.
inline bool consistent(const SetupModel& s, double rel_tol = 0.01) {
  const double n = quantum_efficiency_model(s.eta_qe);
  return std::abs(n - s.n_add_setup_o) <= rel_tol * std::max(1.0, s.n_add_setup_o);
}

/// Multiplies each bin by (1 + sigma_rel N(0,1)); sigma is sigma_rel times the clean value.
inline void apply_noise(SyntheticSpectrum& s, const SpectrumNoise& n) {
  s.noise_seed = n.seed;
  s.sigma.resize(s.values.size());
  std::mt19937_64 rng(n.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const double clean = s.values[i];
    s.sigma[i] = n.sigma_rel > 0 ? n.sigma_rel * clean : 1e-3 * clean;
    if (n.sigma_rel > 0) s.values[i] = std::max(0.0, clean * (1 + n.sigma_rel * gauss(rng)));
  }
}

// ---------------------------------------------------------------- microwave side

/// Normalized background O_e = (1 + n_add) 4 kappa_ex / (n_d (4 Delta^2 + (kappa - 2 kappa_ex)^2)).
inline double mw_background(const DeviceParams& p, double delta_e, double n_d_e, double n_add_setup_e) {
  if (!(n_d_e > 0)) throw DomainError("microwave background needs n_d_e > 0");
  const double k = p.kappa(Mode::e), kx = p.kappa_ex_e;
  return (1 + n_add_setup_e) * 4 * kx / (n_d_e * (4 * delta_e * delta_e + (k - 2 * kx) * (k - 2 * kx)));
}

/// Weak-drive thermal spectrum S_e / P_r. The mechanical sideband inside the resonator
/// sits at sign(Delta_e) omega_m.
inline double mw_thermal_value(const DeviceParams& p, double delta_e, double n_m, double g0_e,
                               double offset, double omega) {
  const double k = p.kappa(Mode::e), kx = p.kappa_ex_e, gm = p.gamma_m();
  const double s = delta_e >= 0 ? 1.0 : -1.0;
  const double num = 64 * n_m * kx * kx * gm * g0_e * g0_e;
  const double den = (4 * delta_e * delta_e + (k - 2 * kx) * (k - 2 * kx)) *
                     (k * k + 4 * (delta_e - omega) * (delta_e - omega)) *
                     (gm * gm + 4 * (p.omega_m - s * omega) * (p.omega_m - s * omega));
  return offset + num / den;
}

inline SyntheticSpectrum synth_mw_thermal_spectrum(const DeviceParams& p, const DriveConfig& weak,
                                                   double n_m, const SetupModel& setup,
                                                   const std::vector<double>& omega_grid,
                                                   const SpectrumNoise& noise = {}) {
  const auto dd = derive(p, weak);
  if (dd.coop_e >= 0.1) throw DomainError("thermal spectrum formula needs C_e < 0.1");
  if (n_m < 0) throw DomainError("n_m must be >= 0");
  SyntheticSpectrum s;
  s.omega = omega_grid;
  const double bg = mw_background(p, weak.delta_e, dd.n_d_e, setup.n_add_setup_e);
  for (double w : omega_grid) s.values.push_back(mw_thermal_value(p, weak.delta_e, n_m, p.g0_e, bg, w));
  s.truth = {{"g0_e_hz", to_hz(p.g0_e)}, {"n_m", n_m}, {"offset", bg}, {"n_d_e", dd.n_d_e}};
  apply_noise(s, noise);
  return s;
}

struct SetupExtraction {
  double n_add_setup_e = 0;
  double gain_setup_e = 0; // dB
};

/// Inverts the normalized background for n_add,setup,e, then the raw background
/// (O_e times the reflected pump power P_r, W/Hz) for the output gain.
inline SetupExtraction extract_setup_mw(double background, double n_d_e, const DeviceParams& p,
                                        double delta_e, double reflected_pump_w) {
  if (!(n_d_e > 0)) throw DomainError("setup extraction needs n_d_e > 0");
  if (!(background > 0) || !(reflected_pump_w > 0))
    throw DomainError("setup extraction needs positive background and reflected power");
  const double unit = mw_background(p, delta_e, n_d_e, 0.0);
  SetupExtraction r;
  r.n_add_setup_e = background / unit - 1;
  const double raw = background * reflected_pump_w;
  r.gain_setup_e = 10 * std::log10(raw / (hbar * p.omega_e * (1 + r.n_add_setup_e)));
  return r;
}

/// Raw background hbar omega_e 10^(G/10) (1 + n_add), W/Hz.
inline double mw_raw_background(const DeviceParams& p, double gain_db, double n_add_setup_e) {
  return hbar * p.omega_e * std::pow(10.0, gain_db / 10) * (1 + n_add_setup_e);
}

inline double device_power(double source_power_w, double attenuation_db) {
  return source_power_w * std::pow(10.0, -attenuation_db / 10);
}

/// Input-line attenuation implied by the source power and a known n_d,e.
inline double attenuation_from_photons(const DeviceParams& p, double delta_e, double source_power_w,
                                       double n_d_e) {
  const double p_dev = power_for_photons(p, Mode::e, delta_e, n_d_e);
  return 10 * std::log10(source_power_w / p_dev);
}

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) throw DomainError("empty spectrum");
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

inline void check_spectrum(const SyntheticSpectrum& s) {
  if (s.omega.empty()) throw DomainError("empty spectrum");
  if (s.values.size() != s.omega.size() || s.sigma.size() != s.omega.size())
    throw DomainError("spectrum columns differ in length");
  for (double v : s.sigma)
    if (!(v > 0)) throw DomainError("spectrum sigma must be positive");
}

/// Two-parameter (coupling in Hz, offset) fit of one spectrum.
template <typename Model>
LeastSquaresResult fit_coupling_and_offset(const SyntheticSpectrum& s, Model model, double lo_hz,
                                           double hi_hz) {
  check_spectrum(s);
  const int n = static_cast<int>(s.omega.size());
  const double off0 = median(s.values);
  auto chi2 = [&](double g_hz) {
    double c = 0;
    for (int i = 0; i < n; ++i) {
      const double r = (model(g_hz, off0, s.omega[i]) - s.values[i]) / s.sigma[i];
      c += r * r;
    }
    return c;
  };
  const double g_init = grid_scan(chi2, lo_hz, hi_hz, 61, true);
  ResidualFn fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    for (int i = 0; i < n; ++i) r(i) = (model(x(0), x(1), s.omega[i]) - s.values[i]) / s.sigma[i];
  };
  Eigen::VectorXd x0(2);
  x0 << g_init, off0;
  return least_squares(fn, x0, n);
}

struct Aggregate {
  double mean = 0;
  double std_error = 0;
  double spread = 0; // sample standard deviation
};

inline Aggregate aggregate(const std::vector<double>& v) {
  Aggregate a;
  for (double x : v) a.mean += x;
  a.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - a.mean) * (x - a.mean);
    a.spread = std::sqrt(ss / static_cast<double>(v.size() - 1));
    a.std_error = a.spread / std::sqrt(static_cast<double>(v.size()));
  }
  return a;
}

} // namespace detail

struct CouplingFit {
  FitResult combined;
  std::vector<FitResult> per_spectrum; // one per input spectrum, offset in extras
  bool unthermalized_included = false;
};

struct ThermalFitOptions {
  double threshold = thermalization_threshold; // K
  bool include_below_threshold = false;
};

namespace detail {

inline CouplingFit combine(std::vector<FitResult> fits, const std::vector<double>& temps,
                           const ThermalFitOptions& opt, const std::string& name) {
  CouplingFit out;
  std::vector<double> used;
  bool all_converged = true;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const bool below = temps[i] < opt.threshold;
    if (below && !opt.include_below_threshold) continue;
    if (below) out.unthermalized_included = true;
    used.push_back(fits[i].estimate);
    all_converged = all_converged && fits[i].converged;
  }
  if (used.empty()) throw DomainError("no spectrum at or above the thermalization threshold");
  const auto agg = aggregate(used);
  FitResult& c = out.combined;
  c.parameter = name;
  c.unit = "Hz";
  c.estimate = agg.mean;
  c.converged = all_converged;
  c.std_error = used.size() > 1 ? agg.std_error : fits.front().std_error;
  for (auto& f : fits) {
    c.residual_norm = std::hypot(c.residual_norm, f.residual_norm);
    c.iterations += f.iterations;
  }
  c.extras = {{"spectra_used", static_cast<double>(used.size())}, {"spread", agg.spread}};
  if (used.size() < 2) c.warnings.emplace_back("fewer than two spectra; no dispersion estimate");
  if (out.unthermalized_included)
    c.warnings.emplace_back("spectra below the thermalization threshold included; T_m = T_fridge "
                            "may not hold and the estimate dispersion is inflated");
  if (!all_converged) c.warnings.emplace_back("at least one spectrum fit did not converge");
  out.per_spectrum = std::move(fits);
  return out;
}

} // namespace detail

/// g0_e from weak-drive thermal spectra assuming T_m = T_fridge (each spectrum carries
/// its fridge temperature). Fits (g0_e, offset) per spectrum and averages.
inline CouplingFit fit_g0e(const std::vector<SyntheticSpectrum>& spectra, const DeviceParams& p,
                           const DriveConfig& weak, const ThermalFitOptions& opt = {}) {
  if (spectra.empty()) throw DomainError("fit_g0e: no spectra");
  std::vector<FitResult> fits;
  std::vector<double> temps;
  for (const auto& s : spectra) {
    const double n_m = bose_occupancy(s.temperature, p.omega_m);
    auto model = [&](double g_hz, double off, double w) {
      return mw_thermal_value(p, weak.delta_e, n_m, from_hz(g_hz), off, w);
    };
    const auto ls = detail::fit_coupling_and_offset(s, model, 1.0, 1e4);
    FitResult f = make_fit_result("g0_e", "Hz", ls, 0);
    f.extras = {{"offset", ls.x(1)}, {"offset_std_error", std::sqrt(std::max(0.0, ls.covariance(1, 1)))},
                {"t_fridge_k", s.temperature}};
    fits.push_back(std::move(f));
    temps.push_back(s.temperature);
  }
  return detail::combine(std::move(fits), temps, opt, "g0_e");
}

// ---------------------------------------------------------------- optical side

/// Temperature dependence of the mechanics during the optical calibration run.
struct OpticalThermalTrend {
  double gamma_m_per_k2 = from_hz(1700.0); // rad/s per K^2 on top of the heated gamma_m
  double omega_m_per_k = from_hz(2e3);     // rad/s per K, blueshift
};

/// Mechanics at fridge temperature t_fridge (G_e switched off by the caller).
inline DeviceParams mechanics_at(const DeviceParams& heated, const OpticalThermalTrend& trend,
                                 double t_fridge) {
  DeviceParams q = heated;
  q.gamma_m0 = heated.gamma_m0 + trend.gamma_m_per_k2 * t_fridge * t_fridge;
  q.omega_m = heated.omega_m + trend.omega_m_per_k * t_fridge;
  return q;
}

/// Optical thermal output in photons: O_o + n_add,o(omega) with only the mechanical bath hot.
inline double opt_thermal_value(const DeviceParams& q, const DriveConfig& d, double n_m,
                                double offset, double omega) {
  BathOccupancies b;
  b.n_m = n_m;
  return offset + added_noise_full(q, d, omega, b).n_add_o;
}

/// Weak optical drive, microwave pump off. Heating by the probe sets a floor for T_m
/// below which the sample does not follow the fridge.
inline SyntheticSpectrum synth_opt_thermal_spectrum(const DeviceParams& base, const DriveConfig& weak_opt,
                                                    double t_fridge, const SetupModel& setup,
                                                    const HeatingModel& heating,
                                                    const OpticalThermalTrend& trend,
                                                    const std::vector<double>& omega_grid,
                                                    const SpectrumNoise& noise = {}) {
  if (t_fridge < 0) throw DomainError("fridge temperature must be >= 0");
  DriveConfig d = weak_opt;
  d.p_e = 0;
  const auto heated = apply_heating(heating, d, base);
  const DeviceParams q = mechanics_at(heated.params, trend, t_fridge);
  const double t_m = t_fridge > 0 ? std::max(t_fridge, heated.t_m) : 0.0;
  const double n_m = bose_occupancy(t_m, q.omega_m);
  SyntheticSpectrum s;
  s.omega = omega_grid;
  s.temperature = t_fridge;
  const double off = 1 + setup.n_add_setup_o;
  for (double w : omega_grid) s.values.push_back(opt_thermal_value(q, d, n_m, off, w));
  s.truth = {{"g0_o_hz", to_hz(q.g0_o)}, {"t_m_k", t_m}, {"offset", off},
             {"gamma_m_hz", to_hz(q.gamma_m0)}, {"omega_m_hz", to_hz(q.omega_m)}};
  apply_noise(s, noise);
  return s;
}

/// g0_o per spectrum with (g0_o, offset) free, T_m = T_fridge and the mechanics trend known.
inline CouplingFit fit_g0o(const std::vector<SyntheticSpectrum>& spectra, const DeviceParams& base,
                           const DriveConfig& weak_opt, const HeatingModel& heating,
                           const OpticalThermalTrend& trend,
                           ThermalFitOptions opt = {optical_thermalization_threshold, false}) {
  if (spectra.empty()) throw DomainError("fit_g0o: no spectra");
  DriveConfig d = weak_opt;
  d.p_e = 0;
  const auto heated = apply_heating(heating, d, base);
  std::vector<FitResult> fits;
  std::vector<double> temps;
  for (const auto& s : spectra) {
    DeviceParams q = mechanics_at(heated.params, trend, s.temperature);
    const double n_m = bose_occupancy(s.temperature, q.omega_m);
    auto model = [&](double g_hz, double off, double w) {
      DeviceParams qq = q;
      qq.g0_o = from_hz(g_hz);
      return opt_thermal_value(qq, d, n_m, off, w);
    };
    const auto ls = detail::fit_coupling_and_offset(s, model, 1e4, 1e7);
    FitResult f = make_fit_result("g0_o", "Hz", ls, 0);
    f.extras = {{"offset", ls.x(1)}, {"n_add_setup_o", ls.x(1) - 1}, {"t_fridge_k", s.temperature}};
    fits.push_back(std::move(f));
    temps.push_back(s.temperature);
  }
  auto out = detail::combine(std::move(fits), temps, opt, "g0_o");
  std::vector<double> offs;
  for (std::size_t i = 0; i < out.per_spectrum.size(); ++i)
    if (temps[i] >= opt.threshold || opt.include_below_threshold)
      offs.push_back(out.per_spectrum[i].extra("n_add_setup_o"));
  out.combined.extras.emplace_back("n_add_setup_o", detail::aggregate(offs).mean);
  return out;
}

// ---------------------------------------------------------------- transduction and bath

/// Conversion curve zeta(omega) at the given operating point.
inline SyntheticSpectrum synth_zeta_curve(const DeviceParams& p, const DriveConfig& d,
                                          const std::vector<double>& omega_grid,
                                          const SpectrumNoise& noise = {}) {
  SyntheticSpectrum s;
  s.omega = omega_grid;
  const auto m = build_matrices(p, d);
  require_stable(m);
  for (double w : omega_grid) s.values.push_back(zeta_of(scattering_at(m, w)));
  s.truth = {{"gamma_m_hz", to_hz(p.gamma_m())}};
  apply_noise(s, noise);
  return s;
}

/// gamma_m as the only free parameter of zeta(omega).
inline FitResult fit_gamma_m(const std::vector<SyntheticSpectrum>& curves, const DeviceParams& p,
                             const DriveConfig& d) {
  if (curves.empty()) throw DomainError("fit_gamma_m: no curves");
  int n = 0;
  for (auto& c : curves) detail::check_spectrum(c), n += static_cast<int>(c.omega.size());
  auto eval = [&](double gamma_hz, auto&& sink) {
    DeviceParams q = p;
    q.gamma_m0 = from_hz(gamma_hz);
    const auto m = build_matrices(q, d);
    int k = 0;
    for (auto& c : curves)
      for (std::size_t i = 0; i < c.omega.size(); ++i, ++k) {
        double z = std::numeric_limits<double>::quiet_NaN();
        try {
          z = zeta_of(scattering_at(m, c.omega[i]));
        } catch (const InstabilityError&) {
        }
        sink(k, (z - c.values[i]) / c.sigma[i]);
      }
  };
  auto chi2 = [&](double g) {
    double s = 0;
    eval(g, [&](int, double r) { s += std::isfinite(r) ? r * r : 1e300; });
    return s;
  };
  const double init = grid_scan(chi2, 1.0, 1e4, 81, true);
  ResidualFn fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    if (!(x(0) > 0)) {
      r.setConstant(std::numeric_limits<double>::quiet_NaN());
      return;
    }
    eval(x(0), [&](int k, double v) { r(k) = v; });
  };
  Eigen::VectorXd x0(1);
  x0 << init;
  auto ls = least_squares(fn, x0, n);
  return make_fit_result("gamma_m", "Hz", ls);
}

/// Noise spectra of both ports in total output quanta; n_m is the only free parameter.
struct PortSpectra {
  std::vector<SyntheticSpectrum> e, o;
};

inline PortSpectra synth_noise_spectra(const DeviceParams& p, const DriveConfig& d, double n_m,
                                       const MeasurementChain& chain,
                                       const std::vector<double>& omega_grid,
                                       const SpectrumNoise& noise = {}) {
  BathOccupancies b;
  b.n_m = n_m;
  const auto pts = output_spectrum(p, d, omega_grid, b, chain);
  SyntheticSpectrum e, o;
  e.omega = o.omega = omega_grid;
  for (auto& s : pts) {
    e.values.push_back(s.e.total());
    o.values.push_back(s.o.total());
  }
  e.truth = o.truth = {{"n_m", n_m}, {"t_m_k", bose_temperature(n_m, p.omega_m)}};
  apply_noise(e, noise);
  apply_noise(o, {noise.sigma_rel, noise.seed + 1});
  return {{e}, {o}};
}

struct BathFitOptions {
  bool use_e = true;
  bool use_o = true;
};

inline FitResult fit_bath_temperature(const PortSpectra& data, const DeviceParams& p,
                                      const DriveConfig& d, const MeasurementChain& chain,
                                      BathFitOptions opt = {}) {
  std::vector<std::pair<const SyntheticSpectrum*, Mode>> use;
  if (opt.use_e)
    for (auto& s : data.e) use.emplace_back(&s, Mode::e);
  if (opt.use_o)
    for (auto& s : data.o) use.emplace_back(&s, Mode::o);
  if (use.empty()) throw DomainError("fit_bath_temperature: no spectra");
  int n = 0;
  for (auto& [s, m] : use) detail::check_spectrum(*s), n += static_cast<int>(s->omega.size());

  // n_add is affine in n_m: precompute slope and intercept per bin.
  std::vector<double> a0, a1, y, sg;
  BathOccupancies b0, b1;
  b1.n_m = 1;
  for (auto& [s, m] : use)
    for (std::size_t i = 0; i < s->omega.size(); ++i) {
      const double w = s->omega[i];
      const auto n0 = added_noise_full(p, d, w, b0), n1 = added_noise_full(p, d, w, b1);
      const double bg = m == Mode::e ? 1 + chain.n_add_setup_e + resonator_pedestal(p, d, chain, w)
                                     : 1 + chain.n_add_setup_o;
      const double v0 = m == Mode::e ? n0.n_add_e : n0.n_add_o;
      const double v1 = m == Mode::e ? n1.n_add_e : n1.n_add_o;
      a0.push_back(bg + v0);
      a1.push_back(v1 - v0);
      y.push_back(s->values[i]);
      sg.push_back(s->sigma[i]);
    }
  ResidualFn fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    for (int i = 0; i < n; ++i) r(i) = (a0[i] + a1[i] * x(0) - y[i]) / sg[i];
  };
  auto chi2 = [&](double nm) {
    double c = 0;
    for (int i = 0; i < n; ++i) {
      const double r = (a0[i] + a1[i] * nm - y[i]) / sg[i];
      c += r * r;
    }
    return c;
  };
  Eigen::VectorXd x0(1);
  x0 << grid_scan(chi2, 1.0, 1e5, 101, true);
  const auto ls = least_squares(fn, x0, n);
  FitResult f = make_fit_result("n_m", "quanta", ls);
  const double t = bose_temperature(f.estimate, p.omega_m);
  const double dt_dn = (bose_temperature(f.estimate * (1 + 1e-6), p.omega_m) - t) / (f.estimate * 1e-6);
  f.extras = {{"t_m_k", t}, {"t_m_std_error_k", std::abs(dt_dn) * f.std_error}};
  return f;
}

// ---------------------------------------------------------------- design

struct GeometryCoupling {
  double participation = 0; // 2 C_m / (2 C_m + C_s)
  double x_zpf = 0;         // m
  double g_em = 0;          // rad/s per m
  double g0_e = 0;          // rad/s
};

/// Electromechanical coupling from circuit geometry; c_m is one of the two motional capacitors.
inline GeometryCoupling g0e_from_geometry(double c_m, double c_s, double omega_e, double m_eff,
                                          double omega_m, double dc_du) {
  if (!(c_m > 0) || c_s < 0 || !(omega_e > 0) || !(m_eff > 0) || !(omega_m > 0))
    throw DomainError("geometry inputs must be positive");
  GeometryCoupling g;
  g.participation = 2 * c_m / (2 * c_m + c_s);
  g.x_zpf = std::sqrt(hbar / (2 * m_eff * omega_m));
  g.g_em = -g.participation * omega_e / 2 / (2 * c_m) * dc_du;
  g.g0_e = 2 * g.x_zpf * g.g_em;
  return g;
}

} // namespace eotx
