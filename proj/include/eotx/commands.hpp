#pragma once

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "eotx/calib.hpp"
#include "eotx/config.hpp"
#include "eotx/csv.hpp"
#include "eotx/fom.hpp"
#include "eotx/network.hpp"
#include "eotx/noise.hpp"
#include "eotx/transduction.hpp"

#ifndef EOTX_VERSION
#define EOTX_VERSION "0.0.0"
#endif

namespace eotx {

using json = nlohmann::ordered_json;

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_instability = 3;
inline constexpr int exit_fit = 4;

// ---------------------------------------------------------------- grids

struct Grid {
  double start = 0, stop = 0;
  int points = 0;
  bool log = false;

  std::vector<double> values() const {
    std::vector<double> v(points);
    for (int i = 0; i < points; ++i) {
      const double t = static_cast<double>(i) / (points - 1);
      v[i] = log ? start * std::pow(stop / start, t) : start + t * (stop - start);
    }
    if (points > 1) v.back() = stop;
    return v;
  }
};

inline void validate(const Grid& g) {
  if (g.points < 2) throw ConfigError("grid needs at least 2 points");
  if (!(g.start < g.stop)) throw ConfigError("grid start must be below stop");
  if (g.log && !(g.start > 0)) throw ConfigError("log grid needs a positive start");
}

/// "start:stop:points[:log|:lin]"
inline Grid parse_grid(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() < 3 || parts.size() > 4) throw ConfigError("grid '" + s + "': expected start:stop:points[:log]");
  Grid g;
  g.start = detail::parse_double(parts[0], "grid");
  g.stop = detail::parse_double(parts[1], "grid");
  const double n = detail::parse_double(parts[2], "grid");
  if (n != std::floor(n) || n > 1e7) throw ConfigError("grid '" + s + "': points must be an integer");
  g.points = static_cast<int>(n);
  if (parts.size() == 4) {
    if (parts[3] == "log") g.log = true;
    else if (parts[3] != "lin") throw ConfigError("grid '" + s + "': scale must be log or lin");
  }
  validate(g);
  return g;
}

// ---------------------------------------------------------------- sweeps

enum class Axis { p_e, p_o, delta_o, delta_o_const_nd, omega };

inline Axis parse_axis(const std::string& s) {
  if (s == "p_e") return Axis::p_e;
  if (s == "p_o") return Axis::p_o;
  if (s == "delta_o") return Axis::delta_o;
  if (s == "delta_o_const_nd") return Axis::delta_o_const_nd;
  if (s == "omega") return Axis::omega;
  throw ConfigError("unknown sweep axis '" + s + "'");
}

inline std::string axis_column(Axis a) {
  switch (a) {
  case Axis::p_e: return "sweep_p_e_w";
  case Axis::p_o: return "sweep_p_o_w";
  case Axis::delta_o: return "sweep_delta_o_hz";
  case Axis::delta_o_const_nd: return "sweep_delta_o_hz";
  case Axis::omega: return "sweep_delta_hz";
  }
  return "sweep";
}

struct SweepSpec {
  Axis axis = Axis::p_o;
  Grid grid;
  std::optional<Axis> axis2;
  Grid grid2;
  double n_d_o = 0.185; // held for delta_o_const_nd
  bool both_sidebands = false;
};

inline void validate(const SweepSpec& s) {
  validate(s.grid);
  if (s.axis2) {
    validate(s.grid2);
    if (*s.axis2 == s.axis) throw ConfigError("sweep axes must differ");
  }
  if (!(s.n_d_o > 0)) throw ConfigError("held n_d,o must be positive");
}

struct SweepRow {
  std::size_t index = 0;
  double x1 = 0, x2 = std::numeric_limits<double>::quiet_NaN();
  DriveConfig drive;
  double n_d_o = 0;
  double delta = 0; // probe detuning from omega_m, rad/s
  double zeta = NAN, theta = NAN, gain_e = NAN, gain_o = NAN, bandwidth = NAN;
  double n_add_e = NAN, n_add_o = NAN, eta_e = NAN, gamma_m = NAN, t_m = NAN;
  std::string flag = "ok";

  double gain() const { return gain_e * gain_o; }
};

/// One operating point. Without delta the probe sits at omega_m'.
inline SweepRow evaluate_point(const RunConfig& cfg, const DriveConfig& drive,
                               std::optional<double> delta = std::nullopt) {
  const auto op = resolve(cfg, drive);
  const auto& p = op.params;
  SweepRow r;
  r.drive = drive;
  r.n_d_o = intracavity_photons(p, drive, Mode::o);
  r.eta_e = p.eta(Mode::e);
  r.gamma_m = p.gamma_m();
  r.t_m = op.t_m;
  const double w = delta ? p.omega_m + *delta : shifted_mechanical_frequency(p, drive);
  r.delta = w - p.omega_m;
  const auto m = build_matrices(p, drive);
  require_stable(m);
  r.zeta = zeta_of(scattering_at(m, w));
  r.theta = theta(p, drive, w);
  r.gain_e = gain(p, drive, Mode::e);
  r.gain_o = gain(p, drive, Mode::o);
  r.bandwidth = bandwidth(p, drive);
  const auto nb = added_noise_full(p, drive, w, op.baths);
  r.n_add_e = nb.n_add_e;
  r.n_add_o = nb.n_add_o;
  if (op.t_m_clamped) r.flag = "t_m_clamped";
  return r;
}

namespace detail {

inline std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

inline void apply_axis(Axis a, double x, const RunConfig& cfg, double n_d_o, DriveConfig& d,
                       std::optional<double>& delta) {
  switch (a) {
  case Axis::p_e: d.p_e = x; break;
  case Axis::p_o: d.p_o = x; break;
  case Axis::delta_o: d.delta_o = from_hz(x); break;
  case Axis::delta_o_const_nd:
    d.delta_o = from_hz(x);
    d.p_o = power_for_photons(cfg.device, Mode::o, d.delta_o, n_d_o);
    break;
  case Axis::omega: delta = from_hz(x); break;
  }
}

} // namespace detail

/// Point of the sweep at (i, j); failures are returned as flagged rows.
inline SweepRow sweep_point(const RunConfig& cfg, const SweepSpec& spec, double x1, double x2) {
  DriveConfig d = cfg.drive;
  std::optional<double> delta;
  SweepRow r;
  try {
    detail::apply_axis(spec.axis, x1, cfg, spec.n_d_o, d, delta);
    if (spec.axis2) detail::apply_axis(*spec.axis2, x2, cfg, spec.n_d_o, d, delta);
    r = evaluate_point(cfg, d, delta);
  } catch (const InstabilityError& e) {
    r = SweepRow{};
    r.drive = d;
    r.flag = detail::sanitize(std::string("unstable: ") + e.what());
  } catch (const std::exception& e) {
    r = SweepRow{};
    r.drive = d;
    r.flag = detail::sanitize(std::string("error: ") + e.what());
  }
  r.x1 = x1;
  if (spec.axis2) r.x2 = x2;
  return r;
}

/// Rows ordered by sweep index (axis-2 fastest) for any worker count.
inline std::vector<SweepRow> run_sweep(const RunConfig& cfg, const SweepSpec& spec, unsigned workers = 1) {
  validate(spec);
  const auto v1 = spec.grid.values();
  const auto v2 = spec.axis2 ? spec.grid2.values() : std::vector<double>{NAN};
  const std::size_t n = v1.size() * v2.size();
  std::vector<SweepRow> rows(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < n;) {
      rows[k] = sweep_point(cfg, spec, v1[k / v2.size()], v2[k % v2.size()]);
      rows[k].index = k;
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  std::vector<std::jthread> pool;
  for (unsigned i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  pool.clear(); // join before rows leave this scope
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  std::vector<std::string> h{"index", axis_column(spec.axis)};
  if (spec.axis2) h.push_back(axis_column(*spec.axis2));
  for (const char* c : {"p_e_w", "p_o_w", "delta_o_hz", "n_d_o", "delta_hz", "zeta"}) h.emplace_back(c);
  if (spec.both_sidebands) h.emplace_back("zeta_both_sidebands");
  for (const char* c : {"theta", "gain", "gain_e", "gain_o", "gamma_conv_hz", "n_add_e", "n_add_o", "eta_e",
                        "gamma_m_hz", "t_m_k", "flag"})
    h.emplace_back(c);
  CsvWriter w(os, h);
  for (const auto& r : rows) {
    w << static_cast<double>(r.index) << r.x1;
    if (spec.axis2) w << r.x2;
    w << r.drive.p_e << r.drive.p_o << to_hz(r.drive.delta_o) << r.n_d_o << to_hz(r.delta) << r.zeta;
    if (spec.both_sidebands) w << zeta_both_sidebands(r.zeta);
    w << r.theta << r.gain() << r.gain_e << r.gain_o << to_hz(r.bandwidth) << r.n_add_e << r.n_add_o << r.eta_e
      << to_hz(r.gamma_m) << r.t_m << r.flag;
    w.end_row();
  }
}

// ---------------------------------------------------------------- serialization

inline json to_json(const FitResult& f) {
  json j;
  j["parameter"] = f.parameter;
  j["unit"] = f.unit;
  j["estimate"] = f.estimate;
  j["std_error"] = f.std_error;
  j["residual_norm"] = f.residual_norm;
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  j["residual_history"] = f.residual_history;
  json ex = json::object();
  for (auto& [k, v] : f.extras) ex[k] = v;
  j["extras"] = ex;
  j["warnings"] = f.warnings;
  return j;
}

inline FitResult fit_result_from_json(const json& j) {
  FitResult f;
  f.parameter = j.at("parameter").get<std::string>();
  f.unit = j.at("unit").get<std::string>();
  f.estimate = j.at("estimate").get<double>();
  f.std_error = j.at("std_error").get<double>();
  f.residual_norm = j.at("residual_norm").get<double>();
  f.converged = j.at("converged").get<bool>();
  f.iterations = j.at("iterations").get<int>();
  f.residual_history = j.at("residual_history").get<std::vector<double>>();
  for (auto& [k, v] : j.at("extras").items()) f.extras.emplace_back(k, v.get<double>());
  f.warnings = j.at("warnings").get<std::vector<std::string>>();
  return f;
}

inline json to_json(const ModulatorReport& r) {
  return json{{"v_pi_v", r.v_pi},
              {"v_pi_freq_hz", to_hz(r.v_pi_freq)},
              {"p_pi_w", r.p_pi},
              {"e_bit_j", r.e_bit},
              {"e_bit_cyclic_j", r.e_bit_cyclic},
              {"theta31_mag", r.theta31_mag},
              {"v_pi_scenario1_v", r.v_pi_scenario1},
              {"v_pi_scenario2_v", r.v_pi_scenario2},
              {"eta_e", r.eta_e},
              {"gamma_m_hz", to_hz(r.gamma_m)},
              {"coop_e", r.coop_e},
              {"coop_o", r.coop_o},
              {"bandwidth_hz", to_hz(r.bandwidth)},
              {"p_e_w", r.p_e},
              {"p_o_w", r.p_o}};
}

/// Config as nested JSON, values as printed in the INI snapshot.
inline json config_snapshot(const RunConfig& c) {
  namespace pt = boost::property_tree;
  std::istringstream in(to_ini(c));
  pt::ptree tree;
  pt::read_ini(in, tree);
  json j = json::object();
  for (auto& [sec, body] : tree) {
    json s = json::object();
    for (auto& [k, v] : body) s[k] = v.data();
    j[sec] = s;
  }
  return j;
}

// ---------------------------------------------------------------- commands

/// Named output files plus a short human-readable summary.
struct CommandOutput {
  std::vector<std::pair<std::string, std::string>> files; // the first file is the primary table
  std::string summary;
  int exit_code = exit_ok;
};

struct RunRecord {
  json config;
  std::string version = EOTX_VERSION;
  std::string timestamp;
  std::string command;
  std::vector<std::string> arguments;
  std::vector<std::string> outputs;
};

inline std::string utc_timestamp() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline json to_json(const RunRecord& r) {
  return json{{"command", r.command},     {"arguments", r.arguments}, {"version", r.version},
              {"timestamp", r.timestamp}, {"config", r.config},       {"outputs", r.outputs}};
}

inline Grid default_delta_grid() { return {-2000, 2000, 801, false}; }

inline CommandOutput cmd_sparams(const RunConfig& cfg, const Grid& grid, bool dump_matrices = false) {
  validate(grid);
  const auto op = resolve(cfg);
  const auto& p = op.params;
  const auto& d = op.drive;
  const auto m = build_matrices(p, d);
  require_stable(m);
  const double g = gain(p, d, Mode::e) * gain(p, d, Mode::o);
  std::ostringstream os;
  CsvWriter w(os, {"delta_hz", "s_ee_mag2", "s_oo_mag2", "zeta", "theta", "gain"});
  double peak = 0, peak_delta = 0;
  for (double x : grid.values()) {
    const double om = p.omega_m + from_hz(x);
    const auto sm = scattering_at(m, om);
    const double z = zeta_of(sm);
    if (z > peak) peak = z, peak_delta = x;
    w << x << std::norm(sm(out_e, in_e_ext)) << std::norm(sm(out_o, in_o_ext)) << z << theta(p, d, om) << g;
    w.end_row();
  }
  CommandOutput out;
  out.files.emplace_back("sparams.csv", os.str());
  if (dump_matrices) {
    const std::pair<const char*, Eigen::MatrixXcd> mats[] = {{"matrix_a.csv", m.a_mat},
                                                             {"matrix_b.csv", m.b_mat},
                                                             {"matrix_c.csv", m.c_mat},
                                                             {"matrix_d.csv", m.d_mat.cast<cplx>()}};
    for (const auto& [name, mat] : mats) {
      std::ostringstream ms;
      write_matrix_csv(ms, mat);
      out.files.emplace_back(name, ms.str());
    }
  }
  std::ostringstream sum;
  sum.precision(6);
  sum << "peak zeta " << peak << " at delta " << peak_delta << " Hz; gain " << g
      << "; gamma_conv " << to_hz(bandwidth(p, d)) << " Hz\n";
  out.summary = sum.str();
  return out;
}

inline CommandOutput cmd_sweep(const RunConfig& cfg, const SweepSpec& spec, unsigned workers = 1) {
  const auto rows = run_sweep(cfg, spec, workers);
  std::ostringstream os;
  write_sweep_csv(os, spec, rows);
  CommandOutput out;
  out.files.emplace_back("sweep.csv", os.str());
  std::size_t failed = 0, best = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!std::isfinite(rows[i].zeta)) ++failed;
    else if (!std::isfinite(rows[best].zeta) || rows[i].zeta > rows[best].zeta) best = i;
  }
  std::ostringstream sum;
  sum.precision(6);
  sum << rows.size() << " points, " << failed << " failed";
  if (std::isfinite(rows[best].zeta)) sum << "; max zeta " << rows[best].zeta << " at index " << best;
  sum << '\n';
  out.summary = sum.str();
  return out;
}

inline CommandOutput cmd_noise(const RunConfig& cfg, const Grid& grid) {
  validate(grid);
  const auto op = resolve(cfg);
  const auto& p = op.params;
  require_stable(build_matrices(p, op.drive));
  std::vector<double> om;
  for (double x : grid.values()) om.push_back(p.omega_m + from_hz(x));
  const auto pts = output_spectrum(p, op.drive, om, op.baths, cfg.chain);
  std::ostringstream os;
  CsvWriter w(os, {"delta_hz", "e_background", "e_resonator", "e_mechanical", "e_total", "o_background",
                   "o_resonator", "o_mechanical", "o_total"});
  for (auto& s : pts) {
    w << to_hz(s.omega - p.omega_m) << s.e.background << s.e.resonator << s.e.transducer << s.e.total()
      << s.o.background << s.o.resonator << s.o.transducer << s.o.total();
    w.end_row();
  }
  const double wp = shifted_mechanical_frequency(p, op.drive);
  const auto nb = added_noise_full(p, op.drive, wp, op.baths);
  const auto vac = added_noise_vacuum(p, op.drive, wp);
  std::ostringstream sum;
  sum.precision(6);
  sum << "T_m " << op.t_m << " K (n_m " << op.baths.n_m << ")" << (op.t_m_clamped ? " clamped" : "")
      << "; at omega_m': n_add_e " << nb.n_add_e << ", n_add_o " << nb.n_add_o << "; vacuum e "
      << vac.e << ", o " << vac.o << '\n';
  CommandOutput out;
  out.files.emplace_back("noise.csv", os.str());
  out.summary = sum.str();
  return out;
}

/// Device and drive used by cmd_fom after the [fom] overrides.
inline std::pair<DeviceParams, DriveConfig> fom_operating_point(const RunConfig& cfg) {
  const auto op = resolve(cfg);
  DeviceParams p = op.params;
  DriveConfig d = op.drive;
  if (cfg.fom.eta_e) p = with_eta_e(p, *cfg.fom.eta_e);
  if (cfg.fom.match_coop_e) {
    if (!(cfg.fom.coop_e > 0)) throw ConfigError("fom.coop_e must be positive");
    d.p_e = power_for_coop_e(p, d, cfg.fom.coop_e);
  }
  return {p, d};
}

inline CommandOutput cmd_fom(const RunConfig& cfg) {
  const auto [p, d] = fom_operating_point(cfg);
  require_stable(build_matrices(p, d));
  const auto r = modulator_report(p, d);
  CommandOutput out;
  out.files.emplace_back("report.txt", to_kv(r));
  out.files.emplace_back("report.json", to_json(r).dump(2) + "\n");
  std::ostringstream sum;
  sum.precision(4);
  sum << "V_pi = " << r.v_pi * 1e6 << " uV, E_bit = " << r.e_bit * 1e15 << " fJ (" << r.e_bit_cyclic * 1e15
      << " fJ cyclic)\n";
  out.summary = sum.str();
  return out;
}

// ---------------------------------------------------------------- calibration

enum class CalibKind { g0e, g0o, gamma_m, bath, setup_mw, qe };

inline CalibKind parse_calib_kind(const std::string& s) {
  if (s == "g0e") return CalibKind::g0e;
  if (s == "g0o") return CalibKind::g0o;
  if (s == "gamma-m") return CalibKind::gamma_m;
  if (s == "bath") return CalibKind::bath;
  if (s == "setup-mw") return CalibKind::setup_mw;
  if (s == "qe") return CalibKind::qe;
  throw ConfigError("unknown calibration '" + s + "' (g0e, g0o, gamma-m, bath, setup-mw, qe)");
}

struct CalibrateOptions {
  CalibKind kind = CalibKind::g0e;
  std::vector<std::string> inputs;    // spectra (g0e, g0o, gamma-m) or e-port spectra (bath)
  std::vector<double> temperatures;   // K, one per input (g0e, g0o)
  std::vector<std::string> inputs_o;  // o-port spectra (bath)
  bool synthetic = false;
  double noise = 0;                   // relative, synthetic only
  std::uint64_t seed = 1;
  bool include_below_threshold = false;
  // setup-mw
  std::optional<double> background, n_d_e, reflected_power_w;
};

/// Weak microwave drive for the g0_e calibration: optical pump off, C_e = 0.01.
inline std::pair<DeviceParams, DriveConfig> g0e_calibration_point(const RunConfig& cfg) {
  DriveConfig d = cfg.drive;
  d.p_o = 0;
  d.p_e = 0;
  const auto op = resolve(cfg, d);
  d.p_e = power_for_coop_e(op.params, d, 0.01);
  return {op.params, d};
}

/// Weak optical drive for the g0_o calibration: microwave pump off, 80 pW.
inline DriveConfig g0o_calibration_drive(const RunConfig& cfg) {
  DriveConfig d = cfg.drive;
  d.p_e = 0;
  d.p_o = 80e-12;
  return d;
}

inline std::vector<double> span_grid(double centre, double half, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = centre - half + 2 * half * i / (n - 1);
  return v;
}

namespace detail {

inline std::string spectrum_csv(const SyntheticSpectrum& s) {
  std::ostringstream os;
  write_spectrum(os, s);
  return os.str();
}

inline std::string temperature_tag(double t) {
  std::ostringstream os;
  os << std::lround(t * 1000) << "mK";
  return os.str();
}

inline std::vector<SyntheticSpectrum> load_inputs(const std::vector<std::string>& paths,
                                                  const std::vector<double>& temps) {
  if (paths.empty()) throw ConfigError("no input spectra (use --input or --synthetic)");
  if (!temps.empty() && temps.size() != paths.size())
    throw ConfigError("need one --temperature per --input");
  std::vector<SyntheticSpectrum> out;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    out.push_back(read_spectrum_file(paths[i]));
    if (!temps.empty()) out.back().temperature = temps[i];
  }
  return out;
}

inline json coupling_json(const CouplingFit& c) {
  json j = to_json(c.combined);
  json per = json::array();
  for (auto& f : c.per_spectrum) per.push_back(to_json(f));
  j["per_spectrum"] = per;
  return j;
}

} // namespace detail

inline CommandOutput cmd_calibrate(const RunConfig& cfg, const CalibrateOptions& o) {
  CommandOutput out;
  json report;
  bool converged = true;
  const SpectrumNoise noise{o.noise, o.seed};
  if (o.noise < 0) throw ConfigError("noise must be >= 0");

  switch (o.kind) {
  case CalibKind::g0e: {
    const auto [p, d] = g0e_calibration_point(cfg);
    std::vector<SyntheticSpectrum> spectra;
    if (o.synthetic) {
      const auto grid = span_grid(p.omega_m, 20 * p.gamma_m(), 401);
      std::uint64_t k = 0;
      for (double t : {0.1, 0.15, 0.2, 0.3, 0.4}) {
        auto s = synth_mw_thermal_spectrum(p, d, bose_occupancy(t, p.omega_m), cfg.setup, grid,
                                           {o.noise, o.seed + k++});
        s.temperature = t;
        out.files.emplace_back("g0e_" + detail::temperature_tag(t) + ".csv", detail::spectrum_csv(s));
        spectra.push_back(std::move(s));
      }
    } else {
      if (o.temperatures.empty()) throw ConfigError("g0e needs --temperature for each input");
      spectra = detail::load_inputs(o.inputs, o.temperatures);
    }
    const auto fit = fit_g0e(spectra, p, d, {thermalization_threshold, o.include_below_threshold});
    report = detail::coupling_json(fit);
    converged = fit.combined.converged;
    break;
  }
  case CalibKind::g0o: {
    const auto d = g0o_calibration_drive(cfg);
    const OpticalThermalTrend trend;
    std::vector<SyntheticSpectrum> spectra;
    if (o.synthetic) {
      const auto grid = span_grid(cfg.device.omega_m, from_hz(8e3), 801);
      std::uint64_t k = 0;
      for (double t : {0.2, 0.3, 0.45, 0.565, 0.621}) {
        auto s = synth_opt_thermal_spectrum(cfg.device, d, t, cfg.setup, cfg.heating, trend, grid,
                                            {o.noise, o.seed + k++});
        out.files.emplace_back("g0o_" + detail::temperature_tag(t) + ".csv", detail::spectrum_csv(s));
        spectra.push_back(std::move(s));
      }
    } else {
      if (o.temperatures.empty()) throw ConfigError("g0o needs --temperature for each input");
      spectra = detail::load_inputs(o.inputs, o.temperatures);
    }
    const auto fit = fit_g0o(spectra, cfg.device, d, cfg.heating, trend,
                             {optical_thermalization_threshold, o.include_below_threshold});
    report = detail::coupling_json(fit);
    converged = fit.combined.converged;
    break;
  }
  case CalibKind::gamma_m: {
    const auto op = resolve(cfg);
    std::vector<SyntheticSpectrum> curves;
    if (o.synthetic) {
      const double wc = shifted_mechanical_frequency(op.params, op.drive);
      auto s = synth_zeta_curve(op.params, op.drive, span_grid(wc, 10 * bandwidth(op.params, op.drive), 401), noise);
      out.files.emplace_back("zeta_curve.csv", detail::spectrum_csv(s));
      curves.push_back(std::move(s));
    } else {
      curves = detail::load_inputs(o.inputs, {});
    }
    const auto fit = fit_gamma_m(curves, op.params, op.drive);
    report = to_json(fit);
    converged = fit.converged;
    break;
  }
  case CalibKind::bath: {
    const auto op = resolve(cfg);
    PortSpectra data;
    if (o.synthetic) {
      const double wc = shifted_mechanical_frequency(op.params, op.drive);
      data = synth_noise_spectra(op.params, op.drive, op.baths.n_m, cfg.chain,
                                 span_grid(wc, 10 * bandwidth(op.params, op.drive), 401), noise);
      out.files.emplace_back("noise_e.csv", detail::spectrum_csv(data.e.front()));
      out.files.emplace_back("noise_o.csv", detail::spectrum_csv(data.o.front()));
    } else {
      if (o.inputs.empty() && o.inputs_o.empty()) throw ConfigError("bath needs --input and/or --input-o");
      if (!o.inputs.empty()) data.e = detail::load_inputs(o.inputs, {});
      if (!o.inputs_o.empty()) data.o = detail::load_inputs(o.inputs_o, {});
    }
    const auto fit = fit_bath_temperature(data, op.params, op.drive, cfg.chain,
                                          {!data.e.empty(), !data.o.empty()});
    report = to_json(fit);
    converged = fit.converged;
    break;
  }
  case CalibKind::setup_mw: {
    const auto op = resolve(cfg);
    const auto& p = op.params;
    const double n_d = o.n_d_e ? *o.n_d_e : intracavity_photons(p, op.drive, Mode::e);
    double bg, pr;
    if (o.synthetic) {
      bg = mw_background(p, op.drive.delta_e, n_d, cfg.setup.n_add_setup_e);
      pr = mw_raw_background(p, cfg.setup.gain_setup_e, cfg.setup.n_add_setup_e) / bg;
    } else {
      if (!o.background || !o.reflected_power_w)
        throw ConfigError("setup-mw needs --background and --reflected-power (or --synthetic)");
      bg = *o.background;
      pr = *o.reflected_power_w;
    }
    const auto r = extract_setup_mw(bg, n_d, p, op.drive.delta_e, pr);
    FitResult f;
    f.parameter = "n_add_setup_e";
    f.unit = "quanta";
    f.estimate = r.n_add_setup_e;
    f.converged = true;
    f.extras = {{"gain_setup_e_db", r.gain_setup_e}, {"background", bg}, {"n_d_e", n_d},
                {"reflected_power_w", pr}};
    report = to_json(f);
    break;
  }
  case CalibKind::qe: {
    FitResult f;
    f.parameter = "eta_qe";
    f.unit = "";
    f.estimate = eta_qe_from_added_noise(cfg.setup.n_add_setup_o);
    f.converged = true;
    f.extras = {{"n_add_setup_o", cfg.setup.n_add_setup_o},
                {"configured_eta_qe", cfg.setup.eta_qe},
                {"n_add_from_configured_eta_qe", quantum_efficiency_model(cfg.setup.eta_qe)},
                {"consistent", consistent(cfg.setup) ? 1.0 : 0.0}};
    if (!consistent(cfg.setup)) f.warnings.emplace_back("configured eta_qe and n_add_setup_o disagree");
    report = to_json(f);
    break;
  }
  }
  out.files.insert(out.files.begin(), {"fit.json", report.dump(2) + "\n"});
  std::ostringstream sum;
  sum.precision(8);
  sum << report["parameter"].get<std::string>() << " = " << report["estimate"].get<double>() << " +- "
      << report["std_error"].get<double>() << ' ' << report["unit"].get<std::string>()
      << (converged ? "" : " (not converged)") << '\n';
  out.summary = sum.str();
  out.exit_code = converged ? exit_ok : exit_fit;
  return out;
}

// ---------------------------------------------------------------- output

/// Writes every file plus run.json into dir; returns the record.
inline RunRecord write_outputs(const std::filesystem::path& dir, const CommandOutput& out, RunRecord rec) {
  std::filesystem::create_directories(dir);
  for (auto& [name, body] : out.files) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << body;
    rec.outputs.push_back(name);
  }
  rec.outputs.emplace_back("run.json");
  std::ofstream f(dir / "run.json", std::ios::binary);
  f << to_json(rec).dump(2) << '\n';
  return rec;
}

} // namespace eotx
