#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "eotx/calib.hpp"
#include "eotx/noise.hpp"
#include "eotx/params.hpp"

namespace eotx {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Modulator evaluation overrides.
struct FomOptions {
  std::optional<double> eta_e;
  bool match_coop_e = false;
  double coop_e = 1.0;
};

struct RunConfig {
  DeviceParams device;
  DriveConfig drive;
  HeatingModel heating;
  /// If set, gamma_m is chosen so that Gamma_e(omega_m) + gamma_m equals this (rad/s).
  std::optional<double> target_bandwidth;
  MeasurementChain chain;
  BathOccupancies baths;           // n_m is replaced by the heated value unless n_m_override
  std::optional<double> n_m_override;
  FomOptions fom;
  SetupModel setup;
};

/// Device and baths at one drive after heating and bandwidth targeting.
struct OperatingPoint {
  DeviceParams params;
  DriveConfig drive;
  BathOccupancies baths;
  double t_m = 0;
  bool t_m_clamped = false;
};

inline OperatingPoint resolve(const RunConfig& cfg, const DriveConfig& drive) {
  validate(cfg.device);
  validate(drive);
  validate(cfg.heating);
  const auto h = apply_heating(cfg.heating, drive, cfg.device);
  OperatingPoint op{h.params, drive, cfg.baths, h.t_m, h.t_m_clamped};
  if (cfg.target_bandwidth) {
    const double gm = *cfg.target_bandwidth - derive(op.params, drive).gamma_opt_e;
    if (!(gm > 0)) throw DomainError("target bandwidth below the electromechanical damping rate");
    op.params.gamma_m0 = gm;
  }
  op.baths.n_m = cfg.n_m_override ? *cfg.n_m_override : bose_occupancy(op.t_m, op.params.omega_m);
  return op;
}

inline OperatingPoint resolve(const RunConfig& cfg) { return resolve(cfg, cfg.drive); }

namespace detail {

inline double parse_double(const std::string& s, const std::string& key) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not a number: '" + s + "'");
  }
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos != s.size() || !std::isfinite(v))
    throw ConfigError("config key " + key + ": not a finite number: '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config key " + key + ": expected a boolean, got '" + s + "'");
}

/// "p_w:value, p_w:value, ..." with value in Hz.
inline std::vector<Anchor> parse_anchors(const std::string& s, const std::string& key) {
  std::vector<Anchor> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("config key " + key + ": anchor '" + item + "' is not power:value");
    out.push_back({parse_double(item.substr(0, colon), key),
                   from_hz(parse_double(item.substr(colon + 1), key))});
  }
  if (out.empty()) throw ConfigError("config key " + key + ": no anchors");
  return out;
}

inline std::string format_anchors(const std::vector<Anchor>& a) {
  std::ostringstream os;
  os.precision(12);
  for (std::size_t i = 0; i < a.size(); ++i) os << (i ? ", " : "") << a[i].p << ':' << to_hz(a[i].value);
  return os.str();
}

} // namespace detail

inline RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig c;
  using detail::parse_double;
  using detail::parse_bool;
  auto hz = [](double& field) { return [&field](const std::string& s, const std::string& k) { field = from_hz(parse_double(s, k)); }; };
  auto raw = [](double& field) { return [&field](const std::string& s, const std::string& k) { field = parse_double(s, k); }; };
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, std::map<std::string, Setter>> keys{
      {"device",
       {{"omega_e_hz", hz(c.device.omega_e)},
        {"omega_o_hz", hz(c.device.omega_o)},
        {"omega_m_hz", hz(c.device.omega_m)},
        {"kappa_in_e_hz", hz(c.device.kappa_in_e)},
        {"kappa_ex_e_hz", hz(c.device.kappa_ex_e)},
        {"kappa_in_o_hz", hz(c.device.kappa_in_o)},
        {"kappa_ex_o_hz", hz(c.device.kappa_ex_o)},
        {"gamma_m0_hz", hz(c.device.gamma_m0)},
        {"g0_e_hz", hz(c.device.g0_e)},
        {"g0_o_hz", hz(c.device.g0_o)},
        {"z_e_ohm", raw(c.device.z_e)}}},
      {"drive",
       {{"p_e_w", raw(c.drive.p_e)},
        {"p_o_w", raw(c.drive.p_o)},
        {"delta_e_hz", hz(c.drive.delta_e)},
        {"delta_o_hz", hz(c.drive.delta_o)}}},
      {"heating",
       {{"enabled", [&](const std::string& s, const std::string& k) { c.heating.enabled = parse_bool(s, k); }},
        {"gamma_m_anchors_w_hz", [&](const std::string& s, const std::string& k) { c.heating.gamma_m_vs_p_o = detail::parse_anchors(s, k); }},
        {"kappa_in_e_anchors_w_hz", [&](const std::string& s, const std::string& k) { c.heating.kappa_in_e_vs_p_o = detail::parse_anchors(s, k); }},
        {"gamma_m_per_p_e_hz_per_w", hz(c.heating.gamma_m_per_p_e)},
        {"t_m_log_a_k", raw(c.heating.t_m_a)},
        {"t_m_log_b_k", raw(c.heating.t_m_b)},
        {"t_floor_k", raw(c.heating.t_floor)},
        {"target_bandwidth_hz", [&](const std::string& s, const std::string& k) { c.target_bandwidth = from_hz(parse_double(s, k)); }}}},
      {"noise",
       {{"n_add_setup_e", raw(c.chain.n_add_setup_e)},
        {"n_add_setup_o", raw(c.chain.n_add_setup_o)},
        {"resonator_noise", [&](const std::string& s, const std::string& k) { c.chain.resonator_noise = parse_bool(s, k); }},
        {"resonator_noise_per_w", raw(c.chain.resonator_noise_per_w)},
        {"n_ext_e", raw(c.baths.n_ext_e)},
        {"n_int_e", raw(c.baths.n_int_e)},
        {"n_ext_o", raw(c.baths.n_ext_o)},
        {"n_int_o", raw(c.baths.n_int_o)},
        {"n_m", [&](const std::string& s, const std::string& k) { c.n_m_override = parse_double(s, k); }}}},
      {"fom",
       {{"eta_e", [&](const std::string& s, const std::string& k) { c.fom.eta_e = parse_double(s, k); }},
        {"match_coop_e", [&](const std::string& s, const std::string& k) { c.fom.match_coop_e = parse_bool(s, k); }},
        {"coop_e", raw(c.fom.coop_e)}}},
      {"setup",
       {{"gain_setup_e_db", raw(c.setup.gain_setup_e)},
        {"gain_setup_o_db", raw(c.setup.gain_setup_o)},
        {"eta_qe", raw(c.setup.eta_qe)},
        {"attenuation_in_e_db", raw(c.setup.attenuation_in_e)}}}};

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config key '" + section + "' outside a section");
    auto sec = keys.find(section);
    if (sec == keys.end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, node] : body) {
      auto it = sec->second.find(key);
      if (it == sec->second.end()) throw ConfigError("unknown config key " + section + "." + key);
      it->second(node.data(), section + "." + key);
    }
  }
  // The detection chain and the setup model share the added-noise numbers.
  c.setup.n_add_setup_e = c.chain.n_add_setup_e;
  c.setup.n_add_setup_o = c.chain.n_add_setup_o;
  try {
    validate(c.device);
    validate(c.drive);
    validate(c.heating);
    validate(c.baths);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (c.n_m_override && *c.n_m_override < 0) throw ConfigError("noise.n_m must be >= 0");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

/// Full config in the INI dialect accepted by parse_config.
inline std::string to_ini(const RunConfig& c) {
  std::ostringstream os;
  os.precision(12);
  const auto& d = c.device;
  os << "[device]\n"
     << "omega_e_hz = " << to_hz(d.omega_e) << "\nomega_o_hz = " << to_hz(d.omega_o)
     << "\nomega_m_hz = " << to_hz(d.omega_m) << "\nkappa_in_e_hz = " << to_hz(d.kappa_in_e)
     << "\nkappa_ex_e_hz = " << to_hz(d.kappa_ex_e) << "\nkappa_in_o_hz = " << to_hz(d.kappa_in_o)
     << "\nkappa_ex_o_hz = " << to_hz(d.kappa_ex_o) << "\ngamma_m0_hz = " << to_hz(d.gamma_m0)
     << "\ng0_e_hz = " << to_hz(d.g0_e) << "\ng0_o_hz = " << to_hz(d.g0_o) << "\nz_e_ohm = " << d.z_e
     << "\n\n[drive]\n"
     << "p_e_w = " << c.drive.p_e << "\np_o_w = " << c.drive.p_o
     << "\ndelta_e_hz = " << to_hz(c.drive.delta_e) << "\ndelta_o_hz = " << to_hz(c.drive.delta_o)
     << "\n\n[heating]\n"
     << "enabled = " << (c.heating.enabled ? "true" : "false")
     << "\ngamma_m_anchors_w_hz = " << detail::format_anchors(c.heating.gamma_m_vs_p_o)
     << "\nkappa_in_e_anchors_w_hz = " << detail::format_anchors(c.heating.kappa_in_e_vs_p_o)
     << "\ngamma_m_per_p_e_hz_per_w = " << to_hz(c.heating.gamma_m_per_p_e)
     << "\nt_m_log_a_k = " << c.heating.t_m_a << "\nt_m_log_b_k = " << c.heating.t_m_b
     << "\nt_floor_k = " << c.heating.t_floor << '\n';
  if (c.target_bandwidth) os << "target_bandwidth_hz = " << to_hz(*c.target_bandwidth) << '\n';
  os << "\n[noise]\n"
     << "n_add_setup_e = " << c.chain.n_add_setup_e << "\nn_add_setup_o = " << c.chain.n_add_setup_o
     << "\nresonator_noise = " << (c.chain.resonator_noise ? "true" : "false")
     << "\nresonator_noise_per_w = " << c.chain.resonator_noise_per_w
     << "\nn_ext_e = " << c.baths.n_ext_e << "\nn_int_e = " << c.baths.n_int_e
     << "\nn_ext_o = " << c.baths.n_ext_o << "\nn_int_o = " << c.baths.n_int_o << '\n';
  if (c.n_m_override) os << "n_m = " << *c.n_m_override << '\n';
  os << "\n[fom]\n";
  if (c.fom.eta_e) os << "eta_e = " << *c.fom.eta_e << '\n';
  os << "match_coop_e = " << (c.fom.match_coop_e ? "true" : "false") << "\ncoop_e = " << c.fom.coop_e
     << "\n\n[setup]\n"
     << "gain_setup_e_db = " << c.setup.gain_setup_e << "\ngain_setup_o_db = " << c.setup.gain_setup_o
     << "\neta_qe = " << c.setup.eta_qe << "\nattenuation_in_e_db = " << c.setup.attenuation_in_e << '\n';
  return os.str();
}

} // namespace eotx
