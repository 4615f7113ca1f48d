#pragma once

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eotx/commands.hpp"

namespace eotx::cli {

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Electro-optomechanical transducer model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", EOTX_VERSION);

  std::string config_path, out_dir, grid_s;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  auto common = [&](CLI::App* c, bool grid) {
    c->add_option("--config", config_path, "INI config file ([device], [drive], [heating], ...)");
    c->add_option("--out", out_dir, "output directory; without it the primary table goes to stdout");
    c->add_option("--seed", seed, "seed of synthetic noise");
    if (grid) c->add_option("--grid", grid_s, "start:stop:points[:log], Hz or W");
  };

  auto* sp = app.add_subcommand("sparams", "reflection and conversion spectra around omega_m");
  common(sp, true);
  bool dump = false;
  sp->add_flag("--dump-matrices", dump, "also write A, B, C, D as CSV");

  auto* sw = app.add_subcommand("sweep", "operating-point sweep over drive parameters");
  common(sw, true);
  std::string axis_s = "p_o", axis2_s, grid2_s;
  double nd_o = 0.185;
  bool both = false;
  sw->add_option("--axis", axis_s, "p_e | p_o | delta_o | delta_o_const_nd | omega");
  sw->add_option("--axis2", axis2_s, "optional second axis");
  sw->add_option("--grid2", grid2_s, "grid of the second axis");
  sw->add_option("--nd-o", nd_o, "n_d,o held by delta_o_const_nd");
  sw->add_flag("--both-sidebands", both, "add the sqrt(2) double-sideband column");
  sw->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

  auto* no = app.add_subcommand("noise", "layered output noise spectra of both ports");
  common(no, true);

  auto* fo = app.add_subcommand("fom", "classical modulator figures of merit");
  common(fo, false);

  auto* ca = app.add_subcommand("calibrate", "calibration fits on CSV or synthetic spectra");
  common(ca, false);
  CalibrateOptions co;
  std::string kind_s;
  double bg = -1, nd_e_arg = -1, pr = -1;
  ca->add_option("kind", kind_s, "g0e | g0o | gamma-m | bath | setup-mw | qe")->required();
  ca->add_option("--input", co.inputs, "spectrum CSV (omega_hz,value,sigma); e port for bath");
  ca->add_option("--input-o", co.inputs_o, "o-port spectrum CSV for bath");
  ca->add_option("--temperature", co.temperatures, "fridge temperature per input, K");
  ca->add_flag("--synthetic", co.synthetic, "generate spectra from the config and fit them");
  ca->add_option("--noise", co.noise, "relative noise of synthetic spectra");
  ca->add_flag("--include-unthermalized", co.include_below_threshold,
               "keep spectra below the thermalization threshold");
  ca->add_option("--background", bg, "setup-mw: normalized background");
  ca->add_option("--n-d-e", nd_e_arg, "setup-mw: intracavity microwave photons");
  ca->add_option("--reflected-power", pr, "setup-mw: reflected pump power, W");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    CommandOutput res;
    std::string name;
    auto grid_or = [&](Grid def) { return grid_s.empty() ? def : parse_grid(grid_s); };
    if (*sp) {
      name = "sparams";
      res = cmd_sparams(cfg, grid_or(default_delta_grid()), dump);
    } else if (*sw) {
      name = "sweep";
      if (grid_s.empty()) throw ConfigError("sweep needs --grid");
      SweepSpec spec;
      spec.axis = parse_axis(axis_s);
      spec.grid = parse_grid(grid_s);
      if (!axis2_s.empty()) {
        spec.axis2 = parse_axis(axis2_s);
        if (grid2_s.empty()) throw ConfigError("--axis2 needs --grid2");
        spec.grid2 = parse_grid(grid2_s);
      }
      spec.n_d_o = nd_o;
      spec.both_sidebands = both;
      res = cmd_sweep(cfg, spec, workers);
    } else if (*no) {
      name = "noise";
      res = cmd_noise(cfg, grid_or(default_delta_grid()));
    } else if (*fo) {
      name = "fom";
      res = cmd_fom(cfg);
    } else {
      name = "calibrate";
      co.kind = parse_calib_kind(kind_s);
      co.seed = seed;
      if (bg >= 0) co.background = bg;
      if (nd_e_arg >= 0) co.n_d_e = nd_e_arg;
      if (pr >= 0) co.reflected_power_w = pr;
      res = cmd_calibrate(cfg, co);
    }

    if (out_dir.empty()) {
      out << res.files.front().second;
      err << res.summary;
    } else {
      RunRecord rec;
      rec.config = config_snapshot(cfg);
      rec.timestamp = utc_timestamp();
      rec.command = name;
      rec.arguments = args;
      write_outputs(out_dir, res, rec);
      out << res.summary;
    }
    return res.exit_code;
  } catch (const InstabilityError& e) {
    err << "error: " << e.what() << " (eigenvalue " << e.eigenvalue.real() << (e.eigenvalue.imag() < 0 ? "" : "+")
        << e.eigenvalue.imag() << "i rad/s)\n";
    return exit_instability;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return exit_config;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

} // namespace eotx::cli
