// Copyright 2026 The polcam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line experiment runner: scene generation, measurement simulation,
// reconstruction, and the parameter sweeps, driven by a JSON config with
// recorded seeds.  Exit codes: 0 success, 2 config error, 3 numerical
// failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polcam/experiment.hpp"
#include "polcam/io.hpp"
#include "polcam/version.hpp"

namespace fs = std::filesystem;
using polcam::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  bool paper_scale = false;
  bool force = false;
};

struct CliContext {
  polcam::ExperimentSpec spec;  // resolved seeds, scale-adjusted
  json raw;                     // config file as given
};

// Loads the config and applies flag overrides plus the scale policy: desk
// scale (L = 5000, stop_eps 1e-7, 10 realizations) unless --paper-scale
// selects the full budgets (L = 20000, stop_eps 1e-9, 30 realizations).
// Values given explicitly in the config always win.
CliContext load_context(const CommonOpts& opt) {
  json raw = opt.config_path.empty() ? json::object() : polcam::load_json(opt.config_path);
  polcam::ExperimentSpec spec = polcam::experiment_from_json(raw);
  if (opt.seed != 0) spec.master_seed = opt.seed;
  if (!opt.out_dir.empty()) spec.output_dir = opt.out_dir;
  json cfgj = json::object();
  if (raw.contains("solver") && raw["solver"].contains("config")) cfgj = raw["solver"]["config"];
  const bool has_iters = cfgj.contains("max_iters");
  const bool has_eps = cfgj.contains("stop_eps");
  const bool has_reals = raw.contains("sweep") && raw["sweep"].contains("realizations");
  if (opt.paper_scale) {
    if (!has_iters) spec.solver.config.max_iters = 20000;
    if (!has_eps) spec.solver.config.stop_eps = 1e-9;
    if (!has_reals) spec.sweep.realizations = 30;
  } else {
    if (!has_iters) spec.solver.config.max_iters = 5000;
    if (!has_eps) spec.solver.config.stop_eps = 1e-7;
  }
  spec = spec.resolved();
  spec.validate();
  return {std::move(spec), std::move(raw)};
}

json base_manifest(const std::string& command, const polcam::ExperimentSpec& spec) {
  json m;
  m["version"] = polcam::kVersion;
  m["command"] = command;
  m["config"] = polcam::to_json(spec);
  return m;
}

void write_manifest(const fs::path& dir, const json& m) {
  polcam::save_json(dir / "manifest.json", m);
}

// A completed output is reusable when its manifest echoes the same command
// and fully resolved config.
bool up_to_date(const fs::path& dir, const std::string& command,
                const polcam::ExperimentSpec& spec, const std::string& csv_name) {
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath) || !fs::exists(dir / csv_name)) return false;
  try {
    const json m = polcam::load_json(mpath);
    return m.value("command", "") == command && m.value("status", "") == "ok" &&
           m.contains("config") && m["config"] == polcam::to_json(spec);
  } catch (const polcam::ConfigError&) {
    return false;
  }
}

std::string fd(double v) { return polcam::format_double(v); }

// Per-sample CSV of a polarimetric signal (works for 1D and flattened 2D).
void write_signal_csv(const fs::path& path, const polcam::PolarimetricSignal& sig) {
  const std::vector<double> osc = polcam::osc_map(sig, polcam::default_osc_floor(sig));
  polcam::Csv csv;
  csv.header = {"index", "x_s", "x_p", "x_t", "osc"};
  csv.rows.reserve(sig.size());
  for (std::size_t i = 0; i < sig.size(); ++i) {
    csv.rows.push_back({std::to_string(i), fd(sig.x_s[i]), fd(sig.x_p[i]),
                        fd(sig.x_s[i] + sig.x_p[i]), fd(osc[i])});
  }
  polcam::write_csv(path, csv);
}

// 16-bit PGM views of a 2D signal: components and intensity on [0, max],
// OSC on the fixed [-1, 1] scale.
void write_signal_pgms(const fs::path& dir, const std::string& prefix,
                       const polcam::PolarimetricSignal& sig) {
  if (!sig.is_2d()) return;
  double peak = 0.0;
  for (std::size_t i = 0; i < sig.size(); ++i)
    peak = std::max(peak, sig.x_s[i] + sig.x_p[i]);
  if (peak <= 0.0) peak = 1.0;
  std::vector<double> xt(sig.size());
  for (std::size_t i = 0; i < sig.size(); ++i) xt[i] = sig.x_s[i] + sig.x_p[i];
  const auto h = sig.height, w = sig.width;
  polcam::write_pgm16(dir / (prefix + "_xs.pgm"), sig.x_s, h, w, 0.0, peak);
  polcam::write_pgm16(dir / (prefix + "_xp.pgm"), sig.x_p, h, w, 0.0, peak);
  polcam::write_pgm16(dir / (prefix + "_xt.pgm"), xt, h, w, 0.0, peak);
  polcam::write_pgm16(dir / (prefix + "_osc.pgm"),
                      polcam::osc_map(sig, polcam::default_osc_floor(sig)), h, w, -1.0, 1.0);
}

int cmd_scene(const CommonOpts& opt) {
  const CliContext ctx = load_context(opt);
  const fs::path dir = ctx.spec.output_dir;
  fs::create_directories(dir);
  const polcam::PolarimetricSignal sig = polcam::make_scene(ctx.spec.scene);
  write_signal_csv(dir / "scene.csv", sig);
  write_signal_pgms(dir, "scene", sig);
  json m = base_manifest("scene", ctx.spec);
  m["status"] = "ok";
  m["outputs"] = {"scene.csv"};
  write_manifest(dir, m);
  std::cout << "scene: " << sig.size() << " samples -> " << (dir / "scene.csv").string() << "\n";
  return 0;
}

int cmd_fresnel(const CommonOpts& opt, double theta_min, double theta_max, double theta_step,
                double wl_min, double wl_max, double wl_step) {
  const CliContext ctx = load_context(opt);
  const fs::path dir = ctx.spec.output_dir;
  fs::create_directories(dir);
  if (theta_step <= 0.0 || wl_step <= 0.0)
    throw polcam::ConfigError("fresnel: steps must be positive");
  std::vector<double> thetas, wls;
  for (double t = theta_min; t <= theta_max + 1e-9; t += theta_step) thetas.push_back(t);
  for (double w = wl_min; w <= wl_max + 1e-9; w += wl_step) wls.push_back(w);
  const auto rows =
      polcam::fresnel_table(thetas, wls, ctx.spec.optics.t1_deg, ctx.spec.optics.t2_deg);
  polcam::Csv csv;
  csv.header = {"theta_deg", "wavelength_nm", "r1s", "r1p", "r2s", "r2p", "kappa_a"};
  for (const auto& r : rows)
    csv.rows.push_back({fd(r.theta_deg), fd(r.wavelength_nm), fd(r.r1s), fd(r.r1p), fd(r.r2s),
                        fd(r.r2p), fd(r.kappa_a)});
  polcam::write_csv(dir / "fresnel.csv", csv);
  json m = base_manifest("fresnel", ctx.spec);
  m["grid"] = {{"theta_min", theta_min}, {"theta_max", theta_max}, {"theta_step", theta_step},
               {"wavelength_min", wl_min}, {"wavelength_max", wl_max}, {"wavelength_step", wl_step}};
  m["status"] = "ok";
  m["outputs"] = {"fresnel.csv"};
  write_manifest(dir, m);
  std::cout << "fresnel: " << rows.size() << " rows -> " << (dir / "fresnel.csv").string() << "\n";
  if (rows.size() == 1)
    std::cout << "kappa(A) = " << fd(rows[0].kappa_a) << "\n";
  return 0;
}

int cmd_run(const CommonOpts& opt) {
  std::string stage = "config";
  fs::path dir;
  try {
    const CliContext ctx = load_context(opt);
    dir = ctx.spec.output_dir;
    fs::create_directories(dir);

    stage = "scene";
    const polcam::PolarimetricSignal truth = polcam::make_scene(ctx.spec.scene);

    stage = "reconstruction";
    const polcam::RunResult run = polcam::run_single(ctx.spec);

    stage = "outputs";
    write_signal_csv(dir / "scene.csv", truth);
    write_signal_pgms(dir, "scene", truth);
    write_signal_csv(dir / "reconstruction.csv", run.x_hat);
    write_signal_pgms(dir, "reconstruction", run.x_hat);
    polcam::save_sensing(dir / "sensing.txt", run.phi);
    polcam::save_measurements(dir / "measurements.txt", run.measurements,
                              json{{"theta_deg", ctx.spec.optics.theta_deg},
                                   {"wavelength_nm", ctx.spec.optics.wavelength_nm}});
    {
      polcam::Csv trace;
      trace.header = {"iteration", "objective", "relative_change"};
      for (std::size_t i = 0; i < run.solver.objective_trace.size(); ++i)
        trace.rows.push_back({std::to_string(i), fd(run.solver.objective_trace[i]),
                              fd(i < run.solver.relative_change_trace.size()
                                     ? run.solver.relative_change_trace[i]
                                     : 0.0)});
      polcam::write_csv(dir / "trace.csv", trace);
    }
    const polcam::ErrorMaps errs = polcam::error_map(run.x_hat, truth);
    if (truth.is_2d()) {
      double mx = 0.0;
      for (double v : errs.intensity) mx = std::max(mx, v);
      polcam::write_pgm16(dir / "error_xt.pgm", errs.intensity, truth.height, truth.width, 0.0,
                          mx > 0.0 ? mx : 1.0);
      polcam::write_pgm16(dir / "error_osc.pgm", errs.osc, truth.height, truth.width, 0.0,
                          2.0);
    } else {
      polcam::Csv ec;
      ec.header = {"index", "abs_err_xt", "abs_err_osc"};
      for (std::size_t i = 0; i < errs.intensity.size(); ++i)
        ec.rows.push_back({std::to_string(i), fd(errs.intensity[i]), fd(errs.osc[i])});
      polcam::write_csv(dir / "errors.csv", ec);
    }
    {
      polcam::Csv metrics;
      metrics.header = {"psnr_db", "iterations", "converged", "wall_time_s",
                        "sigma",   "n",          "m"};
      metrics.rows.push_back({fd(run.psnr_db), std::to_string(run.solver.iterations_run),
                              run.solver.converged ? "1" : "0", fd(run.solver.wall_time),
                              fd(run.measurements.sigma), std::to_string(truth.size()),
                              std::to_string(run.phi.m)});
      polcam::write_csv(dir / "metrics.csv", metrics);
    }
    json m = base_manifest("run", ctx.spec);
    m["normalization"] = {{"pattern_scale", run.pattern_scale}};
    m["metrics"] = {{"psnr_db", run.psnr_db},
                    {"iterations", run.solver.iterations_run},
                    {"converged", run.solver.converged},
                    {"wall_time_s", run.solver.wall_time},
                    {"sigma", run.measurements.sigma}};
    m["outputs"] = {"scene.csv", "reconstruction.csv", "sensing.txt", "measurements.txt",
                    "trace.csv", "metrics.csv"};
    m["status"] = "ok";
    write_manifest(dir, m);
    std::cout << "run: PSNR = " << fd(run.psnr_db) << " dB, " << run.solver.iterations_run
              << " iterations -> " << dir.string() << "\n";
    return 0;
  } catch (...) {
    if (!dir.empty()) {
      try {
        json m;
        m["version"] = polcam::kVersion;
        m["command"] = "run";
        m["status"] = "failed";
        m["failure_stage"] = stage;
        try {
          throw;
        } catch (const std::exception& e) {
          m["error"] = e.what();
        } catch (...) {
          m["error"] = "unknown";
        }
        write_manifest(dir, m);
      } catch (...) {
        // The manifest is best-effort on the failure path.
      }
    }
    throw;
  }
}

int cmd_sweep_snr(const CommonOpts& opt) {
  const CliContext ctx = load_context(opt);
  const fs::path dir = ctx.spec.output_dir;
  fs::create_directories(dir);
  if (!opt.force && up_to_date(dir, "sweep-snr", ctx.spec, "sweep_snr.csv")) {
    std::cout << "sweep-snr: up to date in " << dir.string() << " (use --force to rerun)\n";
    return 0;
  }
  const auto rows = polcam::sweep_snr(ctx.spec, opt.jobs);
  polcam::Csv csv;
  csv.header = {"method", "snr_db", "median_psnr", "q1_psnr", "q3_psnr", "mean_psnr",
                "n_realizations"};
  for (const auto& r : rows)
    csv.rows.push_back({polcam::to_string(r.method), fd(r.snr_db), fd(r.stat.median),
                        fd(r.stat.q1), fd(r.stat.q3), fd(r.stat.mean),
                        std::to_string(r.stat.n)});
  polcam::write_csv(dir / "sweep_snr.csv", csv);
  json m = base_manifest("sweep-snr", ctx.spec);
  m["status"] = "ok";
  m["outputs"] = {"sweep_snr.csv"};
  write_manifest(dir, m);
  std::cout << "sweep-snr: " << rows.size() << " rows -> " << (dir / "sweep_snr.csv").string()
            << "\n";
  return 0;
}

int cmd_sweep_phase(const CommonOpts& opt) {
  const CliContext ctx = load_context(opt);
  const fs::path dir = ctx.spec.output_dir;
  fs::create_directories(dir);
  if (!opt.force && up_to_date(dir, "sweep-phase", ctx.spec, "sweep_phase.csv")) {
    std::cout << "sweep-phase: up to date in " << dir.string() << " (use --force to rerun)\n";
    return 0;
  }
  const auto rows = polcam::sweep_phase(ctx.spec, opt.jobs);
  polcam::Csv csv;
  csv.header = {"theta_deg", "compression_rate", "mean_psnr", "median_psnr", "q1_psnr",
                "q3_psnr",   "n_realizations"};
  for (const auto& r : rows)
    csv.rows.push_back({fd(r.theta_deg), fd(r.compression_rate), fd(r.stat.mean),
                        fd(r.stat.median), fd(r.stat.q1), fd(r.stat.q3),
                        std::to_string(r.stat.n)});
  polcam::write_csv(dir / "sweep_phase.csv", csv);
  json m = base_manifest("sweep-phase", ctx.spec);
  m["metadata"] = {{"max_iters", ctx.spec.solver.config.max_iters},
                   {"snr_db", ctx.spec.sensing.snr_db}};
  m["status"] = "ok";
  m["outputs"] = {"sweep_phase.csv"};
  write_manifest(dir, m);
  std::cout << "sweep-phase: " << rows.size() << " rows -> " << (dir / "sweep_phase.csv").string()
            << "\n";
  return 0;
}

int cmd_sweep_bias(const CommonOpts& opt) {
  const CliContext ctx = load_context(opt);
  const fs::path dir = ctx.spec.output_dir;
  fs::create_directories(dir);
  if (!opt.force && up_to_date(dir, "sweep-bias", ctx.spec, "sweep_bias.csv")) {
    std::cout << "sweep-bias: up to date in " << dir.string() << " (use --force to rerun)\n";
    return 0;
  }
  const auto rows = polcam::sweep_bias(ctx.spec, opt.jobs);
  polcam::Csv csv;
  csv.header = {"method", "theta_bias_deg", "tilt_enabled", "median_psnr", "q1_psnr",
                "q3_psnr", "mean_psnr",      "n_realizations"};
  for (const auto& r : rows)
    csv.rows.push_back({polcam::to_string(r.method), fd(r.theta_bias_deg),
                        r.tilt_enabled ? "1" : "0", fd(r.stat.median), fd(r.stat.q1),
                        fd(r.stat.q3), fd(r.stat.mean), std::to_string(r.stat.n)});
  polcam::write_csv(dir / "sweep_bias.csv", csv);
  json m = base_manifest("sweep-bias", ctx.spec);
  m["status"] = "ok";
  m["outputs"] = {"sweep_bias.csv"};
  write_manifest(dir, m);
  std::cout << "sweep-bias: " << rows.size() << " rows -> " << (dir / "sweep_bias.csv").string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-detector compressive polarimetric camera: simulation and reconstruction"};
  app.set_version_flag("--version", polcam::kVersion);
  app.require_subcommand(1);

  CommonOpts opt;
  auto add_common = [&opt](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON experiment config file");
    sub->add_option("--out", opt.out_dir, "output directory (overrides config)");
    sub->add_option("--seed", opt.seed, "master seed (overrides config; 0 keeps config value)");
    sub->add_option("--jobs", opt.jobs, "number of worker threads for sweeps");
    sub->add_flag("--paper-scale", opt.paper_scale,
                  "full iteration budgets and realization counts");
    sub->add_flag("--force", opt.force, "recompute sweeps even when outputs are up to date");
  };

  auto* scene = app.add_subcommand("scene", "emit the configured scene to disk");
  add_common(scene);

  double theta_min = 17.0, theta_max = 65.0, theta_step = 1.0;
  double wl_min = 780.0, wl_max = 780.0, wl_step = 5.0;
  auto* fresnel =
      app.add_subcommand("fresnel", "tabulate reflection coefficients and conditioning");
  add_common(fresnel);
  fresnel->add_option("--theta-min", theta_min, "grid start, degrees");
  fresnel->add_option("--theta-max", theta_max, "grid end, degrees");
  fresnel->add_option("--theta-step", theta_step, "grid step, degrees");
  fresnel->add_option("--wavelength-min", wl_min, "grid start, nm");
  fresnel->add_option("--wavelength-max", wl_max, "grid end, nm");
  fresnel->add_option("--wavelength-step", wl_step, "grid step, nm");

  auto* run = app.add_subcommand("run", "single end-to-end reconstruction run");
  add_common(run);
  auto* sweep_snr_cmd = app.add_subcommand("sweep-snr", "PSNR vs detector SNR sweep");
  add_common(sweep_snr_cmd);
  auto* sweep_phase_cmd =
      app.add_subcommand("sweep-phase", "PSNR over the (theta, compression) grid");
  add_common(sweep_phase_cmd);
  auto* sweep_bias_cmd = app.add_subcommand("sweep-bias", "PSNR vs incidence-angle bias");
  add_common(sweep_bias_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (scene->parsed()) return cmd_scene(opt);
    if (fresnel->parsed())
      return cmd_fresnel(opt, theta_min, theta_max, theta_step, wl_min, wl_max, wl_step);
    if (run->parsed()) return cmd_run(opt);
    if (sweep_snr_cmd->parsed()) return cmd_sweep_snr(opt);
    if (sweep_phase_cmd->parsed()) return cmd_sweep_phase(opt);
    if (sweep_bias_cmd->parsed()) return cmd_sweep_bias(opt);
  } catch (const polcam::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const polcam::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
