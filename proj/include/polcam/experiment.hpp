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

#ifndef POLCAM_EXPERIMENT_HPP
#define POLCAM_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "polcam/common.hpp"
#include "polcam/imaging.hpp"
#include "polcam/io.hpp"
#include "polcam/optics.hpp"
#include "polcam/rng.hpp"
#include "polcam/sensing.hpp"
#include "polcam/solvers.hpp"
#include "polcam/transforms.hpp"
#include "polcam/version.hpp"

namespace polcam {

enum class ForwardMode { ideal, physical, perpixel };
enum class Method { two_stage, rfista, gfb };

// Purpose tags for derived RNG streams.
enum SeedTag : std::uint64_t {
  kSeedScene = 1,
  kSeedPattern = 2,
  kSeedNoise = 3,
  kSeedTilt = 4,
};

// ---------------------------------------------------------------------------
// Name <-> enum maps used by configs and CSV output.
// ---------------------------------------------------------------------------
inline std::string to_string(ForwardMode m) {
  switch (m) {
    case ForwardMode::ideal: return "ideal";
    case ForwardMode::physical: return "physical";
    case ForwardMode::perpixel: return "perpixel";
  }
  return "ideal";
}

inline ForwardMode forward_mode_from_string(const std::string& s) {
  if (s == "ideal") return ForwardMode::ideal;
  if (s == "physical") return ForwardMode::physical;
  if (s == "perpixel") return ForwardMode::perpixel;
  throw ConfigError("unknown forward mode: " + s);
}

inline std::string to_string(Method m) {
  switch (m) {
    case Method::two_stage: return "two-stage";
    case Method::rfista: return "rfista";
    case Method::gfb: return "gfb";
  }
  return "rfista";
}

inline Method method_from_string(const std::string& s) {
  if (s == "two-stage" || s == "two_stage") return Method::two_stage;
  if (s == "rfista") return Method::rfista;
  if (s == "gfb") return Method::gfb;
  throw ConfigError("unknown method: " + s);
}

inline std::string to_string(WaveletFamily f) {
  switch (f) {
    case WaveletFamily::haar_undecimated: return "haar-undecimated";
    case WaveletFamily::symmlet_undecimated: return "symmlet-undecimated";
    case WaveletFamily::identity: return "identity";
  }
  return "haar-undecimated";
}

inline WaveletFamily family_from_string(const std::string& s) {
  if (s == "haar-undecimated" || s == "haar") return WaveletFamily::haar_undecimated;
  if (s == "symmlet-undecimated" || s == "symmlet" || s == "sym4")
    return WaveletFamily::symmlet_undecimated;
  if (s == "identity") return WaveletFamily::identity;
  throw ConfigError("unknown wavelet family: " + s);
}

inline std::string to_string(SceneKind k) {
  switch (k) {
    case SceneKind::piecewise_1d: return "piecewise-1d";
    case SceneKind::two_squares: return "two-squares";
    case SceneKind::hidden_objects: return "hidden-objects";
  }
  return "piecewise-1d";
}

inline SceneKind scene_kind_from_string(const std::string& s) {
  if (s == "piecewise-1d") return SceneKind::piecewise_1d;
  if (s == "two-squares") return SceneKind::two_squares;
  if (s == "hidden-objects") return SceneKind::hidden_objects;
  throw ConfigError("unknown scene kind: " + s);
}

// ---------------------------------------------------------------------------
// Experiment configuration.
// ---------------------------------------------------------------------------
struct OpticsSpec {
  double theta_deg = 50.0;
  double wavelength_nm = 780.0;
  double t1_deg = 12.0;
  double t2_deg = -12.0;

  MirrorGeometry geometry() const { return {theta_deg, t1_deg, t2_deg}; }
};

struct SensingSpec {
  double compression_rate = 0.4;
  double snr_db = 40.0;
  ForwardMode mode = ForwardMode::ideal;
  std::uint64_t pattern_seed = 0;  // 0 = derive from master_seed
  std::uint64_t noise_seed = 0;    // 0 = derive from master_seed
  ImperfectionModel imperfection;  // bias + per-mirror tilt error parameters
  bool exact_mean = false;         // physical mode: exact instead of empirical mean
};

struct SolverSpec {
  Method method = Method::rfista;
  SolverConfig config;
  WaveletFamily family = WaveletFamily::haar_undecimated;
  std::size_t levels = 3;
  // Calibrate the lambda_i from the gradient at the simulation ground truth
  // (available here because the scene is synthetic); disable to re-estimate
  // from the current iterate's gradient at each restart instead.
  bool oracle_lambda = true;
};

struct SweepSpec {
  std::vector<double> snr_db = {0.0, 20.0, 40.0, 60.0, 80.0};
  std::vector<double> theta_deg = {27.0, 40.0, 50.0, 60.0};
  std::vector<double> compression = {0.1, 0.3, 0.5, 0.7, 0.85, 0.92};
  std::vector<double> bias_deg = {0.05, 0.5, 2.0, 10.0};
  std::vector<bool> tilt_variants = {false, true};
  std::size_t realizations = 10;
  std::vector<Method> methods = {Method::two_stage, Method::rfista, Method::gfb};
};

struct ExperimentSpec {
  SceneSpec scene;
  OpticsSpec optics;
  SensingSpec sensing;
  SolverSpec solver;
  SweepSpec sweep;
  std::string output_dir = "out";
  std::uint64_t master_seed = 1;

  void validate() const {
    if (sensing.compression_rate < 0.0 || sensing.compression_rate >= 1.0)
      throw ConfigError("compression_rate must lie in [0, 1)");
    if (sweep.realizations < 1) throw ConfigError("sweep.realizations must be >= 1");
    if (sweep.methods.empty()) throw ConfigError("sweep.methods must be nonempty");
    sensing.imperfection.validate();
    solver.config.validate();
  }

  // Fills every 0 (auto) seed from master_seed so the echoed config pins the
  // full RNG state of the run.
  ExperimentSpec resolved() const {
    ExperimentSpec out = *this;
    if (out.scene.seed == 0) out.scene.seed = derive_seed(master_seed, {kSeedScene});
    if (out.sensing.pattern_seed == 0)
      out.sensing.pattern_seed = derive_seed(master_seed, {kSeedPattern});
    if (out.sensing.noise_seed == 0)
      out.sensing.noise_seed = derive_seed(master_seed, {kSeedNoise});
    if (out.sensing.imperfection.seed == 0)
      out.sensing.imperfection.seed = derive_seed(master_seed, {kSeedTilt});
    return out;
  }
};

// ---------------------------------------------------------------------------
// JSON round-trip.  Missing keys fall back to defaults; enums are the
// kebab-case names above.
// ---------------------------------------------------------------------------
inline json to_json(const ExperimentSpec& s) {
  json j;
  j["scene"] = {{"kind", to_string(s.scene.kind)},       {"n", s.scene.n},
                {"side", s.scene.side},                  {"osc_big", s.scene.osc_big},
                {"osc_small", s.scene.osc_small},        {"seed", s.scene.seed}};
  j["optics"] = {{"theta_deg", s.optics.theta_deg},
                 {"wavelength_nm", s.optics.wavelength_nm},
                 {"t1_deg", s.optics.t1_deg},
                 {"t2_deg", s.optics.t2_deg}};
  j["sensing"] = {
      {"compression_rate", s.sensing.compression_rate},
      {"snr_db", s.sensing.snr_db},
      {"mode", to_string(s.sensing.mode)},
      {"pattern_seed", s.sensing.pattern_seed},
      {"noise_seed", s.sensing.noise_seed},
      {"exact_mean", s.sensing.exact_mean},
      {"imperfection",
       {{"theta_bias_deg", s.sensing.imperfection.theta_bias_deg},
        {"tilt_error_halfwidth_deg", s.sensing.imperfection.tilt_error_halfwidth_deg},
        {"tilt_levels", s.sensing.imperfection.tilt_levels},
        {"seed", s.sensing.imperfection.seed}}}};
  json cfg = {{"tau", s.solver.config.tau},
              {"eps_reweight", s.solver.config.eps_reweight},
              {"gamma", s.solver.config.gamma},
              {"max_iters", s.solver.config.max_iters},
              {"outer_loops", s.solver.config.outer_loops},
              {"restart_at", s.solver.config.restart_at},
              {"gfb_weights", s.solver.config.gfb_weights},
              {"stop_eps", s.solver.config.stop_eps},
              {"polish_iters", s.solver.config.polish_iters},
              {"trace_stride", s.solver.config.trace_stride}};
  if (s.solver.config.lambda_override)
    cfg["lambda_override"] = *s.solver.config.lambda_override;
  j["solver"] = {{"method", to_string(s.solver.method)},
                 {"representation", {{"family", to_string(s.solver.family)},
                                     {"levels", s.solver.levels}}},
                 {"config", cfg},
                 {"oracle_lambda", s.solver.oracle_lambda}};
  std::vector<std::string> methods;
  for (Method m : s.sweep.methods) methods.push_back(to_string(m));
  j["sweep"] = {{"snr_db", s.sweep.snr_db},
                {"theta_deg", s.sweep.theta_deg},
                {"compression", s.sweep.compression},
                {"bias_deg", s.sweep.bias_deg},
                {"tilt_variants", s.sweep.tilt_variants},
                {"realizations", s.sweep.realizations},
                {"methods", methods}};
  j["output_dir"] = s.output_dir;
  j["master_seed"] = s.master_seed;
  return j;
}

inline ExperimentSpec experiment_from_json(const json& j) {
  ExperimentSpec s;
  try {
    if (j.contains("scene")) {
      const auto& sc = j.at("scene");
      s.scene.kind = scene_kind_from_string(sc.value("kind", to_string(s.scene.kind)));
      s.scene.n = sc.value("n", s.scene.n);
      s.scene.side = sc.value("side", s.scene.side);
      s.scene.osc_big = sc.value("osc_big", s.scene.osc_big);
      s.scene.osc_small = sc.value("osc_small", s.scene.osc_small);
      s.scene.seed = sc.value("seed", s.scene.seed);
    }
    if (j.contains("optics")) {
      const auto& o = j.at("optics");
      s.optics.theta_deg = o.value("theta_deg", s.optics.theta_deg);
      s.optics.wavelength_nm = o.value("wavelength_nm", s.optics.wavelength_nm);
      s.optics.t1_deg = o.value("t1_deg", s.optics.t1_deg);
      s.optics.t2_deg = o.value("t2_deg", s.optics.t2_deg);
    }
    if (j.contains("sensing")) {
      const auto& n = j.at("sensing");
      s.sensing.compression_rate = n.value("compression_rate", s.sensing.compression_rate);
      s.sensing.snr_db = n.value("snr_db", s.sensing.snr_db);
      s.sensing.mode = forward_mode_from_string(n.value("mode", to_string(s.sensing.mode)));
      s.sensing.pattern_seed = n.value("pattern_seed", s.sensing.pattern_seed);
      s.sensing.noise_seed = n.value("noise_seed", s.sensing.noise_seed);
      s.sensing.exact_mean = n.value("exact_mean", s.sensing.exact_mean);
      if (n.contains("imperfection")) {
        const auto& im = n.at("imperfection");
        auto& imp = s.sensing.imperfection;
        imp.theta_bias_deg = im.value("theta_bias_deg", imp.theta_bias_deg);
        imp.tilt_error_halfwidth_deg =
            im.value("tilt_error_halfwidth_deg", imp.tilt_error_halfwidth_deg);
        imp.tilt_levels = im.value("tilt_levels", imp.tilt_levels);
        imp.seed = im.value("seed", imp.seed);
      }
    }
    if (j.contains("solver")) {
      const auto& so = j.at("solver");
      s.solver.method = method_from_string(so.value("method", to_string(s.solver.method)));
      s.solver.oracle_lambda = so.value("oracle_lambda", s.solver.oracle_lambda);
      if (so.contains("representation")) {
        const auto& rp = so.at("representation");
        s.solver.family = family_from_string(rp.value("family", to_string(s.solver.family)));
        s.solver.levels = rp.value("levels", s.solver.levels);
      }
      if (so.contains("config")) {
        const auto& c = so.at("config");
        auto& cfg = s.solver.config;
        cfg.tau = c.value("tau", cfg.tau);
        cfg.eps_reweight = c.value("eps_reweight", cfg.eps_reweight);
        cfg.gamma = c.value("gamma", cfg.gamma);
        cfg.max_iters = c.value("max_iters", cfg.max_iters);
        cfg.outer_loops = c.value("outer_loops", cfg.outer_loops);
        cfg.restart_at = c.value("restart_at", cfg.restart_at);
        cfg.gfb_weights = c.value("gfb_weights", cfg.gfb_weights);
        cfg.stop_eps = c.value("stop_eps", cfg.stop_eps);
        cfg.polish_iters = c.value("polish_iters", cfg.polish_iters);
        cfg.trace_stride = c.value("trace_stride", cfg.trace_stride);
        if (c.contains("lambda_override") && !c.at("lambda_override").is_null())
          cfg.lambda_override = c.at("lambda_override").get<std::array<double, 2>>();
      }
    }
    if (j.contains("sweep")) {
      const auto& sw = j.at("sweep");
      s.sweep.snr_db = sw.value("snr_db", s.sweep.snr_db);
      s.sweep.theta_deg = sw.value("theta_deg", s.sweep.theta_deg);
      s.sweep.compression = sw.value("compression", s.sweep.compression);
      s.sweep.bias_deg = sw.value("bias_deg", s.sweep.bias_deg);
      s.sweep.tilt_variants = sw.value("tilt_variants", s.sweep.tilt_variants);
      s.sweep.realizations = sw.value("realizations", s.sweep.realizations);
      if (sw.contains("methods")) {
        s.sweep.methods.clear();
        for (const auto& m : sw.at("methods"))
          s.sweep.methods.push_back(method_from_string(m.get<std::string>()));
      }
    }
    s.output_dir = j.value("output_dir", s.output_dir);
    s.master_seed = j.value("master_seed", s.master_seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Single reconstruction run.
// ---------------------------------------------------------------------------

// One fully resolved pipeline instance: data-side geometry theta_deg, the
// reconstruction assumes theta_deg + theta_bias_deg.
struct RunPoint {
  double theta_deg = 50.0;
  double snr_db = 40.0;
  double compression_rate = 0.4;
  double theta_bias_deg = 0.0;
  ForwardMode mode = ForwardMode::ideal;
  Method method = Method::rfista;
  std::uint64_t pattern_seed = 1;
  std::uint64_t noise_seed = 1;
  std::uint64_t tilt_seed = 1;
};

struct RunResult {
  PolarimetricSignal truth;
  PolarimetricSignal x_hat;
  SensingMatrix phi;
  MeasurementSet measurements;
  SolverResult solver;
  double psnr_db = 0.0;
  double pattern_scale = 1.0;  // 1/sqrt(N) normalization used by the solver
};

inline RunResult run_point(const ExperimentSpec& base, const PolarimetricSignal& truth,
                           const RunPoint& pt) {
  RunResult out;
  out.truth = truth;
  const ComplexRefractiveIndex index = index_lookup(base.optics.wavelength_nm);
  MirrorGeometry geom = base.optics.geometry();
  geom.theta_deg = pt.theta_deg;
  const MixingMatrix a_data = mixing_matrix(geom, index);
  MirrorGeometry geom_rec = geom;
  geom_rec.theta_deg += pt.theta_bias_deg;
  const MixingMatrix a_rec = mixing_matrix(geom_rec, index);

  const std::size_t n = truth.size();
  const std::size_t m = measurements_for_rate(n, pt.compression_rate);
  out.phi = scrambled_hadamard(n, m, pt.pattern_seed);
  out.pattern_scale = 1.0 / std::sqrt(static_cast<double>(n));

  std::optional<NoiseSpec> noise;
  if (pt.snr_db < 300.0) noise = NoiseSpec{pt.snr_db, pt.noise_seed};

  ImperfectionModel imp = base.sensing.imperfection;
  imp.seed = pt.tilt_seed;
  switch (pt.mode) {
    case ForwardMode::ideal:
      out.measurements = forward_ideal(a_data, truth, out.phi, noise);
      break;
    case ForwardMode::physical:
      out.measurements =
          forward_physical(a_data.a_raw, truth, out.phi, noise, base.sensing.exact_mean);
      break;
    case ForwardMode::perpixel:
      out.measurements = forward_perpixel(geom, index, imp, truth, out.phi, noise);
      break;
  }

  const SparseRepresentation rep =
      make_representation(base.solver.family, base.solver.levels, truth.height, truth.width);
  SolverConfig cfg = base.solver.config;
  if (base.solver.oracle_lambda && !cfg.lambda_override) {
    if (pt.method == Method::two_stage) {
      // Stage 1 recovers the mixed field, so its thresholds calibrate against
      // the mixed-field ground truth (per-pixel mixing under tilt error).
      const ImperfectionModel& field_imp =
          (pt.mode == ForwardMode::perpixel) ? imp : ImperfectionModel{0.0, 0.0, 1, 0};
      const Array2 mixed = mixture_field(geom, index, field_imp, truth);
      const FistaProblem pb = make_problem(Mat2::identity(), &out.phi, out.measurements.y, rep);
      cfg.lambda_override = calibrate_lambda(pb, mixed, cfg.tau);
    } else {
      const FistaProblem pb = make_problem(a_rec.a, &out.phi, out.measurements.y, rep);
      cfg.lambda_override = calibrate_lambda(pb, truth.as_matrix(), cfg.tau);
    }
  }

  switch (pt.method) {
    case Method::two_stage:
      out.solver = solve_two_stage(out.measurements, out.phi, a_rec, rep, cfg);
      break;
    case Method::rfista:
      out.solver = solve_combined_rfista(out.measurements, out.phi, a_rec, rep, cfg);
      break;
    case Method::gfb:
      out.solver = solve_constrained_gfb(out.measurements, out.phi, a_rec, rep, cfg);
      break;
  }
  out.x_hat = out.solver.x_hat;
  out.psnr_db = psnr(out.x_hat, truth);
  return out;
}

// The spec's own scene/sensing/solver blocks as a single run.
inline RunResult run_single(const ExperimentSpec& spec_in) {
  const ExperimentSpec spec = spec_in.resolved();
  spec.validate();
  const PolarimetricSignal truth = make_scene(spec.scene);
  RunPoint pt;
  pt.theta_deg = spec.optics.theta_deg;
  pt.snr_db = spec.sensing.snr_db;
  pt.compression_rate = spec.sensing.compression_rate;
  pt.theta_bias_deg = spec.sensing.imperfection.theta_bias_deg;
  pt.mode = spec.sensing.mode;
  pt.method = spec.solver.method;
  pt.pattern_seed = spec.sensing.pattern_seed;
  pt.noise_seed = spec.sensing.noise_seed;
  pt.tilt_seed = spec.sensing.imperfection.seed;
  return run_point(spec, truth, pt);
}

// ---------------------------------------------------------------------------
// Deterministic work queue: results are stored by job index, so the merge
// order never depends on thread scheduling.
// ---------------------------------------------------------------------------
template <typename Fn>
inline void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n_threads = std::min<unsigned>(jobs, static_cast<unsigned>(count));
  pool.reserve(n_threads);
  for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Sweeps.  Seeds derive from (master_seed, purpose, axis indices,
// realization); the measurement-defining axes share seeds across methods and
// across theta/bias values so comparisons are paired.
// ---------------------------------------------------------------------------
namespace detail {
inline std::vector<double> sorted_copy(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}
}  // namespace detail

struct PointStat {
  double median = 0.0, q1 = 0.0, q3 = 0.0, mean = 0.0;
  std::size_t n = 0;
};

inline PointStat aggregate(std::vector<double> values) {
  PointStat st;
  st.n = values.size();
  if (values.empty()) return st;
  double sum = 0.0;
  for (double v : values) sum += v;
  st.mean = sum / static_cast<double>(values.size());
  st.median = quantile(values, 0.5);
  st.q1 = quantile(values, 0.25);
  st.q3 = quantile(values, 0.75);
  return st;
}

struct SnrSweepRow {
  Method method;
  double snr_db = 0.0;
  PointStat stat;
};

inline std::vector<SnrSweepRow> sweep_snr(const ExperimentSpec& spec_in, unsigned jobs = 1) {
  const ExperimentSpec spec = spec_in.resolved();
  spec.validate();
  if (spec.sweep.snr_db.empty()) throw ConfigError("sweep_snr: empty snr axis");
  const PolarimetricSignal truth = make_scene(spec.scene);
  const auto& methods = spec.sweep.methods;
  const std::vector<double> axis = detail::sorted_copy(spec.sweep.snr_db);
  const std::size_t reals = spec.sweep.realizations;
  const std::size_t count = methods.size() * axis.size() * reals;
  std::vector<double> psnrs(count, 0.0);
  parallel_for(count, jobs, [&](std::size_t idx) {
    const std::size_t r = idx % reals;
    const std::size_t s = (idx / reals) % axis.size();
    const std::size_t mi = idx / (reals * axis.size());
    RunPoint pt;
    pt.theta_deg = spec.optics.theta_deg;
    pt.snr_db = axis[s];
    pt.compression_rate = spec.sensing.compression_rate;
    pt.theta_bias_deg = spec.sensing.imperfection.theta_bias_deg;
    pt.mode = spec.sensing.mode;
    pt.method = methods[mi];
    pt.pattern_seed = derive_seed(spec.master_seed, {kSeedPattern, r});
    pt.noise_seed = derive_seed(spec.master_seed, {kSeedNoise, s, r});
    pt.tilt_seed = derive_seed(spec.master_seed, {kSeedTilt, r});
    psnrs[idx] = run_point(spec, truth, pt).psnr_db;
  });
  std::vector<SnrSweepRow> rows;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    for (std::size_t s = 0; s < axis.size(); ++s) {
      std::vector<double> vals(psnrs.begin() + static_cast<std::ptrdiff_t>((mi * axis.size() + s) * reals),
                               psnrs.begin() + static_cast<std::ptrdiff_t>((mi * axis.size() + s + 1) * reals));
      rows.push_back({methods[mi], axis[s], aggregate(std::move(vals))});
    }
  }
  return rows;
}

struct PhaseSweepRow {
  double theta_deg = 0.0;
  double compression_rate = 0.0;
  PointStat stat;
};

inline std::vector<PhaseSweepRow> sweep_phase(const ExperimentSpec& spec_in, unsigned jobs = 1) {
  const ExperimentSpec spec = spec_in.resolved();
  spec.validate();
  if (spec.sweep.theta_deg.empty() || spec.sweep.compression.empty())
    throw ConfigError("sweep_phase: empty theta or compression axis");
  const PolarimetricSignal truth = make_scene(spec.scene);
  const std::vector<double> thetas = detail::sorted_copy(spec.sweep.theta_deg);
  const std::vector<double> comps = detail::sorted_copy(spec.sweep.compression);
  const std::size_t reals = spec.sweep.realizations;
  const std::size_t count = thetas.size() * comps.size() * reals;
  std::vector<double> psnrs(count, 0.0);
  parallel_for(count, jobs, [&](std::size_t idx) {
    const std::size_t r = idx % reals;
    const std::size_t c = (idx / reals) % comps.size();
    const std::size_t t = idx / (reals * comps.size());
    RunPoint pt;
    pt.theta_deg = thetas[t];
    pt.snr_db = spec.sensing.snr_db;
    pt.compression_rate = comps[c];
    pt.theta_bias_deg = spec.sensing.imperfection.theta_bias_deg;
    pt.mode = spec.sensing.mode;
    pt.method = spec.solver.method;
    // theta excluded from the seed paths: theta comparisons are paired.
    pt.pattern_seed = derive_seed(spec.master_seed, {kSeedPattern, c, r});
    pt.noise_seed = derive_seed(spec.master_seed, {kSeedNoise, c, r});
    pt.tilt_seed = derive_seed(spec.master_seed, {kSeedTilt, c, r});
    psnrs[idx] = run_point(spec, truth, pt).psnr_db;
  });
  std::vector<PhaseSweepRow> rows;
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    for (std::size_t c = 0; c < comps.size(); ++c) {
      std::vector<double> vals(psnrs.begin() + static_cast<std::ptrdiff_t>((t * comps.size() + c) * reals),
                               psnrs.begin() + static_cast<std::ptrdiff_t>((t * comps.size() + c + 1) * reals));
      rows.push_back({thetas[t], comps[c], aggregate(std::move(vals))});
    }
  }
  return rows;
}

struct BiasSweepRow {
  Method method;
  double theta_bias_deg = 0.0;
  bool tilt_enabled = false;
  PointStat stat;
};

inline std::vector<BiasSweepRow> sweep_bias(const ExperimentSpec& spec_in, unsigned jobs = 1) {
  const ExperimentSpec spec = spec_in.resolved();
  spec.validate();
  if (spec.sweep.bias_deg.empty()) throw ConfigError("sweep_bias: empty bias axis");
  for (double b : spec.sweep.bias_deg)
    if (b < 0.05 || b > 10.0)
      throw ConfigError("sweep_bias: bias values must lie in [0.05, 10] degrees");
  const PolarimetricSignal truth = make_scene(spec.scene);
  const auto& methods = spec.sweep.methods;
  const std::vector<double> biases = detail::sorted_copy(spec.sweep.bias_deg);
  const auto& tilts = spec.sweep.tilt_variants;
  const std::size_t reals = spec.sweep.realizations;
  const std::size_t count = methods.size() * tilts.size() * biases.size() * reals;
  std::vector<double> psnrs(count, 0.0);
  parallel_for(count, jobs, [&](std::size_t idx) {
    const std::size_t r = idx % reals;
    const std::size_t b = (idx / reals) % biases.size();
    const std::size_t tv = (idx / (reals * biases.size())) % tilts.size();
    const std::size_t mi = idx / (reals * biases.size() * tilts.size());
    RunPoint pt;
    pt.theta_deg = spec.optics.theta_deg;
    pt.snr_db = spec.sensing.snr_db;
    pt.compression_rate = spec.sensing.compression_rate;
    pt.theta_bias_deg = biases[b];
    pt.mode = tilts[tv] ? ForwardMode::perpixel : ForwardMode::ideal;
    pt.method = methods[mi];
    // bias excluded from the seed paths: the bias axis is paired.
    pt.pattern_seed = derive_seed(spec.master_seed, {kSeedPattern, r});
    pt.noise_seed = derive_seed(spec.master_seed, {kSeedNoise, r});
    pt.tilt_seed = derive_seed(spec.master_seed, {kSeedTilt, r});
    psnrs[idx] = run_point(spec, truth, pt).psnr_db;
  });
  std::vector<BiasSweepRow> rows;
  std::size_t offset = 0;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    for (std::size_t tv = 0; tv < tilts.size(); ++tv) {
      for (std::size_t b = 0; b < biases.size(); ++b) {
        std::vector<double> vals(psnrs.begin() + static_cast<std::ptrdiff_t>(offset),
                                 psnrs.begin() + static_cast<std::ptrdiff_t>(offset + reals));
        offset += reals;
        rows.push_back({methods[mi], biases[b], tilts[tv], aggregate(std::move(vals))});
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Fresnel coefficient / conditioning table (theta x wavelength grid).
// ---------------------------------------------------------------------------
struct FresnelRow {
  double theta_deg = 0.0, wavelength_nm = 0.0;
  double r1s = 0.0, r1p = 0.0, r2s = 0.0, r2p = 0.0;
  double kappa_a = 0.0;
};

inline std::vector<FresnelRow> fresnel_table(const std::vector<double>& thetas,
                                             const std::vector<double>& wavelengths,
                                             double t1_deg = 12.0, double t2_deg = -12.0) {
  if (thetas.empty() || wavelengths.empty())
    throw ConfigError("fresnel_table: empty theta or wavelength axis");
  std::vector<FresnelRow> rows;
  rows.reserve(thetas.size() * wavelengths.size());
  for (double th : thetas) {
    for (double wl : wavelengths) {
      const ComplexRefractiveIndex idx = index_lookup(wl);
      const MixingMatrix a = mixing_matrix({th, t1_deg, t2_deg}, idx);
      FresnelRow row;
      row.theta_deg = th;
      row.wavelength_nm = wl;
      row.r1s = a.a_raw(0, 0);
      row.r1p = a.a_raw(0, 1);
      row.r2s = a.a_raw(1, 0);
      row.r2p = a.a_raw(1, 1);
      row.kappa_a = condition_number(a);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace polcam

#endif  // POLCAM_EXPERIMENT_HPP
