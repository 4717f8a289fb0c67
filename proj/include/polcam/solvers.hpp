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

#ifndef POLCAM_SOLVERS_HPP
#define POLCAM_SOLVERS_HPP

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "polcam/common.hpp"
#include "polcam/sensing.hpp"
#include "polcam/transforms.hpp"

namespace polcam {

// Degenerate (zero) thresholds are floored at machine epsilon so the l1 term
// never vanishes identically but becomes numerically inert.
inline constexpr double kLambdaFloor = std::numeric_limits<double>::epsilon();

// ---------------------------------------------------------------------------
// Weights: per-component threshold scalars lambda_i and per-coefficient
// reweighting factors w_ij in (0, 1]; the effective threshold matrix is
// [Lambda]_ij = lambda_i * w_ij.
// ---------------------------------------------------------------------------
struct Weights {
  std::array<double, 2> lambda_global{1.0, 1.0};
  Array2 w;  // 2 x N'

  // [Lambda]_ij entry.
  double threshold(int comp, std::size_t j) const {
    return lambda_global[comp] * w.row(comp)[j];
  }

  static Weights ones(std::array<double, 2> lam, std::size_t n_coeff) {
    Weights out;
    out.lambda_global = lam;
    out.w = Array2(n_coeff, 1.0);
    return out;
  }
};

struct SolverConfig {
  double tau = 3.0;               // threshold multiplier (2..3 typical)
  double eps_reweight = 1e-3;     // reweighting floor epsilon
  double gamma = 0.0;             // gradient step; 0 selects 0.9 / Lipschitz
  std::size_t max_iters = 20000;  // total inner-iteration budget L
  std::size_t outer_loops = 2;    // reweighting restarts
  std::array<std::size_t, 2> restart_at{2000, 4000};  // restart positions
  std::array<double, 3> gfb_weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  double stop_eps = 1e-9;         // relative-variation stop criterion
  // When set, stages use these calibrated per-component lambdas instead of
  // re-estimating from the current gradient at each restart.
  std::optional<std::array<double, 2>> lambda_override;
  // Extra final stage run with thresholds collapsed to the floor (exact
  // recovery polish for invertible systems); 0 disables it.
  std::size_t polish_iters = 0;
  // Objective recording: 1 = every iteration (default), s > 1 = every s-th
  // iteration, 0 = stage endpoints only.  The trace is never empty.
  std::size_t trace_stride = 1;

  void validate() const {
    if (tau <= 0.0) throw ConfigError("SolverConfig: tau must be positive");
    if (eps_reweight <= 0.0) throw ConfigError("SolverConfig: eps_reweight must be positive");
    if (gamma < 0.0) throw ConfigError("SolverConfig: gamma must be nonnegative");
    if (max_iters == 0) throw ConfigError("SolverConfig: max_iters must be positive");
    if (stop_eps < 0.0) throw ConfigError("SolverConfig: stop_eps must be nonnegative");
    double mu_sum = 0.0;
    for (double mu : gfb_weights) {
      if (mu <= 0.0) throw ConfigError("SolverConfig: gfb weights must be positive");
      mu_sum += mu;
    }
    if (std::abs(mu_sum - 1.0) > 1e-12)
      throw ConfigError("SolverConfig: gfb weights must sum to 1");
    if (outer_loops >= 1 && restart_at[0] >= max_iters)
      throw ConfigError("SolverConfig: first restart must precede max_iters");
    if (outer_loops >= 2 && (restart_at[1] <= restart_at[0] || restart_at[1] >= max_iters))
      throw ConfigError("SolverConfig: restarts must be increasing and precede max_iters");
  }
};

struct SolverResult {
  PolarimetricSignal x_hat;
  std::size_t iterations_run = 0;
  std::vector<double> objective_trace;       // objective at recorded iterates
  std::vector<double> relative_change_trace; // matching relative variations
  bool converged = false;                    // final stage hit the stop criterion
  double wall_time = 0.0;
};

// ---------------------------------------------------------------------------
// Proximal operators.
// ---------------------------------------------------------------------------

// Entrywise weighted soft-thresholding S_Lambda, optionally scaled by a step
// factor (prox of step * ||Lambda . ||_1).
inline CoefficientArray soft_threshold(const CoefficientArray& z, const Weights& lam,
                                       double step = 1.0) {
  CoefficientArray out = z;
  for (int r = 0; r < 2; ++r) {
    const auto& wr = lam.w.row(r);
    const double lr = lam.lambda_global[r];
    auto& row = out.c.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double t = step * lr * wr[j];
      const double v = row[j];
      row[j] = (v > t) ? v - t : (v < -t) ? v + t : 0.0;
    }
  }
  return out;
}

// Synthesis-side l1 prox: Psi S_Lambda(Z Psi^T), the orthogonal-frame
// approximation of the exact prox.
inline Array2 prox_l1_synthesis(const Array2& z, const Weights& lam,
                                const SparseRepresentation& rep, double step = 1.0) {
  return synthesize(rep, soft_threshold(analyze(rep, z), lam, step));
}

// Projection onto the nonnegative orthant.
inline Array2 prox_positive(const Array2& z) {
  Array2 out = z;
  for (int r = 0; r < 2; ++r)
    for (auto& v : out.row(r))
      if (v < 0.0) v = 0.0;
  return out;
}

// Projection onto the half-space x_S >= x_P, columnwise: infeasible columns
// move to the midpoint of the two components (the Lagrange-multiplier closed
// form with D = [1, -1]).
inline Array2 prox_inequality(const Array2& z) {
  Array2 out = z;
  for (std::size_t i = 0; i < z.cols(); ++i) {
    if (out.r0[i] < out.r1[i]) {
      const double mid = 0.5 * (out.r0[i] + out.r1[i]);
      out.r0[i] = mid;
      out.r1[i] = mid;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Data-fidelity model: Y ~ A X Phi, with the 1/sqrt(N) pattern normalization
// folded into a scale factor so the gradient Lipschitz constant is exactly
// ||A||_2^2.  phi == nullptr means identity sensing (toy problems).
// ---------------------------------------------------------------------------
struct FistaProblem {
  Mat2 a = Mat2::identity();
  const SensingMatrix* phi = nullptr;
  SparseRepresentation rep;
  Array2 yn;          // scale * measurements
  double scale = 1.0; // 1/sqrt(N) under pattern sensing, else 1
  double lip = 1.0;   // ||A||_2^2
  std::size_t n = 0;

  Array2 forward(const Array2& x) const {
    if (phi) {
      Array2 s = phi->apply(x);
      for (int r = 0; r < 2; ++r)
        for (auto& v : s.row(r)) v *= scale;
      return mat2_times(a, s);
    }
    return mat2_times(a, x);
  }

  void gradient_into(const Array2& x, Array2& g) const {
    Array2 resid = forward(x);
    for (int r = 0; r < 2; ++r) {
      const auto& yr = yn.row(r);
      auto& rr = resid.row(r);
      for (std::size_t k = 0; k < rr.size(); ++k) rr[k] = yr[k] - rr[k];
    }
    const Mat2 at = a.transpose();
    if (phi) {
      Array2 bp = phi->apply_transpose(resid);
      for (int r = 0; r < 2; ++r)
        for (auto& v : bp.row(r)) v *= scale;
      g = mat2_times(at, bp);
    } else {
      g = mat2_times(at, resid);
    }
    for (int r = 0; r < 2; ++r)
      for (auto& v : g.row(r)) v = -v;
  }

  double data_fidelity(const Array2& x) const {
    const Array2 f = forward(x);
    double s = 0.0;
    for (int r = 0; r < 2; ++r) {
      const auto& yr = yn.row(r);
      const auto& fr = f.row(r);
      for (std::size_t k = 0; k < fr.size(); ++k) {
        const double d = yr[k] - fr[k];
        s += d * d;
      }
    }
    return 0.5 * s;
  }
};

inline FistaProblem make_problem(const Mat2& a, const SensingMatrix* phi, const Array2& y,
                                 const SparseRepresentation& rep) {
  FistaProblem pb;
  pb.a = a;
  pb.phi = phi;
  pb.rep = rep;
  pb.n = phi ? phi->n : y.cols();
  if (rep.signal_size() != pb.n)
    throw ConfigError("make_problem: representation extent does not match signal length");
  if (phi && y.cols() != phi->m)
    throw ConfigError("make_problem: measurement count does not match pattern count");
  pb.scale = phi ? 1.0 / std::sqrt(static_cast<double>(pb.n)) : 1.0;
  pb.yn = y;
  for (int r = 0; r < 2; ++r)
    for (auto& v : pb.yn.row(r)) v *= pb.scale;
  pb.lip = a.singular_values()[0] * a.singular_values()[0];
  return pb;
}

// ---------------------------------------------------------------------------
// Spec-level operations on the raw (unnormalized) model.
// ---------------------------------------------------------------------------

// G = -A^T (Y - A X Phi) Phi^T.  Passing phi == nullptr treats Phi as the
// identity.
inline Array2 gradient(const Array2& x, const MeasurementSet& y, const MixingMatrix& a,
                       const SensingMatrix* phi) {
  if (phi) {
    if (x.cols() != phi->n || y.y.cols() != phi->m)
      throw ConfigError("gradient: dimensions inconsistent with the sensing matrix");
  } else if (x.cols() != y.y.cols()) {
    throw ConfigError("gradient: signal and measurement lengths differ");
  }
  FistaProblem pb;
  pb.a = a.a;
  pb.phi = phi;
  pb.n = phi ? phi->n : y.y.cols();
  pb.scale = 1.0;  // spec form: no normalization
  pb.yn = y.y;
  Array2 g;
  pb.gradient_into(x, g);
  return g;
}

inline Array2 gradient(const Array2& x, const MeasurementSet& y, const MixingMatrix& a,
                       const SensingMatrix& phi) {
  return gradient(x, y, a, &phi);
}

// lambda_i = tau * mad(row i of G Psi^T), floored at machine epsilon.
inline std::array<double, 2> update_lambda(const Array2& g, const SparseRepresentation& rep,
                                           double tau) {
  if (tau <= 0.0) throw ConfigError("update_lambda: tau must be positive");
  const CoefficientArray c = analyze(rep, g);
  std::array<double, 2> lam{};
  for (int r = 0; r < 2; ++r) lam[r] = std::max(tau * mad(c.c.row(r)), kLambdaFloor);
  return lam;
}

// w_ij = eps / (eps + |c_ij| / ||c||_inf) from the coefficients of the
// current estimate; all ones when the estimate is identically zero.
inline Array2 update_weights(const Array2& x_hat, const SparseRepresentation& rep, double eps) {
  if (eps <= 0.0) throw ConfigError("update_weights: eps must be positive");
  const CoefficientArray c = analyze(rep, x_hat);
  double mx = 0.0;
  for (int r = 0; r < 2; ++r)
    for (double v : c.c.row(r)) mx = std::max(mx, std::abs(v));
  Array2 w(rep.coeff_size(), 1.0);
  if (mx == 0.0) return w;
  for (int r = 0; r < 2; ++r) {
    const auto& src = c.c.row(r);
    auto& dst = w.row(r);
    for (std::size_t j = 0; j < src.size(); ++j)
      dst[j] = eps / (eps + std::abs(src[j]) / mx);
  }
  return w;
}

// Calibrates the per-component thresholds from the data-fidelity gradient
// evaluated at a reference signal (the simulation ground truth): there the
// gradient is exactly back-projected noise plus model error, which is the
// quantity the mad rule is meant to scale.
inline std::array<double, 2> calibrate_lambda(const FistaProblem& pb, const Array2& reference,
                                              double tau) {
  Array2 g;
  pb.gradient_into(reference, g);
  return update_lambda(g, pb.rep, tau);
}

// Momentum recursion rho^(t+1) = (1 + sqrt(1 + 4 rho^2))/2; rho^(0) = 1 gives
// rho^(1) = (1 + sqrt(5))/2.
inline double fista_momentum_next(double rho) {
  return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * rho * rho));
}

namespace detail {

// l1 part of the objective: sum_ij Lambda_ij |[X Psi^T]_ij|.
inline double weighted_l1(const FistaProblem& pb, const Array2& x, const Weights& lam) {
  const CoefficientArray c = analyze(pb.rep, x);
  double s = 0.0;
  for (int r = 0; r < 2; ++r) {
    const auto& row = c.c.row(r);
    const auto& wr = lam.w.row(r);
    for (std::size_t j = 0; j < row.size(); ++j)
      s += lam.lambda_global[r] * wr[j] * std::abs(row[j]);
  }
  return s;
}

inline double full_objective(const FistaProblem& pb, const Array2& x, const Weights& lam) {
  return pb.data_fidelity(x) + weighted_l1(pb, x, lam);
}

struct StageOutcome {
  std::size_t iterations = 0;
  bool converged = false;
};

// One FISTA stage with fixed thresholds: momentum restarts at rho = 1,
// iterates X^+ = prox_{gamma Lambda l1}(Z - gamma grad(Z)) with the usual
// rho-sequence extrapolation, stopping on the relative variation of X.
inline StageOutcome fista_stage(const FistaProblem& pb, Array2& x, const Weights& lam,
                                double gamma, std::size_t budget, double stop_eps,
                                std::size_t trace_stride, std::vector<double>& obj_trace,
                                std::vector<double>& rel_trace) {
  StageOutcome out;
  if (budget == 0) return out;
  Array2 z = x, g;
  double rho = 1.0;
  for (std::size_t t = 0; t < budget; ++t) {
    pb.gradient_into(z, g);
    Array2 p = z;
    for (int r = 0; r < 2; ++r) {
      auto& pr = p.row(r);
      const auto& gr = g.row(r);
      for (std::size_t i = 0; i < pr.size(); ++i) pr[i] -= gamma * gr[i];
    }
    Array2 xn = prox_l1_synthesis(p, lam, pb.rep, gamma);
    if (!xn.all_finite())
      throw NumericalError("fista: non-finite iterate at inner iteration " + std::to_string(t));
    const double rho_n = fista_momentum_next(rho);
    double num = 0.0, den = 0.0;
    for (int r = 0; r < 2; ++r) {
      const auto& xr = x.row(r);
      const auto& xnr = xn.row(r);
      for (std::size_t i = 0; i < xr.size(); ++i) {
        const double d = xnr[i] - xr[i];
        num += d * d;
        den += xr[i] * xr[i];
      }
    }
    const double mom = (rho - 1.0) / rho_n;
    z = xn;
    for (int r = 0; r < 2; ++r) {
      auto& zr = z.row(r);
      const auto& xr = x.row(r);
      const auto& xnr = xn.row(r);
      for (std::size_t i = 0; i < zr.size(); ++i) zr[i] += mom * (xnr[i] - xr[i]);
    }
    x = std::move(xn);
    rho = rho_n;
    out.iterations = t + 1;
    const double rel = (den > 0.0) ? std::sqrt(num / den) : std::numeric_limits<double>::infinity();
    const bool last = (t + 1 == budget);
    if (trace_stride != 0 ? (t % trace_stride == 0 || last) : last) {
      obj_trace.push_back(full_objective(pb, x, lam));
      rel_trace.push_back(std::isfinite(rel) ? rel : 0.0);
    }
    if (den > 0.0 && rel < stop_eps) {
      out.converged = true;
      break;
    }
  }
  return out;
}

// Inner-iteration budgets of the reweighting schedule: restarts at the
// configured positions, any additional loops spaced like the second gap.
inline std::vector<std::size_t> stage_budgets(const SolverConfig& cfg) {
  std::vector<std::size_t> cuts;
  if (cfg.outer_loops >= 1) cuts.push_back(cfg.restart_at[0]);
  if (cfg.outer_loops >= 2) cuts.push_back(cfg.restart_at[1]);
  const std::size_t gap = (cfg.outer_loops >= 2) ? cfg.restart_at[1] - cfg.restart_at[0]
                                                 : cfg.restart_at[0];
  for (std::size_t l = 2; l < cfg.outer_loops; ++l) {
    const std::size_t next = cuts.back() + gap;
    if (next >= cfg.max_iters) break;
    cuts.push_back(next);
  }
  std::vector<std::size_t> budgets;
  std::size_t prev = 0;
  for (std::size_t c : cuts) {
    budgets.push_back(c - prev);
    prev = c;
  }
  budgets.push_back(cfg.max_iters - prev);
  return budgets;
}

inline std::array<double, 2> floored(std::array<double, 2> lam) {
  for (double& v : lam) v = std::max(v, kLambdaFloor);
  return lam;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Reweighted FISTA engine.  Stages run the plain FISTA above; before each
// restart the weights are rebuilt from the current estimate and the
// thresholds are either re-estimated from the current gradient (default) or
// taken from the calibrated override.  An optional polish stage collapses the
// thresholds to the floor.
// ---------------------------------------------------------------------------
inline SolverResult fista(const FistaProblem& pb, const SolverConfig& cfg,
                          const Array2* init = nullptr) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  SolverResult res;
  Array2 x = init ? *init : Array2(pb.n);
  const double gamma = (cfg.gamma > 0.0) ? cfg.gamma : 0.9 / pb.lip;
  Weights lam = Weights::ones({kLambdaFloor, kLambdaFloor}, pb.rep.coeff_size());
  bool converged = false;
  std::size_t stage_index = 0;
  for (std::size_t budget : detail::stage_budgets(cfg)) {
    if (stage_index > 0) lam.w = update_weights(x, pb.rep, cfg.eps_reweight);
    if (cfg.lambda_override) {
      lam.lambda_global = detail::floored(*cfg.lambda_override);
    } else {
      Array2 g;
      pb.gradient_into(x, g);
      lam.lambda_global = update_lambda(g, pb.rep, cfg.tau);
    }
    const auto st = detail::fista_stage(pb, x, lam, gamma, budget, cfg.stop_eps,
                                        cfg.trace_stride, res.objective_trace,
                                        res.relative_change_trace);
    res.iterations_run += st.iterations;
    converged = st.converged;
    ++stage_index;
  }
  if (cfg.polish_iters > 0) {
    const Weights polish = Weights::ones({kLambdaFloor, kLambdaFloor}, pb.rep.coeff_size());
    const auto st = detail::fista_stage(pb, x, polish, gamma, cfg.polish_iters, cfg.stop_eps,
                                        cfg.trace_stride, res.objective_trace,
                                        res.relative_change_trace);
    res.iterations_run += st.iterations;
    converged = st.converged;
  }
  res.converged = converged;
  if (res.objective_trace.empty())
    res.objective_trace.push_back(detail::full_objective(pb, x, lam));
  res.x_hat = PolarimetricSignal::from_matrix(x, pb.rep.height, pb.rep.width);
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// ---------------------------------------------------------------------------
// Reconstruction strategies.
// ---------------------------------------------------------------------------

// Combined reweighted FISTA on min_X ||Lambda (X Psi^T)||_1 + 1/2 ||Y - A X Phi||_F^2.
inline SolverResult solve_combined_rfista(const MeasurementSet& y, const SensingMatrix& phi,
                                          const MixingMatrix& a, const SparseRepresentation& rep,
                                          const SolverConfig& cfg) {
  const FistaProblem pb = make_problem(a.a, &phi, y.y, rep);
  return fista(pb, cfg);
}

// Sequential strategy: compressed-sensing recovery of the mixed signals Y0
// (same engine, identity mixing) followed by the closed-form unmixing
// X = A^{-1} Y0.  Stage-1 errors are amplified by A^{-1}.
inline SolverResult solve_two_stage(const MeasurementSet& y, const SensingMatrix& phi,
                                    const MixingMatrix& a, const SparseRepresentation& rep,
                                    const SolverConfig& cfg) {
  Mat2 a_inv;
  try {
    a_inv = a.a.inverse();
  } catch (const NumericalError&) {
    throw NumericalError("solve_two_stage: mixing matrix is singular");
  }
  const FistaProblem pb = make_problem(Mat2::identity(), &phi, y.y, rep);
  SolverResult res = fista(pb, cfg);
  const Array2 x = mat2_times(a_inv, res.x_hat.as_matrix());
  res.x_hat = PolarimetricSignal::from_matrix(x, rep.height, rep.width);
  return res;
}

// Generalized forward-backward splitting for the constrained objective:
// sparsity, nonnegativity, and the component inequality x_S >= x_P enter
// through three auxiliary variables with relaxation weights mu_i; each prox
// uses step gamma / mu_i.  The returned estimate is projected exactly
// feasible.  When no init is supplied the iteration starts from the
// reweighted-FISTA solution of the same problem (pass a zero-valued init for
// a cold start).
inline SolverResult solve_constrained_gfb(const MeasurementSet& y, const SensingMatrix& phi,
                                          const MixingMatrix& a, const SparseRepresentation& rep,
                                          const SolverConfig& cfg,
                                          const SolverResult* init = nullptr) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const FistaProblem pb = make_problem(a.a, &phi, y.y, rep);
  SolverResult res;
  Array2 x(pb.n);
  if (init) {
    x = init->x_hat.as_matrix();
    if (x.cols() != pb.n) throw ConfigError("solve_constrained_gfb: init shape mismatch");
  } else {
    SolverResult warm = fista(pb, cfg);
    x = warm.x_hat.as_matrix();
    res.iterations_run = warm.iterations_run;
  }
  const double gamma = (cfg.gamma > 0.0) ? cfg.gamma : 0.9 / pb.lip;
  const auto& mu = cfg.gfb_weights;
  std::array<Array2, 3> u{x, x, x};
  Weights lam = Weights::ones({kLambdaFloor, kLambdaFloor}, pb.rep.coeff_size());
  Array2 g, p, t;
  bool converged = false;
  std::size_t stage_index = 0;
  for (std::size_t budget : detail::stage_budgets(cfg)) {
    if (stage_index > 0) lam.w = update_weights(x, pb.rep, cfg.eps_reweight);
    if (cfg.lambda_override) {
      lam.lambda_global = detail::floored(*cfg.lambda_override);
    } else {
      pb.gradient_into(x, g);
      lam.lambda_global = update_lambda(g, pb.rep, cfg.tau);
    }
    converged = false;
    for (std::size_t it = 0; it < budget; ++it) {
      pb.gradient_into(x, g);
      p = x;
      for (int r = 0; r < 2; ++r) {
        auto& pr = p.row(r);
        const auto& gr = g.row(r);
        const auto& xr = x.row(r);
        for (std::size_t i = 0; i < pr.size(); ++i) pr[i] = 2.0 * xr[i] - gamma * gr[i];
      }
      for (int which = 0; which < 3; ++which) {
        t = p;
        for (int r = 0; r < 2; ++r) {
          auto& tr = t.row(r);
          const auto& ur = u[which].row(r);
          for (std::size_t i = 0; i < tr.size(); ++i) tr[i] -= ur[i];
        }
        Array2 proxed;
        switch (which) {
          case 0:
            proxed = prox_l1_synthesis(t, lam, pb.rep, gamma / mu[0]);
            break;
          case 1:
            proxed = prox_positive(t);
            break;
          default:
            proxed = prox_inequality(t);
            break;
        }
        for (int r = 0; r < 2; ++r) {
          auto& ur = u[which].row(r);
          const auto& pr = proxed.row(r);
          const auto& xr = x.row(r);
          for (std::size_t i = 0; i < ur.size(); ++i) ur[i] += pr[i] - xr[i];
        }
      }
      Array2 xn(pb.n);
      for (int r = 0; r < 2; ++r) {
        auto& xnr = xn.row(r);
        for (std::size_t i = 0; i < xnr.size(); ++i)
          xnr[i] = mu[0] * u[0].row(r)[i] + mu[1] * u[1].row(r)[i] + mu[2] * u[2].row(r)[i];
      }
      if (!xn.all_finite())
        throw NumericalError("gfb: non-finite iterate at inner iteration " + std::to_string(it));
      double num = 0.0, den = 0.0;
      for (int r = 0; r < 2; ++r) {
        const auto& xr = x.row(r);
        const auto& xnr = xn.row(r);
        for (std::size_t i = 0; i < xr.size(); ++i) {
          const double d = xnr[i] - xr[i];
          num += d * d;
          den += xr[i] * xr[i];
        }
      }
      x = std::move(xn);
      ++res.iterations_run;
      const double rel = (den > 0.0) ? std::sqrt(num / den)
                                     : std::numeric_limits<double>::infinity();
      const bool last = (it + 1 == budget);
      if (cfg.trace_stride != 0 ? (it % cfg.trace_stride == 0 || last) : last) {
        res.objective_trace.push_back(detail::full_objective(pb, x, lam));
        res.relative_change_trace.push_back(std::isfinite(rel) ? rel : 0.0);
      }
      if (den > 0.0 && rel < cfg.stop_eps) {
        converged = true;
        break;
      }
    }
    ++stage_index;
  }
  // Exact output feasibility: nonnegativity first, then the inequality
  // (midpoints of nonnegative pairs stay nonnegative).
  x = prox_inequality(prox_positive(x));
  res.converged = converged;
  if (res.objective_trace.empty())
    res.objective_trace.push_back(detail::full_objective(pb, x, lam));
  res.x_hat = PolarimetricSignal::from_matrix(x, rep.height, rep.width);
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace polcam

#endif  // POLCAM_SOLVERS_HPP
