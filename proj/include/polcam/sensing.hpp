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

#ifndef POLCAM_SENSING_HPP
#define POLCAM_SENSING_HPP

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "polcam/common.hpp"
#include "polcam/imaging.hpp"
#include "polcam/optics.hpp"
#include "polcam/rng.hpp"

namespace polcam {

// In-place unnormalized fast Walsh-Hadamard transform (Sylvester ordering).
// Length must be a power of two.  Applying it twice multiplies by n.
inline void fwht(std::vector<double>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw ConfigError("fwht: length must be a power of two");
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double x = a[j];
        const double y = a[j + h];
        a[j] = x + y;
        a[j + h] = x - y;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// SensingMatrix: the scrambled-Hadamard pattern matrix Phi (N x M).  Column k
// is Hadamard row row_indices[k] with its entries reordered by one shared
// pixel permutation: Phi[i][k] = H[row_indices[k]][permutation[i]].  The
// matrix is applied implicitly through the FWHT; materialize() produces the
// dense entries for tests and export.
// ---------------------------------------------------------------------------
struct SensingMatrix {
  std::size_t n = 0, m = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> row_indices;   // selected Hadamard rows
  std::vector<std::uint32_t> permutation;   // pixel scrambling, length n

  // X (2 x N) -> X * Phi (2 x M).
  Array2 apply(const Array2& x) const {
    if (x.cols() != n) throw ConfigError("SensingMatrix::apply: dimension mismatch");
    Array2 out(m);
    std::vector<double> t(n);
    for (int r = 0; r < 2; ++r) {
      std::fill(t.begin(), t.end(), 0.0);
      const auto& src = x.row(r);
      for (std::size_t i = 0; i < n; ++i) t[permutation[i]] = src[i];
      fwht(t);
      auto& dst = out.row(r);
      for (std::size_t k = 0; k < m; ++k) dst[k] = t[row_indices[k]];
    }
    return out;
  }

  // R (2 x M) -> R * Phi^T (2 x N).
  Array2 apply_transpose(const Array2& r_in) const {
    if (r_in.cols() != m) throw ConfigError("SensingMatrix::apply_transpose: dimension mismatch");
    Array2 out(n);
    std::vector<double> t(n);
    for (int r = 0; r < 2; ++r) {
      std::fill(t.begin(), t.end(), 0.0);
      const auto& src = r_in.row(r);
      for (std::size_t k = 0; k < m; ++k) t[row_indices[k]] = src[k];
      fwht(t);
      auto& dst = out.row(r);
      for (std::size_t i = 0; i < n; ++i) dst[i] = t[permutation[i]];
    }
    return out;
  }

  // Dense entries, row-major N x M.  Intended for small sizes (tests, export).
  std::vector<double> materialize() const {
    std::vector<double> phi(n * m);
    std::vector<double> t(n);
    for (std::size_t k = 0; k < m; ++k) {
      std::fill(t.begin(), t.end(), 0.0);
      t[row_indices[k]] = 1.0;
      fwht(t);  // row row_indices[k] of the order-n Hadamard matrix
      for (std::size_t i = 0; i < n; ++i) phi[i * m + k] = t[permutation[i]];
    }
    return phi;
  }
};

// Draws the sampling patterns: m distinct non-DC Hadamard rows under one
// shared pixel permutation.  The all-ones (DC) row is excluded for m <= n-1;
// at full sampling (m == n, the 0% compression case) all n rows including DC
// are kept so the system is invertible.
inline SensingMatrix scrambled_hadamard(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (n == 0 || (n & (n - 1)) != 0)
    throw ConfigError("scrambled_hadamard: n must be a power of two");
  if (m < 1 || m > n)
    throw ConfigError("scrambled_hadamard: m must satisfy 1 <= m <= n");
  SensingMatrix out;
  out.n = n;
  out.m = m;
  out.seed = seed;
  Rng rng(seed);
  if (m == n) {
    out.row_indices = rng.permutation(n);
  } else {
    auto pool = rng.permutation(n - 1);
    out.row_indices.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
    for (auto& r : out.row_indices) r += 1;  // skip the DC row (index 0)
  }
  out.permutation = rng.permutation(n);
  return out;
}

// ---------------------------------------------------------------------------
// Measurements.
// ---------------------------------------------------------------------------

struct NoiseSpec {
  double snr_db = 300.0;     // nominal SNR; values >= 300 dB mean "noiseless"
  std::uint64_t seed = 0;
};

struct MeasurementSet {
  Array2 y;                         // centered measurements (2 x M)
  std::optional<Array2> y_tilde;    // raw detector samples (physical model)
  std::optional<Array2> y_bar;      // subtracted constant term
  double sigma = 0.0;               // noise standard deviation
  double snr_db = 300.0;
  std::uint64_t seed = 0;
};

// Adds i.i.d. Gaussian noise at the requested SNR.  The signal power is the
// per-sample mean power of the (noiseless, centered) input, shared by both
// detectors; sigma^2 = P_signal / 10^(snr/10).  SNR is capped at 300 dB.
inline std::pair<Array2, double> add_noise(const Array2& y, double snr_db, std::uint64_t seed) {
  if (y.cols() == 0) throw ConfigError("add_noise: empty measurements");
  const double snr = std::min(snr_db, 300.0);
  const double p_signal = y.frobenius_sq() / static_cast<double>(2 * y.cols());
  const double sigma = std::sqrt(p_signal / std::pow(10.0, snr / 10.0));
  Array2 noisy = y;
  Rng rng(seed);
  for (int r = 0; r < 2; ++r)
    for (auto& v : noisy.row(r)) v += sigma * rng.gauss();
  return {std::move(noisy), sigma};
}

// ---------------------------------------------------------------------------
// Forward models.
// ---------------------------------------------------------------------------

// Ideal model: Y = A X Phi (+ noise), already centered.
inline MeasurementSet forward_ideal(const MixingMatrix& a, const PolarimetricSignal& x,
                                    const SensingMatrix& phi,
                                    std::optional<NoiseSpec> noise = std::nullopt) {
  if (x.size() != phi.n) throw ConfigError("forward_ideal: signal/pattern dimension mismatch");
  MeasurementSet out;
  out.y = mat2_times(a.a, phi.apply(x.as_matrix()));
  if (noise) {
    auto [noisy, sigma] = add_noise(out.y, noise->snr_db, noise->seed);
    out.y = std::move(noisy);
    out.sigma = sigma;
    out.snr_db = noise->snr_db;
    out.seed = noise->seed;
  }
  return out;
}

// Physical model: detector 1 integrates the mirrors tilted towards it
// (binary pattern (1 + Phi)/2), detector 2 the complement.  Noise is added to
// the raw samples; the constant term is subtracted afterwards, either the
// exact closed form (debugging) or the empirical per-detector mean over the M
// patterns (realistic default).  Noiseless with the exact mean this equals
// forward_ideal, which is the centering identity behind A = Q*A_raw/2.
inline MeasurementSet forward_physical(const Mat2& a_raw, const PolarimetricSignal& x,
                                       const SensingMatrix& phi,
                                       std::optional<NoiseSpec> noise = std::nullopt,
                                       bool exact_mean = false) {
  if (x.size() != phi.n) throw ConfigError("forward_physical: signal/pattern dimension mismatch");
  const std::size_t n = phi.n, m = phi.m;
  // v_i = r_is * x_S + r_ip * x_P, the per-detector pre-pattern intensity.
  Array2 v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v.r0[i] = a_raw(0, 0) * x.x_s[i] + a_raw(0, 1) * x.x_p[i];
    v.r1[i] = a_raw(1, 0) * x.x_s[i] + a_raw(1, 1) * x.x_p[i];
  }
  double s1 = 0.0, s2 = 0.0;  // total intensities v_i . 1
  for (std::size_t i = 0; i < n; ++i) {
    s1 += v.r0[i];
    s2 += v.r1[i];
  }
  const Array2 w = phi.apply(v);  // w_i = v_i * Phi
  Array2 y_tilde(m);
  for (std::size_t k = 0; k < m; ++k) {
    y_tilde.r0[k] = 0.5 * (s1 + w.r0[k]);
    y_tilde.r1[k] = 0.5 * (s2 - w.r1[k]);
  }
  MeasurementSet out;
  out.sigma = 0.0;
  if (noise) {
    // Noise level references the centered noiseless measurements
    // (rows w_i / 2), matching forward_ideal's convention.
    const double p_signal = 0.25 * w.frobenius_sq() / static_cast<double>(2 * m);
    const double snr = std::min(noise->snr_db, 300.0);
    out.sigma = std::sqrt(p_signal / std::pow(10.0, snr / 10.0));
    out.snr_db = noise->snr_db;
    out.seed = noise->seed;
    Rng rng(noise->seed);
    for (int r = 0; r < 2; ++r)
      for (auto& val : y_tilde.row(r)) val += out.sigma * rng.gauss();
  }
  Array2 y_bar(m);
  if (exact_mean) {
    for (std::size_t k = 0; k < m; ++k) {
      y_bar.r0[k] = 0.5 * s1;
      y_bar.r1[k] = 0.5 * s2;
    }
  } else {
    double mean1 = 0.0, mean2 = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      mean1 += y_tilde.r0[k];
      mean2 += y_tilde.r1[k];
    }
    mean1 /= static_cast<double>(m);
    mean2 /= static_cast<double>(m);
    for (std::size_t k = 0; k < m; ++k) {
      y_bar.r0[k] = mean1;
      y_bar.r1[k] = mean2;
    }
  }
  out.y = Array2(m);
  for (std::size_t k = 0; k < m; ++k) {
    out.y.r0[k] = y_tilde.r0[k] - y_bar.r0[k];
    out.y.r1[k] = y_tilde.r1[k] - y_bar.r1[k];
  }
  out.y_tilde = std::move(y_tilde);
  out.y_bar = std::move(y_bar);
  return out;
}

// ---------------------------------------------------------------------------
// Per-mirror tilt imperfection.
// ---------------------------------------------------------------------------

struct ImperfectionModel {
  double theta_bias_deg = 0.0;            // reconstruction-side bias on theta
  double tilt_error_halfwidth_deg = 1.0;  // per-mirror error half-width
  std::size_t tilt_levels = 11;           // discrete uniform levels (odd)
  std::uint64_t seed = 0;

  void validate() const {
    if (tilt_levels < 1 || tilt_levels % 2 == 0)
      throw ConfigError("ImperfectionModel: tilt_levels must be odd and >= 1");
    if (tilt_error_halfwidth_deg < 0.0)
      throw ConfigError("ImperfectionModel: tilt half-width must be >= 0");
  }
};

// Per-mirror tilt errors for both tilt directions: n draws for direction 1
// followed by n draws for direction 2, each uniform over tilt_levels values
// equally spaced in [-halfwidth, +halfwidth].
inline std::pair<std::vector<double>, std::vector<double>> draw_tilt_errors(
    const ImperfectionModel& imp, std::size_t n) {
  imp.validate();
  std::vector<double> e1(n, 0.0), e2(n, 0.0);
  if (imp.tilt_levels == 1 || imp.tilt_error_halfwidth_deg == 0.0) return {e1, e2};
  Rng rng(imp.seed);
  const double h = imp.tilt_error_halfwidth_deg;
  const double den = static_cast<double>(imp.tilt_levels - 1);
  for (auto& e : e1) e = h * (2.0 * static_cast<double>(rng.below(imp.tilt_levels)) / den - 1.0);
  for (auto& e : e2) e = h * (2.0 * static_cast<double>(rng.below(imp.tilt_levels)) / den - 1.0);
  return {e1, e2};
}

// Imperfect model: each mirror carries its own mixing matrix built from the
// perturbed tilt angles; Y = sum_i A_i X[:,i] Phi[i,:] (+ noise).  With zero
// imperfection this routes through forward_ideal so the outputs match
// bit-for-bit under identical noise seeds.
inline MeasurementSet forward_perpixel(const MirrorGeometry& geometry,
                                       const ComplexRefractiveIndex& index,
                                       const ImperfectionModel& imperfection,
                                       const PolarimetricSignal& x, const SensingMatrix& phi,
                                       std::optional<NoiseSpec> noise = std::nullopt) {
  imperfection.validate();
  if (x.size() != phi.n) throw ConfigError("forward_perpixel: signal/pattern dimension mismatch");
  if (imperfection.tilt_levels == 1 || imperfection.tilt_error_halfwidth_deg == 0.0)
    return forward_ideal(mixing_matrix(geometry, index), x, phi, noise);
  const auto [e1, e2] = draw_tilt_errors(imperfection, x.size());
  Array2 z(x.size());  // z[:,i] = A_i x[:,i]
  for (std::size_t i = 0; i < x.size(); ++i) {
    MirrorGeometry g = geometry;
    g.t1_deg += e1[i];
    g.t2_deg += e2[i];
    const MixingMatrix ai = mixing_matrix(g, index);
    z.r0[i] = ai.a(0, 0) * x.x_s[i] + ai.a(0, 1) * x.x_p[i];
    z.r1[i] = ai.a(1, 0) * x.x_s[i] + ai.a(1, 1) * x.x_p[i];
  }
  MeasurementSet out;
  out.y = phi.apply(z);
  if (noise) {
    auto [noisy, sigma] = add_noise(out.y, noise->snr_db, noise->seed);
    out.y = std::move(noisy);
    out.sigma = sigma;
    out.snr_db = noise->snr_db;
    out.seed = noise->seed;
  }
  return out;
}

// The noiseless per-pixel polarimetric mixture seen by the detectors before
// pattern sensing; equals A X in the ideal model.  This is the stage-1
// ground truth used to calibrate the two-stage solver's thresholds.
inline Array2 mixture_field(const MirrorGeometry& geometry, const ComplexRefractiveIndex& index,
                            const ImperfectionModel& imperfection, const PolarimetricSignal& x) {
  if (imperfection.tilt_levels == 1 || imperfection.tilt_error_halfwidth_deg == 0.0)
    return mat2_times(mixing_matrix(geometry, index).a, x.as_matrix());
  const auto [e1, e2] = draw_tilt_errors(imperfection, x.size());
  Array2 z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    MirrorGeometry g = geometry;
    g.t1_deg += e1[i];
    g.t2_deg += e2[i];
    const MixingMatrix ai = mixing_matrix(g, index);
    z.r0[i] = ai.a(0, 0) * x.x_s[i] + ai.a(0, 1) * x.x_p[i];
    z.r1[i] = ai.a(1, 0) * x.x_s[i] + ai.a(1, 1) * x.x_p[i];
  }
  return z;
}

// Compression rate r -> measurement count M = round((1 - r) * N).
inline std::size_t measurements_for_rate(std::size_t n, double compression_rate) {
  if (compression_rate < 0.0 || compression_rate >= 1.0)
    throw ConfigError("compression rate must lie in [0, 1)");
  const double md = std::round((1.0 - compression_rate) * static_cast<double>(n));
  return static_cast<std::size_t>(std::max(1.0, md));
}

}  // namespace polcam

#endif  // POLCAM_SENSING_HPP
