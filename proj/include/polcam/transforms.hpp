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

#ifndef POLCAM_TRANSFORMS_HPP
#define POLCAM_TRANSFORMS_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "polcam/common.hpp"
#include "polcam/imaging.hpp"

namespace polcam {

enum class WaveletFamily { haar_undecimated, symmlet_undecimated, identity };

namespace detail {

inline const std::vector<double>& haar_filter() {
  static const std::vector<double> h = {0.7071067811865476, 0.7071067811865476};
  return h;
}

// 8-tap least-asymmetric (symmlet) scaling filter, unit l2 norm.
inline const std::vector<double>& sym4_filter() {
  static const std::vector<double> h = {
      -0.07576571478927333, -0.02963552764599851, 0.49761866763201545,
      0.8037387518059161,   0.29785779560527736,  -0.09921954357684722,
      -0.012603967262037833, 0.0322231006040427};
  return h;
}

// Quadrature mirror filter: g[k] = (-1)^k h[L-1-k].
inline std::vector<double> qmf(const std::vector<double>& h) {
  const std::size_t L = h.size();
  std::vector<double> g(L);
  for (std::size_t k = 0; k < L; ++k)
    g[k] = ((k % 2 == 0) ? 1.0 : -1.0) * h[L - 1 - k];
  return g;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// SparseRepresentation: an undecimated (a-trous) wavelet frame with periodic
// boundaries, or the identity.  Filters carry a 1/sqrt(2) per stage so the
// analysis operator is a tight frame: synthesize is both the exact adjoint
// and an exact left inverse of analyze.
// ---------------------------------------------------------------------------
struct SparseRepresentation {
  WaveletFamily family = WaveletFamily::haar_undecimated;
  int levels = 3;                      // J; 0 for identity
  std::size_t height = 1, width = 0;   // 1D signals have height == 1

  std::vector<double> hs, gs;  // stage-scaled lowpass / highpass taps

  std::size_t signal_size() const { return height * width; }
  bool is_2d() const { return height > 1; }

  // Band count: J + 1 in 1D (details finest-to-coarsest, then the coarse
  // band), 3J + 1 in 2D (three orientations per level, then coarse).
  std::size_t n_bands() const {
    if (family == WaveletFamily::identity) return 1;
    return is_2d() ? static_cast<std::size_t>(3 * levels + 1)
                   : static_cast<std::size_t>(levels + 1);
  }

  std::size_t coeff_size() const { return n_bands() * signal_size(); }
};

inline SparseRepresentation make_representation(WaveletFamily family, int levels,
                                                std::size_t height, std::size_t width) {
  SparseRepresentation rep;
  rep.family = family;
  rep.height = height;
  rep.width = width;
  if (height == 0 || width == 0)
    throw ConfigError("make_representation: empty signal extent");
  if (family == WaveletFamily::identity) {
    rep.levels = 0;
    return rep;
  }
  if (levels < 1) throw ConfigError("make_representation: wavelet levels must be >= 1");
  rep.levels = levels;
  const auto& h = (family == WaveletFamily::haar_undecimated) ? detail::haar_filter()
                                                              : detail::sym4_filter();
  const double inv_sq2 = 1.0 / std::sqrt(2.0);
  rep.hs.resize(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) rep.hs[k] = h[k] * inv_sq2;
  const auto g = detail::qmf(h);
  rep.gs.resize(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) rep.gs[k] = g[k] * inv_sq2;
  return rep;
}

inline SparseRepresentation make_representation_1d(WaveletFamily family, int levels, std::size_t n) {
  return make_representation(family, levels, 1, n);
}

// ---------------------------------------------------------------------------
// CoefficientArray: per-component coefficient planes, stored as the flat
// concatenation of the bands (each band is signal-sized).  Carries a copy of
// its representation so shapes are self-describing.
// ---------------------------------------------------------------------------
struct CoefficientArray {
  Array2 c;  // 2 x (n_bands * signal_size)
  SparseRepresentation rep;

  std::size_t band_size() const { return rep.signal_size(); }
  std::size_t n_bands() const { return rep.n_bands(); }

  // Pointer to band b of component comp.
  double* band(int comp, std::size_t b) { return c.row(comp).data() + b * band_size(); }
  const double* band(int comp, std::size_t b) const { return c.row(comp).data() + b * band_size(); }
};

namespace detail {

// out += f[k] * circshift(a, -D*k) along a flat length-n signal; `sign`
// selects the analysis (-) or synthesis (+) shift direction.
inline void accum_conv_1d(const double* a, std::size_t n, const std::vector<double>& f,
                          std::size_t dilation, int sign, double* out) {
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double fk = f[k];
    std::size_t off = (dilation * k) % n;
    if (sign > 0) off = (n - off) % n;  // synthesis shifts the other way
    // out[i] += fk * a[(i + off) mod n], split at the wrap point.
    const std::size_t head = n - off;
    for (std::size_t i = 0; i < head; ++i) out[i] += fk * a[i + off];
    for (std::size_t i = head; i < n; ++i) out[i] += fk * a[i + off - n];
  }
}

// Same along image columns (axis 0): shifts whole rows.
inline void accum_conv_rows(const double* a, std::size_t h, std::size_t w,
                            const std::vector<double>& f, std::size_t dilation, int sign,
                            double* out) {
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double fk = f[k];
    std::size_t off = (dilation * k) % h;
    if (sign > 0) off = (h - off) % h;
    for (std::size_t r = 0; r < h; ++r) {
      const std::size_t src = (r + off < h) ? r + off : r + off - h;
      const double* ap = a + src * w;
      double* op = out + r * w;
      for (std::size_t cix = 0; cix < w; ++cix) op[cix] += fk * ap[cix];
    }
  }
}

// Same along image rows (axis 1): per-row circular shift.
inline void accum_conv_cols(const double* a, std::size_t h, std::size_t w,
                            const std::vector<double>& f, std::size_t dilation, int sign,
                            double* out) {
  for (std::size_t r = 0; r < h; ++r)
    accum_conv_1d(a + r * w, w, f, dilation, sign, out + r * w);
}

inline void analyze_row_1d(const SparseRepresentation& rep, const std::vector<double>& x,
                           double* out) {
  const std::size_t n = rep.signal_size();
  std::vector<double> a = x, next(n);
  for (int j = 0; j < rep.levels; ++j) {
    const std::size_t dil = std::size_t{1} << j;
    double* det = out + static_cast<std::size_t>(j) * n;
    std::fill(det, det + n, 0.0);
    std::fill(next.begin(), next.end(), 0.0);
    accum_conv_1d(a.data(), n, rep.gs, dil, -1, det);
    accum_conv_1d(a.data(), n, rep.hs, dil, -1, next.data());
    std::swap(a, next);
  }
  std::copy(a.begin(), a.end(), out + static_cast<std::size_t>(rep.levels) * n);
}

inline void synthesize_row_1d(const SparseRepresentation& rep, const double* c,
                              std::vector<double>& x) {
  const std::size_t n = rep.signal_size();
  std::vector<double> a(c + static_cast<std::size_t>(rep.levels) * n,
                        c + static_cast<std::size_t>(rep.levels + 1) * n);
  std::vector<double> next(n);
  for (int j = rep.levels - 1; j >= 0; --j) {
    const std::size_t dil = std::size_t{1} << j;
    const double* det = c + static_cast<std::size_t>(j) * n;
    std::fill(next.begin(), next.end(), 0.0);
    accum_conv_1d(a.data(), n, rep.hs, dil, +1, next.data());
    accum_conv_1d(det, n, rep.gs, dil, +1, next.data());
    std::swap(a, next);
  }
  x = std::move(a);
}

inline void analyze_row_2d(const SparseRepresentation& rep, const std::vector<double>& img,
                           double* out) {
  const std::size_t h = rep.height, w = rep.width, sz = h * w;
  std::vector<double> a = img, lo(sz), hi(sz), next(sz);
  for (int j = 0; j < rep.levels; ++j) {
    const std::size_t dil = std::size_t{1} << j;
    // Along rows (axis 1) first ...
    std::fill(lo.begin(), lo.end(), 0.0);
    std::fill(hi.begin(), hi.end(), 0.0);
    accum_conv_cols(a.data(), h, w, rep.hs, dil, -1, lo.data());
    accum_conv_cols(a.data(), h, w, rep.gs, dil, -1, hi.data());
    // ... then columns (axis 0); three detail orientations per level.
    double* lh = out + static_cast<std::size_t>(3 * j + 0) * sz;
    double* hl = out + static_cast<std::size_t>(3 * j + 1) * sz;
    double* hh = out + static_cast<std::size_t>(3 * j + 2) * sz;
    std::fill(lh, lh + sz, 0.0);
    std::fill(hl, hl + sz, 0.0);
    std::fill(hh, hh + sz, 0.0);
    std::fill(next.begin(), next.end(), 0.0);
    accum_conv_rows(lo.data(), h, w, rep.gs, dil, -1, lh);
    accum_conv_rows(hi.data(), h, w, rep.hs, dil, -1, hl);
    accum_conv_rows(hi.data(), h, w, rep.gs, dil, -1, hh);
    accum_conv_rows(lo.data(), h, w, rep.hs, dil, -1, next.data());
    std::swap(a, next);
  }
  std::copy(a.begin(), a.end(), out + static_cast<std::size_t>(3 * rep.levels) * sz);
}

inline void synthesize_row_2d(const SparseRepresentation& rep, const double* c,
                              std::vector<double>& img) {
  const std::size_t h = rep.height, w = rep.width, sz = h * w;
  std::vector<double> a(c + static_cast<std::size_t>(3 * rep.levels) * sz,
                        c + static_cast<std::size_t>(3 * rep.levels + 1) * sz);
  std::vector<double> lo(sz), hi(sz), next(sz);
  for (int j = rep.levels - 1; j >= 0; --j) {
    const std::size_t dil = std::size_t{1} << j;
    const double* lh = c + static_cast<std::size_t>(3 * j + 0) * sz;
    const double* hl = c + static_cast<std::size_t>(3 * j + 1) * sz;
    const double* hh = c + static_cast<std::size_t>(3 * j + 2) * sz;
    std::fill(lo.begin(), lo.end(), 0.0);
    std::fill(hi.begin(), hi.end(), 0.0);
    accum_conv_rows(a.data(), h, w, rep.hs, dil, +1, lo.data());
    accum_conv_rows(lh, h, w, rep.gs, dil, +1, lo.data());
    accum_conv_rows(hl, h, w, rep.hs, dil, +1, hi.data());
    accum_conv_rows(hh, h, w, rep.gs, dil, +1, hi.data());
    std::fill(next.begin(), next.end(), 0.0);
    accum_conv_cols(lo.data(), h, w, rep.hs, dil, +1, next.data());
    accum_conv_cols(hi.data(), h, w, rep.gs, dil, +1, next.data());
    std::swap(a, next);
  }
  img = std::move(a);
}

inline void analyze_component(const SparseRepresentation& rep, const std::vector<double>& x,
                              double* out) {
  if (rep.family == WaveletFamily::identity) {
    std::copy(x.begin(), x.end(), out);
  } else if (rep.is_2d()) {
    analyze_row_2d(rep, x, out);
  } else {
    analyze_row_1d(rep, x, out);
  }
}

inline void synthesize_component(const SparseRepresentation& rep, const double* c,
                                 std::vector<double>& x) {
  if (rep.family == WaveletFamily::identity) {
    x.assign(c, c + rep.signal_size());
  } else if (rep.is_2d()) {
    synthesize_row_2d(rep, c, x);
  } else {
    synthesize_row_1d(rep, c, x);
  }
}

}  // namespace detail

// Applies the analysis operator (Psi^T) to each component row.
inline CoefficientArray analyze(const SparseRepresentation& rep, const Array2& x) {
  if (x.cols() != rep.signal_size()) throw ConfigError("analyze: shape mismatch");
  CoefficientArray out;
  out.rep = rep;
  out.c = Array2(rep.coeff_size());
  detail::analyze_component(rep, x.r0, out.c.r0.data());
  detail::analyze_component(rep, x.r1, out.c.r1.data());
  return out;
}

inline CoefficientArray analyze(const SparseRepresentation& rep, const PolarimetricSignal& x) {
  return analyze(rep, x.as_matrix());
}

// Applies the synthesis operator (Psi): exact left inverse and exact adjoint
// of analyze.
inline Array2 synthesize(const SparseRepresentation& rep, const CoefficientArray& coeffs) {
  if (coeffs.c.cols() != rep.coeff_size()) throw ConfigError("synthesize: shape mismatch");
  Array2 out(rep.signal_size());
  detail::synthesize_component(rep, coeffs.c.r0.data(), out.r0);
  detail::synthesize_component(rep, coeffs.c.r1.data(), out.r1);
  return out;
}

}  // namespace polcam

#endif  // POLCAM_TRANSFORMS_HPP
