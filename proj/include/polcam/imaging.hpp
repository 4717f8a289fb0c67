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

#ifndef POLCAM_IMAGING_HPP
#define POLCAM_IMAGING_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "polcam/common.hpp"

namespace polcam {

// ---------------------------------------------------------------------------
// PolarimetricSignal: the pair of nonnegative intensity components
// (x_S, x_P), stored flattened row-major with layout metadata so the same
// type carries 1D signals (height == 1) and 2D images.  Ground-truth scenes
// satisfy x_S >= x_P >= 0 elementwise; reconstructions may violate both and
// are flagged, not rejected.
// ---------------------------------------------------------------------------
struct PolarimetricSignal {
  std::vector<double> x_s, x_p;
  std::size_t height = 1, width = 0;

  PolarimetricSignal() = default;
  PolarimetricSignal(std::size_t h, std::size_t w)
      : x_s(h * w, 0.0), x_p(h * w, 0.0), height(h), width(w) {}

  std::size_t size() const { return x_s.size(); }
  bool is_2d() const { return height > 1; }

  // Flattened 2xN view used by the sensing and solver layers.
  Array2 as_matrix() const {
    Array2 m;
    m.r0 = x_s;
    m.r1 = x_p;
    return m;
  }

  static PolarimetricSignal from_matrix(const Array2& m, std::size_t h, std::size_t w) {
    PolarimetricSignal s;
    s.x_s = m.r0;
    s.x_p = m.r1;
    s.height = h;
    s.width = w;
    return s;
  }

  std::vector<double> x_t() const {
    std::vector<double> t(size());
    for (std::size_t i = 0; i < size(); ++i) t[i] = x_s[i] + x_p[i];
    return t;
  }

  bool satisfies_ground_truth_invariants() const {
    for (std::size_t i = 0; i < size(); ++i)
      if (x_p[i] < 0.0 || x_s[i] < x_p[i]) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Scene construction.
// ---------------------------------------------------------------------------

// A constant block over a fractional span of a 1D signal.
struct Region1D {
  double f0, f1;    // fractional span [f0, f1) of the signal length
  double value;     // intensity on the block
};

enum class SceneKind { piecewise_1d, two_squares, hidden_objects };

struct SceneSpec {
  SceneKind kind = SceneKind::piecewise_1d;
  std::size_t n = 512;       // 1D length
  std::size_t side = 128;    // 2D square side
  double osc_big = 0.8;      // OSC of the big square (two-squares scene)
  double osc_small = 0.8;    // OSC of the nested small square
  std::uint64_t seed = 0;    // randomized placement (hidden-objects scene)
  // Optional custom layout for piecewise_1d; empty means the defaults below.
  std::vector<Region1D> regions_s, regions_p;
};

namespace detail {
// Default 1D layout.  Spans are fractions of N so the scene is
// resolution-consistent; x_S-only blocks and overlapping blocks are both
// present, x_S >= x_P everywhere, and the support stays well under half the
// signal so the wavelet coarse band of the scene is majority-zero at every
// tested size.
inline const std::vector<Region1D>& default_regions_s() {
  static const std::vector<Region1D> r = {
      {0.08, 0.18, 1.00}, {0.30, 0.38, 0.62}, {0.52, 0.64, 0.88}, {0.74, 0.77, 0.45}};
  return r;
}
inline const std::vector<Region1D>& default_regions_p() {
  static const std::vector<Region1D> r = {
      {0.08, 0.15, 0.55}, {0.52, 0.60, 0.75}, {0.74, 0.77, 0.35}};
  return r;
}
inline void paint(std::vector<double>& a, const Region1D& reg, std::size_t n) {
  const auto lo = static_cast<std::size_t>(reg.f0 * static_cast<double>(n));
  const auto hi = static_cast<std::size_t>(reg.f1 * static_cast<double>(n));
  for (std::size_t i = lo; i < hi && i < n; ++i) a[i] = reg.value;
}
}  // namespace detail

// Piecewise-constant 1D phantom with disjoint and overlapping component
// supports and x_S >= x_P everywhere.
inline PolarimetricSignal make_1d_test(std::size_t n, const SceneSpec& spec = {}) {
  if (n < 16) throw ConfigError("make_1d_test: n must be at least 16");
  PolarimetricSignal out(1, n);
  const auto& rs = spec.regions_s.empty() ? detail::default_regions_s() : spec.regions_s;
  const auto& rp = spec.regions_p.empty() ? detail::default_regions_p() : spec.regions_p;
  for (const auto& r : rs) detail::paint(out.x_s, r, n);
  for (const auto& r : rp) detail::paint(out.x_p, r, n);
  for (std::size_t i = 0; i < n; ++i)
    if (out.x_p[i] > out.x_s[i])
      throw ConfigError("make_1d_test: layout violates x_S >= x_P");
  return out;
}

// Two nested squares with identical total intensity and different OSC over a
// dark (zero-intensity) background.  Component values follow from inverting
// OSC = (x_S - x_P) / (x_S + x_P) at fixed x_T:
//   x_S = x_T (1 + osc) / 2,   x_P = x_T (1 - osc) / 2.
inline PolarimetricSignal make_two_squares(std::size_t side, double osc_big,
                                           double osc_small = 0.8) {
  if (side < 32) throw ConfigError("make_two_squares: side must be at least 32");
  if (osc_big < 0.0 || osc_big > 1.0 || osc_small < 0.0 || osc_small > 1.0)
    throw ConfigError("make_two_squares: OSC values must lie in [0, 1]");
  PolarimetricSignal out(side, side);
  const std::size_t b0 = side / 4, b1 = 3 * side / 4;        // big square
  const std::size_t s0 = 3 * side / 8, s1 = 5 * side / 8;    // nested small square
  for (std::size_t r = b0; r < b1; ++r) {
    for (std::size_t c = b0; c < b1; ++c) {
      const bool small = (r >= s0 && r < s1 && c >= s0 && c < s1);
      const double osc = small ? osc_small : osc_big;
      const double xt = 1.0;
      out.x_s[r * side + c] = xt * (1.0 + osc) / 2.0;
      out.x_p[r * side + c] = xt * (1.0 - osc) / 2.0;
    }
  }
  return out;
}

// Scene with objects that are invisible in total intensity: x_T equals the
// supplied base image exactly, and each mask region carries its own OSC.
inline PolarimetricSignal make_hidden_objects(const std::vector<double>& base_intensity,
                                              std::size_t height, std::size_t width,
                                              const std::vector<std::vector<std::uint8_t>>& object_masks,
                                              const std::vector<double>& osc_values,
                                              double background_osc = 0.0) {
  if (base_intensity.size() != height * width)
    throw ConfigError("make_hidden_objects: base image size mismatch");
  if (object_masks.size() != osc_values.size())
    throw ConfigError("make_hidden_objects: one OSC value per mask required");
  for (const auto& m : object_masks)
    if (m.size() != base_intensity.size())
      throw ConfigError("make_hidden_objects: mask shape mismatch");
  for (double o : osc_values)
    if (o < 0.0 || o > 1.0) throw ConfigError("make_hidden_objects: OSC outside [0, 1]");
  // Masks must be disjoint.
  std::vector<std::uint8_t> seen(base_intensity.size(), 0);
  for (const auto& m : object_masks)
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i]) {
        if (seen[i]) throw ConfigError("make_hidden_objects: masks overlap");
        seen[i] = 1;
      }
  PolarimetricSignal out(height, width);
  for (std::size_t i = 0; i < base_intensity.size(); ++i) {
    double osc = background_osc;
    for (std::size_t k = 0; k < object_masks.size(); ++k)
      if (object_masks[k][i]) {
        osc = osc_values[k];
        break;
      }
    out.x_s[i] = base_intensity[i] * (1.0 + osc) / 2.0;
    out.x_p[i] = base_intensity[i] * (1.0 - osc) / 2.0;
  }
  return out;
}

// Built-in hidden-objects layout: a piecewise-constant intensity image (two
// bright blocks over a mid-gray field with a dark strip) with four
// polarimetric objects that are invisible in total intensity — three in the
// field, one inside a block.
inline PolarimetricSignal make_hidden_objects_demo(std::size_t side) {
  if (side < 32) throw ConfigError("make_hidden_objects_demo: side must be at least 32");
  const std::size_t n = side * side;
  std::vector<double> base(n, 0.45);
  auto rect = [side](std::vector<double>& img, std::size_t r0, std::size_t r1, std::size_t c0,
                     std::size_t c1, double v) {
    for (std::size_t r = r0; r < r1; ++r)
      for (std::size_t c = c0; c < c1; ++c) img[r * side + c] = v;
  };
  rect(base, side / 16, side * 5 / 16, side / 8, side * 3 / 8, 0.85);
  rect(base, side / 16, side * 4 / 16, side * 9 / 16, side * 7 / 8, 0.70);
  rect(base, side * 6 / 16, side * 7 / 16, 0, side, 0.30);  // dark strip
  auto mask_rect = [side, n](std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    std::vector<std::uint8_t> m(n, 0);
    for (std::size_t r = r0; r < r1; ++r)
      for (std::size_t c = c0; c < c1; ++c) m[r * side + c] = 1;
    return m;
  };
  const std::vector<std::vector<std::uint8_t>> masks = {
      mask_rect(side * 9 / 16, side * 11 / 16, side / 8, side / 4),
      mask_rect(side * 10 / 16, side * 12 / 16, side * 7 / 16, side * 9 / 16),
      mask_rect(side * 13 / 16, side * 15 / 16, side * 11 / 16, side * 13 / 16),
      mask_rect(side * 2 / 16, side * 4 / 16, side * 3 / 16, side * 5 / 16)};
  const std::vector<double> osc = {0.8, 0.6, 0.4, 0.9};
  return make_hidden_objects(base, side, side, masks, osc, 0.0);
}

inline PolarimetricSignal make_scene(const SceneSpec& spec) {
  switch (spec.kind) {
    case SceneKind::piecewise_1d:
      return make_1d_test(spec.n, spec);
    case SceneKind::two_squares:
      return make_two_squares(spec.side, spec.osc_big, spec.osc_small);
    case SceneKind::hidden_objects:
      return make_hidden_objects_demo(spec.side);
  }
  throw ConfigError("make_scene: unknown scene kind");
}

// ---------------------------------------------------------------------------
// Polarimetric observables and scores.
// ---------------------------------------------------------------------------

// Orthogonal states contrast (x_S - x_P) / max(x_S + x_P, floor).  The floor
// regularizes dark pixels; ground-truth scenes yield values in [0, 1].
inline std::vector<double> osc_map(const PolarimetricSignal& x, double floor) {
  if (floor <= 0.0) throw ConfigError("osc_map: floor must be positive");
  std::vector<double> osc(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double den = std::max(x.x_s[i] + x.x_p[i], floor);
    osc[i] = (x.x_s[i] - x.x_p[i]) / den;
  }
  return osc;
}

// Default dark-pixel floor: 1e-6 times the peak total intensity.
inline double default_osc_floor(const PolarimetricSignal& x) {
  double mx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx = std::max(mx, x.x_s[i] + x.x_p[i]);
  return std::max(1e-6 * mx, std::numeric_limits<double>::min());
}

// PSNR of the concatenated component vector [x_S x_P] with peak taken over
// the true concatenation.  Returns +infinity when the signals coincide.
inline double psnr(const PolarimetricSignal& x_hat, const PolarimetricSignal& x_true) {
  if (x_hat.size() != x_true.size())
    throw ConfigError("psnr: shape mismatch");
  const std::size_t n = x_true.size();
  double mse = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ds = x_hat.x_s[i] - x_true.x_s[i];
    const double dp = x_hat.x_p[i] - x_true.x_p[i];
    mse += ds * ds + dp * dp;
    peak = std::max(peak, std::max(x_true.x_s[i], x_true.x_p[i]));
  }
  mse /= static_cast<double>(2 * n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

struct ErrorMaps {
  std::vector<double> intensity;  // |x_T(hat) - x_T(true)|
  std::vector<double> osc;        // |OSC(hat) - OSC(true)|
};

inline ErrorMaps error_map(const PolarimetricSignal& x_hat, const PolarimetricSignal& x_true) {
  if (x_hat.size() != x_true.size()) throw ConfigError("error_map: shape mismatch");
  const double floor = default_osc_floor(x_true);
  const auto osc_hat = osc_map(x_hat, floor);
  const auto osc_true = osc_map(x_true, floor);
  ErrorMaps maps;
  maps.intensity.resize(x_true.size());
  maps.osc.resize(x_true.size());
  for (std::size_t i = 0; i < x_true.size(); ++i) {
    maps.intensity[i] = std::abs((x_hat.x_s[i] + x_hat.x_p[i]) - (x_true.x_s[i] + x_true.x_p[i]));
    maps.osc[i] = std::abs(osc_hat[i] - osc_true[i]);
  }
  return maps;
}

}  // namespace polcam

#endif  // POLCAM_IMAGING_HPP
