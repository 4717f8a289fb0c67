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

#ifndef POLCAM_COMMON_HPP
#define POLCAM_COMMON_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace polcam {

// Error taxonomy: invalid configuration/arguments vs. numerical breakdown.
// The CLI maps these onto exit codes 2 and 3 respectively.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline double deg2rad(double deg) { return deg * (kPi / 180.0); }

// ---------------------------------------------------------------------------
// Mat2: dense 2x2 real matrix with the closed forms this project needs
// (products, inverse, singular values).  All signals have exactly two
// polarimetric components, so nothing larger ever appears.
// ---------------------------------------------------------------------------
struct Mat2 {
  // m[r][c], row-major.
  std::array<std::array<double, 2>, 2> m{{{0.0, 0.0}, {0.0, 0.0}}};

  static Mat2 identity() { return Mat2{{{{1.0, 0.0}, {0.0, 1.0}}}}; }

  double& operator()(int r, int c) { return m[r][c]; }
  double operator()(int r, int c) const { return m[r][c]; }

  Mat2 transpose() const { return Mat2{{{{m[0][0], m[1][0]}, {m[0][1], m[1][1]}}}}; }

  Mat2 operator*(const Mat2& o) const {
    Mat2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j];
    return r;
  }

  Mat2 operator*(double s) const {
    return Mat2{{{{m[0][0] * s, m[0][1] * s}, {m[1][0] * s, m[1][1] * s}}}};
  }

  double det() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

  // Singular values (descending), via the stable closed form on the Gram
  // matrix invariants.
  std::array<double, 2> singular_values() const {
    const double a = m[0][0], b = m[0][1], c = m[1][0], d = m[1][1];
    const double q1 = a * a + b * b + c * c + d * d;          // trace(M^T M)
    const double dt = det();
    // sigma_max^2 + sigma_min^2 = q1, sigma_max * sigma_min = |det|.
    const double disc = std::sqrt(std::max(q1 * q1 - 4.0 * dt * dt, 0.0));
    const double smax2 = 0.5 * (q1 + disc);
    const double smax = std::sqrt(smax2);
    const double smin = (smax > 0.0) ? std::abs(dt) / smax : 0.0;
    return {smax, smin};
  }

  double norm2() const { return singular_values()[0]; }

  Mat2 inverse() const {
    const double dt = det();
    const auto sv = singular_values();
    if (sv[1] < 1e-12 * sv[0] || dt == 0.0)
      throw NumericalError("Mat2::inverse: matrix is singular or near-singular");
    const double inv = 1.0 / dt;
    return Mat2{{{{m[1][1] * inv, -m[0][1] * inv}, {-m[1][0] * inv, m[0][0] * inv}}}};
  }
};

// ---------------------------------------------------------------------------
// Array2: a pair of equal-length rows.  Used for 2xN polarimetric signals,
// 2xM measurement blocks, and 2xN' coefficient planes.
// ---------------------------------------------------------------------------
struct Array2 {
  std::vector<double> r0, r1;

  Array2() = default;
  explicit Array2(std::size_t n, double fill = 0.0) : r0(n, fill), r1(n, fill) {}

  std::size_t cols() const { return r0.size(); }

  std::vector<double>& row(int i) { return i == 0 ? r0 : r1; }
  const std::vector<double>& row(int i) const { return i == 0 ? r0 : r1; }

  bool same_shape(const Array2& o) const { return r0.size() == o.r0.size() && r1.size() == o.r1.size(); }

  double frobenius_sq() const {
    double s = 0.0;
    for (double v : r0) s += v * v;
    for (double v : r1) s += v * v;
    return s;
  }

  double dot(const Array2& o) const {
    double s = 0.0;
    for (std::size_t i = 0; i < r0.size(); ++i) s += r0[i] * o.r0[i];
    for (std::size_t i = 0; i < r1.size(); ++i) s += r1[i] * o.r1[i];
    return s;
  }

  bool all_finite() const {
    for (double v : r0)
      if (!std::isfinite(v)) return false;
    for (double v : r1)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

// Y = A * X  columnwise (A is 2x2, X is 2xN).
inline Array2 mat2_times(const Mat2& a, const Array2& x) {
  Array2 y(x.cols());
  for (std::size_t i = 0; i < x.cols(); ++i) {
    y.r0[i] = a(0, 0) * x.r0[i] + a(0, 1) * x.r1[i];
    y.r1[i] = a(1, 0) * x.r0[i] + a(1, 1) * x.r1[i];
  }
  return y;
}

// ---------------------------------------------------------------------------
// Robust statistics.
// ---------------------------------------------------------------------------

// Median (of a copy; the input is left untouched).  Even-length inputs use
// the midpoint convention.
inline double median(std::vector<double> v) {
  if (v.empty()) throw ConfigError("median: empty input");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
  return 0.5 * (v[mid - 1] + hi);
}

// Scaled median absolute deviation: 1.4826 * median(|x - median(x)|), the
// Gaussian-consistent robust spread estimator.
inline double mad(const std::vector<double>& v) {
  const double med = median(v);
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = std::abs(v[i] - med);
  return 1.4826 * median(std::move(dev));
}

// Quartiles by linear interpolation (used for sweep summaries).
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw ConfigError("quantile: empty input");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace polcam

#endif  // POLCAM_COMMON_HPP
