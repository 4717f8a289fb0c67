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

#ifndef POLCAM_OPTICS_HPP
#define POLCAM_OPTICS_HPP

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "polcam/common.hpp"

namespace polcam {

// ---------------------------------------------------------------------------
// Domain types.
// ---------------------------------------------------------------------------

// Complex refractive index written as n(1 + j*kappa), i.e. kappa is the
// attenuation ratio k/n, not the extinction coefficient itself.
struct ComplexRefractiveIndex {
  double n = 1.0;
  double kappa = 0.0;
  double wavelength_nm = 780.0;
};

// Global incidence angle and the two mirror tilt directions.  A mirror tilted
// by t_i sees the incidence angle theta - t_i.
struct MirrorGeometry {
  double theta_deg = 50.0;
  double t1_deg = 12.0;
  double t2_deg = -12.0;

  double theta1_deg() const { return theta_deg - t1_deg; }
  double theta2_deg() const { return theta_deg - t2_deg; }
};

// The 2x2 mixing matrix A = Q * A_raw / 2 with Q = diag(1, -1) and A_raw the
// matrix of intensity reflection coefficients of the two tilt directions.
struct MixingMatrix {
  Mat2 a;      // A
  Mat2 a_raw;  // [[r1s, r1p], [r2s, r2p]]

  static Mat2 q() { return Mat2{{{{1.0, 0.0}, {0.0, -1.0}}}}; }
};

// ---------------------------------------------------------------------------
// Fresnel intensity reflection on an absorbing medium.
// ---------------------------------------------------------------------------

namespace detail {
inline void check_theta(double theta_deg) {
  // The grazing endpoint is admitted so limiting checks can evaluate it.
  if (!(theta_deg >= 0.0 && theta_deg <= 90.0))
    throw ConfigError("incidence angle must lie in [0, 90] degrees");
}
}  // namespace detail

// Auxiliary quantities u, v with u = Re, v = Im of sqrt(n_complex^2 - sin^2).
// Computed from the real closed form
//   A = n^2 (1 - kappa^2) - sin^2(theta),  B = A^2 + 4 n^4 kappa^2,
//   u = sqrt((A + sqrt(B)) / 2),           v = sqrt((-A + sqrt(B)) / 2).
inline std::pair<double, double> auxiliary_uv(const ComplexRefractiveIndex& index,
                                              double theta_deg) {
  detail::check_theta(theta_deg);
  const double n2 = index.n * index.n;
  const double k2 = index.kappa * index.kappa;
  const double s = std::sin(deg2rad(theta_deg));
  const double a = n2 * (1.0 - k2) - s * s;
  const double b = a * a + 4.0 * n2 * n2 * k2;
  const double sb = std::sqrt(b);
  const double u = std::sqrt(std::max(0.5 * (a + sb), 0.0));
  const double v = std::sqrt(std::max(0.5 * (sb - a), 0.0));
  return {u, v};
}

// Intensity reflection coefficient for S (TE) polarization.
inline double fresnel_s(const ComplexRefractiveIndex& index, double theta_deg) {
  const auto [u, v] = auxiliary_uv(index, theta_deg);
  const double c = std::cos(deg2rad(theta_deg));
  const double num = (c - u) * (c - u) + v * v;
  const double den = (c + u) * (c + u) + v * v;
  return num / den;
}

// Intensity reflection coefficient for P (TM) polarization.
inline double fresnel_p(const ComplexRefractiveIndex& index, double theta_deg) {
  const auto [u, v] = auxiliary_uv(index, theta_deg);
  const double c = std::cos(deg2rad(theta_deg));
  const double n2 = index.n * index.n;
  const double e_re = n2 * (1.0 - index.kappa * index.kappa);  // Re(n_complex^2)
  const double e_im = 2.0 * n2 * index.kappa;                  // Im(n_complex^2)
  const double num = (e_re * c - u) * (e_re * c - u) + (e_im * c - v) * (e_im * c - v);
  const double den = (e_re * c + u) * (e_re * c + u) + (e_im * c + v) * (e_im * c + v);
  return num / den;
}

// ---------------------------------------------------------------------------
// Mixing matrix and conditioning.
// ---------------------------------------------------------------------------

inline MixingMatrix mixing_matrix(const MirrorGeometry& geometry,
                                  const ComplexRefractiveIndex& index) {
  const double th1 = geometry.theta1_deg();
  const double th2 = geometry.theta2_deg();
  if (!(th1 > 0.0 && th1 < 90.0 && th2 > 0.0 && th2 < 90.0))
    throw ConfigError("mirror incidence angles theta - t_i must lie strictly in (0, 90) degrees");
  MixingMatrix out;
  out.a_raw(0, 0) = fresnel_s(index, th1);
  out.a_raw(0, 1) = fresnel_p(index, th1);
  out.a_raw(1, 0) = fresnel_s(index, th2);
  out.a_raw(1, 1) = fresnel_p(index, th2);
  out.a = MixingMatrix::q() * out.a_raw * 0.5;
  return out;
}

// Spectral condition number sigma_max / sigma_min; +infinity sentinel for
// singular (or numerically singular) matrices.
inline double condition_number(const MixingMatrix& m) {
  const auto sv = m.a.singular_values();
  if (sv[1] <= 0.0 || sv[1] < 1e-12 * sv[0])
    return std::numeric_limits<double>::infinity();
  return sv[0] / sv[1];
}

// ---------------------------------------------------------------------------
// Bundled aluminum optical constants.
//
// Tabulated from the Lorentz-Drude parameterization of Rakic et al. 1998
// (Appl. Opt. 37, 5271), sampled every 5 nm over [450, 850] nm.  The same
// values ship as data/aluminum_nk.txt; a test pins file <-> table equality.
// ---------------------------------------------------------------------------

struct MaterialRow {
  double wavelength_nm, n, k;  // k is the extinction coefficient (kappa = k/n)
};

inline constexpr std::array<MaterialRow, 81> kAluminumTable{{
    {450.0, 0.58970124732203943, 5.3107100098838576},
    {455.0, 0.60520428352444477, 5.3705659291742478},
    {460.0, 0.62107099307084435, 5.4302573016619053},
    {465.0, 0.63730396296675429, 5.4897680635770936},
    {470.0, 0.65390460403853568, 5.5490817641101291},
    {475.0, 0.67087310826739721, 5.6081816561960345},
    {480.0, 0.68820840885322054, 5.6670507928633169},
    {485.0, 0.70590814361602128, 5.7256721300544173},
    {490.0, 0.72396862259059214, 5.7840286367763385},
    {495.0, 0.74238480091301062, 5.8421034133539234},
    {500.0, 0.76115025833330718, 5.899879818435851},
    {505.0, 0.78025718691372903, 5.9573416052453743},
    {510.0, 0.79969638868362491, 6.0144730673746958},
    {515.0, 0.81945728521675987, 6.0712591941938667},
    {520.0, 0.83952794127118502, 6.127685835683109},
    {525.0, 0.85989510478187592, 6.1837398762020852},
    {530.0, 0.88054426561801713, 6.2394094163823812},
    {535.0, 0.90145973560601167, 6.2946839619721411},
    {540.0, 0.92262475237188468, 6.3495546180770388},
    {545.0, 0.9440216095690227, 6.4040142868328234},
    {550.0, 0.96563181602601889, 6.4580578661154364},
    {555.0, 0.98743628627239621, 6.5116824464497043},
    {560.0, 1.0094155647760523, 6.5648875028214997},
    {565.0, 1.0315500860555789, 6.6176750776357327},
    {570.0, 1.0538204726148854, 6.6700499505976634},
    {575.0, 1.0762078723902275, 6.7220197908307302},
    {580.0, 1.0986943371057329, 6.773595286081262},
    {585.0, 1.1212632426091378, 6.8247902433973815},
    {590.0, 1.1438997519117691, 6.8756216552002432},
    {595.0, 1.1665913212929426, 6.9261097241802343},
    {600.0, 1.1893282494547976, 6.9762778399322505},
    {605.0, 1.2121042693321322, 7.0261524996690987},
    {610.0, 1.2349171817711826, 7.0757631646891967},
    {615.0, 1.2577695298813523, 7.1251420434830237},
    {620.0, 1.2806693124133992, 7.1743237913927489},
    {625.0, 1.303630733988669, 7.2233451155312149},
    {630.0, 1.3266749893371852, 7.2722442721515099},
    {635.0, 1.3498310778089011, 7.3210604417609417},
    {640.0, 1.3731366431755514, 7.3698329649131331},
    {645.0, 1.3966388319643426, 7.4186004187108843},
    {650.0, 1.4203951610211774, 7.4673995105426298},
    {655.0, 1.4444743813735246, 7.5162637614141428},
    {660.0, 1.4689573203382376, 7.5652219464290971},
    {665.0, 1.4939376766671333, 7.6142962546025608},
    {670.0, 1.5195227336752171, 7.6635001244745578},
    {675.0, 1.5458339419316054, 7.7128357063415063},
    {680.0, 1.5730073052306974, 7.7622908970567623},
    {685.0, 1.6011934800797478, 7.8118358904223069},
    {690.0, 1.6305574686391879, 7.8614191869806005},
    {695.0, 1.6612777467973026, 7.9109630141595213},
    {700.0, 1.6935446220436949, 7.9603581250106634},
    {705.0, 1.7275575600123425, 8.0094579764519729},
    {710.0, 1.7635211555242851, 8.0580723429377468},
    {715.0, 1.8016393578873688, 8.1059605075978318},
    {720.0, 1.8421074996307309, 8.1528243003619352},
    {725.0, 1.8851016377192487, 8.198301432011716},
    {730.0, 1.930764720427024, 8.2419598129141889},
    {735.0, 1.9791891763052907, 8.2832938470213886},
    {740.0, 2.0303957306127511, 8.3217240429654975},
    {745.0, 2.0843086443735479, 8.3566016473780973},
    {750.0, 2.1407281956685313, 8.3872203063537896},
    {755.0, 2.1993021134493165, 8.4128368768643522},
    {760.0, 2.2594988066582142, 8.4327032697003048},
    {765.0, 2.3205864811169441, 8.4461104100219906},
    {770.0, 2.3816233374775577, 8.4524438800601605},
    {775.0, 2.4414645775196853, 8.4512485164703897},
    {780.0, 2.4987914023016389, 8.442296377920643},
    {785.0, 2.5521651203100952, 8.4256496295758758},
    {790.0, 2.6001057700897436, 8.4017078953276467},
    {795.0, 2.6411897418489514, 8.3712295146448614},
    {800.0, 2.6741558586950864, 8.3353186368893262},
    {805.0, 2.6980057900075685, 8.2953751809592973},
    {810.0, 2.7120839407292161, 8.2530113840715114},
    {815.0, 2.7161247329611045, 8.2099451725598076},
    {820.0, 2.7102609228856807, 8.1678849810497844},
    {825.0, 2.6949936760933726, 8.1284216550171742},
    {830.0, 2.6711315508219204, 8.0929405992447059},
    {835.0, 2.639709703276961, 8.0625624100077911},
    {840.0, 2.6019018591963641, 8.0381144722794549},
    {845.0, 2.558936204258611, 8.0201309456018404},
    {850.0, 2.5120232847926394, 8.0088751629976134},
}};

// Linear interpolation in an (ascending) material table; exact at nodes.
inline ComplexRefractiveIndex index_from_table(const std::vector<MaterialRow>& table,
                                               double wavelength_nm) {
  if (table.size() < 2) throw ConfigError("material table needs at least two rows");
  if (wavelength_nm < table.front().wavelength_nm || wavelength_nm > table.back().wavelength_nm)
    throw ConfigError("wavelength outside the material table range");
  std::size_t hi = 1;
  while (hi + 1 < table.size() && table[hi].wavelength_nm < wavelength_nm) ++hi;
  const MaterialRow& a = table[hi - 1];
  const MaterialRow& b = table[hi];
  double n, k;
  if (wavelength_nm == a.wavelength_nm) {
    n = a.n;
    k = a.k;
  } else if (wavelength_nm == b.wavelength_nm) {
    n = b.n;
    k = b.k;
  } else {
    const double t = (wavelength_nm - a.wavelength_nm) / (b.wavelength_nm - a.wavelength_nm);
    n = a.n + t * (b.n - a.n);
    k = a.k + t * (b.k - a.k);
  }
  return ComplexRefractiveIndex{n, k / n, wavelength_nm};
}

// Looks up the bundled aluminum table.
inline ComplexRefractiveIndex index_lookup(double wavelength_nm) {
  static const std::vector<MaterialRow> table(kAluminumTable.begin(), kAluminumTable.end());
  return index_from_table(table, wavelength_nm);
}

// Parses an external material table: one header line, then whitespace
// separated "wavelength_nm n k" rows sorted ascending.
inline std::vector<MaterialRow> load_material_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open material table: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("material table is empty: " + path);
  std::vector<MaterialRow> table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    MaterialRow row{};
    if (!(ss >> row.wavelength_nm >> row.n >> row.k))
      throw ConfigError("malformed material table row: " + line);
    if (!table.empty() && row.wavelength_nm <= table.back().wavelength_nm)
      throw ConfigError("material table rows must be sorted ascending by wavelength");
    table.push_back(row);
  }
  if (table.size() < 2) throw ConfigError("material table needs at least two rows");
  return table;
}

}  // namespace polcam

#endif  // POLCAM_OPTICS_HPP
