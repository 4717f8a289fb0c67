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

#ifndef POLCAM_IO_HPP
#define POLCAM_IO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "polcam/common.hpp"
#include "polcam/sensing.hpp"

namespace polcam {

using json = nlohmann::json;

// %.17g: enough digits for exact double round-trips, compact for short values.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  os << text;
  if (!os) throw ConfigError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void save_json(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline json load_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV: comma-separated, first line is the header, no quoting (all emitted
// cells are plain numbers or simple tokens).
// ---------------------------------------------------------------------------
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const {
    std::ostringstream os;
    emit_row(os, header);
    for (const auto& r : rows) emit_row(os, r);
    return os.str();
  }

  static Csv parse(const std::string& text) {
    Csv out;
    std::istringstream is(text);
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto cells = split_row(line);
      if (first) {
        out.header = std::move(cells);
        first = false;
      } else {
        out.rows.push_back(std::move(cells));
      }
    }
    return out;
  }

  double number(std::size_t row, const std::string& column) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == column) return std::stod(rows.at(row).at(c));
    throw ConfigError("CSV column not found: " + column);
  }

 private:
  static void emit_row(std::ostringstream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      os << cells[i];
    }
    os << '\n';
  }
  static std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t pos = line.find(',', start);
      if (pos == std::string::npos) {
        cells.push_back(line.substr(start));
        break;
      }
      cells.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    return cells;
  }
};

inline void write_csv(const std::filesystem::path& path, const Csv& table) {
  write_text_file(path, table.to_string());
}

inline Csv read_csv(const std::filesystem::path& path) {
  return Csv::parse(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Replayable text container: one JSON header line followed by named blocks
// of CSV rows.  Layout:
//   #POLCAM v1 <kind> <json-metadata>
//   #BLOCK <name>
//   <comma-separated doubles>        (one line per matrix row)
// ---------------------------------------------------------------------------
namespace detail {

inline void emit_double_row(std::ostringstream& os, const std::vector<double>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) os << ',';
    os << format_double(row[i]);
  }
  os << '\n';
}

struct Container {
  std::string kind;
  json meta;
  std::vector<std::pair<std::string, std::vector<std::vector<double>>>> blocks;

  const std::vector<std::vector<double>>& block(const std::string& name) const {
    for (const auto& [n, b] : blocks)
      if (n == name) return b;
    throw ConfigError("container block not found: " + name);
  }
  bool has_block(const std::string& name) const {
    for (const auto& [n, b] : blocks)
      if (n == name) return true;
    return false;
  }
};

inline std::string container_to_string(const Container& c) {
  std::ostringstream os;
  os << "#POLCAM v1 " << c.kind << ' ' << c.meta.dump() << '\n';
  for (const auto& [name, rows] : c.blocks) {
    os << "#BLOCK " << name << '\n';
    for (const auto& r : rows) emit_double_row(os, r);
  }
  return os.str();
}

inline Container parse_container(const std::string& text) {
  Container out;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.rfind("#POLCAM v1 ", 0) != 0)
    throw ConfigError("container: missing #POLCAM v1 header");
  {
    std::string rest = line.substr(11);
    const std::size_t sp = rest.find(' ');
    if (sp == std::string::npos) throw ConfigError("container: malformed header");
    out.kind = rest.substr(0, sp);
    try {
      out.meta = json::parse(rest.substr(sp + 1));
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("container: bad header JSON: ") + e.what());
    }
  }
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("#BLOCK ", 0) == 0) {
      out.blocks.emplace_back(line.substr(7), std::vector<std::vector<double>>{});
      continue;
    }
    if (out.blocks.empty()) throw ConfigError("container: data before first #BLOCK");
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t pos = line.find(',', start);
      const std::string cell =
          (pos == std::string::npos) ? line.substr(start) : line.substr(start, pos - start);
      row.push_back(std::stod(cell));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    out.blocks.back().second.push_back(std::move(row));
  }
  return out;
}

inline std::vector<std::vector<double>> array2_rows(const Array2& a) {
  return {a.r0, a.r1};
}

inline Array2 rows_to_array2(const std::vector<std::vector<double>>& rows,
                             const std::string& what) {
  if (rows.size() != 2 || rows[0].size() != rows[1].size())
    throw ConfigError("container: block " + what + " is not a 2-row matrix");
  Array2 out(rows[0].size());
  out.r0 = rows[0];
  out.r1 = rows[1];
  return out;
}

}  // namespace detail

inline void save_measurements(const std::filesystem::path& path, const MeasurementSet& ms,
                              const json& extra_meta = json::object()) {
  detail::Container c;
  c.kind = "measurement_set";
  c.meta = extra_meta;
  c.meta["m"] = ms.y.cols();
  c.meta["sigma"] = ms.sigma;
  c.meta["snr_db"] = ms.snr_db;
  c.meta["seed"] = ms.seed;
  c.blocks.emplace_back("y", detail::array2_rows(ms.y));
  if (ms.y_tilde) c.blocks.emplace_back("y_tilde", detail::array2_rows(*ms.y_tilde));
  if (ms.y_bar) c.blocks.emplace_back("y_bar", detail::array2_rows(*ms.y_bar));
  write_text_file(path, detail::container_to_string(c));
}

inline MeasurementSet load_measurements(const std::filesystem::path& path) {
  const auto c = detail::parse_container(read_text_file(path));
  if (c.kind != "measurement_set")
    throw ConfigError("container kind mismatch: expected measurement_set, got " + c.kind);
  MeasurementSet ms;
  ms.y = detail::rows_to_array2(c.block("y"), "y");
  if (c.has_block("y_tilde")) ms.y_tilde = detail::rows_to_array2(c.block("y_tilde"), "y_tilde");
  if (c.has_block("y_bar")) ms.y_bar = detail::rows_to_array2(c.block("y_bar"), "y_bar");
  ms.sigma = c.meta.value("sigma", 0.0);
  ms.snr_db = c.meta.value("snr_db", 300.0);
  ms.seed = c.meta.value("seed", std::uint64_t{0});
  return ms;
}

inline void save_sensing(const std::filesystem::path& path, const SensingMatrix& phi) {
  detail::Container c;
  c.kind = "sensing_matrix";
  c.meta = {{"n", phi.n}, {"m", phi.m}, {"seed", phi.seed}};
  std::vector<double> rows(phi.row_indices.begin(), phi.row_indices.end());
  std::vector<double> perm(phi.permutation.begin(), phi.permutation.end());
  c.blocks.emplace_back("row_indices", std::vector<std::vector<double>>{rows});
  c.blocks.emplace_back("permutation", std::vector<std::vector<double>>{perm});
  write_text_file(path, detail::container_to_string(c));
}

inline SensingMatrix load_sensing(const std::filesystem::path& path) {
  const auto c = detail::parse_container(read_text_file(path));
  if (c.kind != "sensing_matrix")
    throw ConfigError("container kind mismatch: expected sensing_matrix, got " + c.kind);
  SensingMatrix phi;
  phi.n = c.meta.at("n").get<std::size_t>();
  phi.m = c.meta.at("m").get<std::size_t>();
  phi.seed = c.meta.at("seed").get<std::uint64_t>();
  const auto& ri = c.block("row_indices");
  const auto& pm = c.block("permutation");
  if (ri.size() != 1 || pm.size() != 1)
    throw ConfigError("sensing container: index blocks must be single rows");
  phi.row_indices.assign(ri[0].begin(), ri[0].end());
  phi.permutation.assign(pm[0].begin(), pm[0].end());
  if (phi.row_indices.size() != phi.m || phi.permutation.size() != phi.n)
    throw ConfigError("sensing container: index lengths disagree with metadata");
  return phi;
}

// ---------------------------------------------------------------------------
// 16-bit PGM (P5, maxval 65535, big-endian samples).  Values map affinely
// from [lo, hi] to [0, 65535]; the affine parameters go to a sidecar JSON so
// the image is invertible back to physical units.
// ---------------------------------------------------------------------------
inline void write_pgm16(const std::filesystem::path& path, const std::vector<double>& data,
                        std::size_t height, std::size_t width, double lo, double hi) {
  if (data.size() != height * width) throw ConfigError("write_pgm16: size mismatch");
  if (!(hi >= lo)) throw ConfigError("write_pgm16: need hi >= lo");
  std::ostringstream os(std::ios::binary);
  os << "P5\n" << width << ' ' << height << "\n65535\n";
  const double span = hi - lo;
  for (double v : data) {
    double t = (span > 0.0) ? (v - lo) / span : 0.0;
    t = std::min(1.0, std::max(0.0, t));
    const auto q = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    os.put(static_cast<char>(q >> 8));
    os.put(static_cast<char>(q & 0xff));
  }
  write_text_file(path, os.str());
  save_json(path.string() + ".json",
            json{{"lo", lo}, {"hi", hi}, {"height", height}, {"width", width}});
}

struct Pgm16 {
  std::size_t height = 0, width = 0;
  std::vector<std::uint16_t> samples;
};

inline Pgm16 read_pgm16(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::istringstream is(text);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 65535) throw ConfigError("read_pgm16: not a 16-bit P5 file");
  is.get();  // single whitespace after maxval
  Pgm16 out;
  out.height = h;
  out.width = w;
  out.samples.resize(w * h);
  for (auto& s : out.samples) {
    const int hi_byte = is.get(), lo_byte = is.get();
    if (hi_byte < 0 || lo_byte < 0) throw ConfigError("read_pgm16: truncated data");
    s = static_cast<std::uint16_t>((hi_byte << 8) | lo_byte);
  }
  return out;
}

}  // namespace polcam

#endif  // POLCAM_IO_HPP
