// Copyright 2026 The wmfrag Authors
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

#include "wmfrag/output.hpp"

#include "wmfrag/common.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

namespace wmfrag {

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  require(it != columns.end(), ErrorCode::invalid_argument, "csv: no column named '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (t.columns.empty()) {
      t.columns = std::move(cells);
      continue;
    }
    require(cells.size() == t.columns.size(), ErrorCode::parse,
            "csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) + " fields, expected " +
                std::to_string(t.columns.size()));
    t.rows.push_back(std::move(cells));
  }
  require(!t.columns.empty(), ErrorCode::parse, "csv: missing header row");
  return t;
}

namespace {

double parse_number(const std::string& s, const std::string& column) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  require(used == s.size() && !s.empty(), ErrorCode::invalid_argument,
          "plot: column '" + column + "' is not numeric (value '" + s + "')");
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// 1-2-5 steps giving roughly `target` intervals over [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int target) {
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step)
    ticks.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return ticks;
}

struct Acc {
  double sum = 0.0;
  double sum_sq = 0.0;
  int n = 0;
};

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string plot_svg(const CsvTable& table, const std::string& x, const std::string& y, const std::string& group_by,
                     const PlotOptions& opts) {
  const std::size_t xi = table.column(x);
  const std::size_t yi = table.column(y);
  const std::optional<std::size_t> gi = group_by.empty() ? std::nullopt : std::optional(table.column(group_by));

  std::map<std::string, std::map<double, Acc>> groups;
  for (const auto& row : table.rows) {
    const double xv = parse_number(row[xi], x);
    const double yv = parse_number(row[yi], y);
    if (!std::isfinite(xv) || !std::isfinite(yv)) continue;
    Acc& a = groups[gi ? row[*gi] : std::string("all")][xv];
    a.sum += yv;
    a.sum_sq += yv * yv;
    ++a.n;
  }
  require(!groups.empty(), ErrorCode::invalid_argument, "plot: no finite (" + x + ", " + y + ") pairs to draw");

  struct Pt {
    double x, mean, se;
  };
  std::map<std::string, std::vector<Pt>> series;
  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  for (const auto& [name, points] : groups) {
    for (const auto& [xv, a] : points) {
      const double mean = a.sum / a.n;
      const double var = a.n > 1 ? std::max(0.0, (a.sum_sq - a.n * mean * mean) / (a.n - 1)) : 0.0;
      const Pt p{xv, mean, std::sqrt(var / a.n)};
      series[name].push_back(p);
      x_lo = std::min(x_lo, xv);
      x_hi = std::max(x_hi, xv);
      y_lo = std::min(y_lo, mean - p.se);
      y_hi = std::max(y_hi, mean + p.se);
    }
  }
  const auto widen = [](double& lo, double& hi) {
    if (hi - lo < 1e-12) {
      const double pad = std::max(std::abs(lo) * 0.1, 0.5);
      lo -= pad;
      hi += pad;
    } else {
      const double pad = 0.05 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  };
  widen(x_lo, x_hi);
  widen(y_lo, y_hi);

  const double left = 70, right = 170, top = 40, bottom = 60;
  const double pw = opts.width - left - right;
  const double ph = opts.height - top - bottom;
  const auto sx = [&](double v) { return left + (v - x_lo) / (x_hi - x_lo) * pw; };
  const auto sy = [&](double v) { return top + ph - (v - y_lo) / (y_hi - y_lo) * ph; };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width << "\" height=\"" << opts.height
     << "\" viewBox=\"0 0 " << opts.width << ' ' << opts.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const std::string title = opts.title.empty() ? y + " vs " + x : opts.title;
  os << "<text x=\"" << px(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
     << xml_escape(title) << "</text>\n";
  os << "<g stroke=\"black\" fill=\"none\">\n"
     << "<line x1=\"" << px(left) << "\" y1=\"" << px(top + ph) << "\" x2=\"" << px(left + pw) << "\" y2=\""
     << px(top + ph) << "\"/>\n"
     << "<line x1=\"" << px(left) << "\" y1=\"" << px(top) << "\" x2=\"" << px(left) << "\" y2=\"" << px(top + ph)
     << "\"/>\n</g>\n";
  os << "<g class=\"ticks\">\n";
  for (double t : nice_ticks(x_lo, x_hi, 6)) {
    os << "<line x1=\"" << px(sx(t)) << "\" y1=\"" << px(top + ph) << "\" x2=\"" << px(sx(t)) << "\" y2=\""
       << px(top + ph + 5) << "\" stroke=\"black\"/>"
       << "<text x=\"" << px(sx(t)) << "\" y=\"" << px(top + ph + 19) << "\" text-anchor=\"middle\">" << fmt(t)
       << "</text>\n";
  }
  for (double t : nice_ticks(y_lo, y_hi, 6)) {
    os << "<line x1=\"" << px(left - 5) << "\" y1=\"" << px(sy(t)) << "\" x2=\"" << px(left) << "\" y2=\""
       << px(sy(t)) << "\" stroke=\"black\"/>"
       << "<text x=\"" << px(left - 8) << "\" y=\"" << px(sy(t) + 4) << "\" text-anchor=\"end\">" << fmt(t)
       << "</text>\n";
  }
  os << "</g>\n";
  os << "<text x=\"" << px(left + pw / 2) << "\" y=\"" << px(opts.height - 15.0) << "\" text-anchor=\"middle\">"
     << xml_escape(x) << "</text>\n"
     << "<text transform=\"translate(18," << px(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << xml_escape(y) << "</text>\n";

  std::size_t color = 0;
  double legend_y = top + 10;
  for (const auto& [name, pts] : series) {
    const char* c = kPalette[color++ % kPalette.size()];
    os << "<g class=\"series\" stroke=\"" << c << "\" fill=\"" << c << "\">\n";
    if (pts.size() > 1) {
      os << "<polyline fill=\"none\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) os << (i ? " " : "") << px(sx(pts[i].x)) << ',' << px(sy(pts[i].mean));
      os << "\"/>\n";
    }
    for (const Pt& p : pts) {
      if (p.se > 0.0) {
        const double xx = sx(p.x);
        os << "<path fill=\"none\" d=\"M" << px(xx) << ' ' << px(sy(p.mean - p.se)) << " V" << px(sy(p.mean + p.se))
           << " M" << px(xx - 4) << ' ' << px(sy(p.mean - p.se)) << " h8 M" << px(xx - 4) << ' '
           << px(sy(p.mean + p.se)) << " h8\"/>\n";
      }
      os << "<circle cx=\"" << px(sx(p.x)) << "\" cy=\"" << px(sy(p.mean)) << "\" r=\"3\"/>\n";
    }
    os << "</g>\n";
    os << "<g class=\"legend\"><rect x=\"" << px(left + pw + 15) << "\" y=\"" << px(legend_y - 9) << "\" width=\"12\" height=\"12\" fill=\""
       << c << "\"/><text x=\"" << px(left + pw + 32) << "\" y=\"" << px(legend_y + 1) << "\">"
       << xml_escape(group_by.empty() ? name : group_by + "=" + name) << "</text></g>\n";
    legend_y += 18;
  }
  os << "</svg>\n";
  return os.str();
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

void put_chunk(std::string& out, const char* type, const std::string& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::string body = std::string(type, 4) + data;
  out += body;
  put_u32(out, static_cast<std::uint32_t>(
                   crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

}  // namespace

std::string encode_png(const Grid& grid, int scale) {
  require(scale >= 1, ErrorCode::invalid_argument, "png: scale must be >= 1");
  require(grid.size() > 0, ErrorCode::invalid_argument, "png: empty grid");
  const auto w = static_cast<std::uint32_t>(grid.cols() * scale);
  const auto h = static_cast<std::uint32_t>(grid.rows() * scale);
  std::string raw;
  raw.reserve(static_cast<std::size_t>(h) * (w + 1));
  for (std::uint32_t r = 0; r < h; ++r) {
    raw.push_back(0);  // filter: none
    for (std::uint32_t c = 0; c < w; ++c) {
      const double v = std::clamp(grid(r / scale, c / scale), 0.0, 1.0);
      raw.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
    }
  }
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(len, '\0');
  require(compress2(reinterpret_cast<Bytef*>(packed.data()), &len, reinterpret_cast<const Bytef*>(raw.data()),
                    static_cast<uLong>(raw.size()), 9) == Z_OK,
          ErrorCode::io, "png: zlib compression failed");
  packed.resize(len);

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  put_u32(ihdr, w);
  put_u32(ihdr, h);
  ihdr += std::string("\x08\x00\x00\x00\x00", 5);  // 8-bit, grayscale, deflate, no filter, no interlace
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", packed);
  put_chunk(png, "IEND", "");
  return png;
}

}  // namespace wmfrag
