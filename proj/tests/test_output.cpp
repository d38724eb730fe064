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


#include "doctest.h"
#include "support.hpp"
#include "wmfrag/output.hpp"

#include <zlib.h>

#include <cstring>
#include <vector>

using namespace wmfrag;
using wmfrag::test::error_code_of;

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

// Minimal well-formedness check: balanced tags, quoted attributes, escaped text.
bool well_formed(const std::string& xml) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  if (xml.rfind("<?xml", 0) == 0) i = xml.find("?>") + 2;
  bool seen_root = false;
  while (i < xml.size()) {
    const std::size_t lt = xml.find('<', i);
    const std::string text = xml.substr(i, lt == std::string::npos ? std::string::npos : lt - i);
    for (std::size_t a = text.find('&'); a != std::string::npos; a = text.find('&', a + 1)) {
      const std::size_t semi = text.find(';', a);
      if (semi == std::string::npos || semi - a > 6) return false;
    }
    if (lt == std::string::npos) break;
    const std::size_t gt = xml.find('>', lt);
    if (gt == std::string::npos) return false;
    std::string tag = xml.substr(lt + 1, gt - lt - 1);
    if (count_of(tag, "\"") % 2 != 0) return false;
    if (tag.empty()) return false;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
    } else {
      const bool self_closing = tag.back() == '/';
      const std::string name = tag.substr(0, tag.find_first_of(" /"));
      if (stack.empty() && seen_root) return false;
      seen_root = true;
      if (!self_closing) stack.push_back(name);
    }
    i = gt + 1;
  }
  return seen_root && stack.empty();
}

CsvTable table(const std::string& text) { return parse_csv(text); }

std::uint32_t be32(const std::string& s, std::size_t at) {
  return (std::uint32_t(static_cast<unsigned char>(s[at])) << 24) |
         (std::uint32_t(static_cast<unsigned char>(s[at + 1])) << 16) |
         (std::uint32_t(static_cast<unsigned char>(s[at + 2])) << 8) | std::uint32_t(static_cast<unsigned char>(s[at + 3]));
}

}  // namespace

TEST_SUITE("output") {
  TEST_CASE("CSV parsing") {
    const CsvTable t = table("a,b\n1,2\n3,4\n");
    CHECK(t.columns == std::vector<std::string>{"a", "b"});
    CHECK(t.rows.size() == 2);
    CHECK(t.rows[1][t.column("b")] == "4");
    CHECK(error_code_of([&] { (void)t.column("c"); }) == ErrorCode::invalid_argument);
  }

  TEST_CASE("single point: one marker and no line") {
    const std::string svg = plot_svg(table("x,y\n1,0.5\n"), "x", "y", "");
    CHECK(count_of(svg, "<circle") == 1);
    CHECK(count_of(svg, "<polyline") == 0);
    CHECK(well_formed(svg));
  }

  TEST_CASE("grouped series average repeated x and draw one line per group") {
    const std::string csv =
        "mode,t,acc\nu,100,0.9\nu,100,1.0\nu,500,0.6\nu,1000,0.5\ng,100,0.7\ng,1000,0.5\n";
    const std::string svg = plot_svg(table(csv), "t", "acc", "mode", {"acc <vs> t & more", 640, 400});
    CHECK(count_of(svg, "<polyline") == 2);
    CHECK(count_of(svg, "<circle") == 5);
    CHECK(svg.find("&lt;vs&gt; t &amp; more") != std::string::npos);
    CHECK(svg.find("width=\"640\"") != std::string::npos);
    CHECK(well_formed(svg));
  }

  TEST_CASE("rows with non-finite y are skipped, non-numeric columns rejected") {
    const std::string svg = plot_svg(table("x,y\n1,nan\n2,0.5\n3,0.4\n"), "x", "y", "");
    CHECK(count_of(svg, "<circle") == 2);
    CHECK(error_code_of([] { (void)plot_svg(parse_csv("x,y\n1,abc\n"), "x", "y", ""); }) ==
          ErrorCode::invalid_argument);
    CHECK(error_code_of([] { (void)plot_svg(parse_csv("x,y\n1,2\n"), "x", "z", ""); }) ==
          ErrorCode::invalid_argument);
  }

  TEST_CASE("PNG structure and pixels") {
    Grid g(2, 3);
    g << 0.0, 0.5, 1.0, 0.25, 0.75, 0.1;
    const std::string png = encode_png(g, 2);
    CHECK(png.compare(0, 8, "\x89PNG\r\n\x1a\n", 8) == 0);
    CHECK(png.substr(12, 4) == "IHDR");
    CHECK(be32(png, 16) == 6);  // width = cols * scale
    CHECK(be32(png, 20) == 4);  // height = rows * scale
    CHECK(png[24] == 8);
    CHECK(png[25] == 0);
    // Every chunk CRC covers type + data.
    std::size_t at = 8;
    std::string idat;
    while (at < png.size()) {
      const std::uint32_t len = be32(png, at);
      const std::string type = png.substr(at + 4, 4);
      const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(png.data() + at + 4), len + 4);
      CHECK(crc == be32(png, at + 8 + len));
      if (type == "IDAT") idat += png.substr(at + 8, len);
      at += 12 + len;
    }
    CHECK(at == png.size());
    std::vector<unsigned char> raw(4 * (1 + 6));
    uLongf raw_len = raw.size();
    REQUIRE(uncompress(raw.data(), &raw_len, reinterpret_cast<const Bytef*>(idat.data()), idat.size()) == Z_OK);
    REQUIRE(raw_len == raw.size());
    for (int y = 0; y < 4; ++y) {
      CHECK(raw[y * 7] == 0);
      for (int x = 0; x < 6; ++x) {
        const double v = g(y / 2, x / 2);
        CHECK(int(raw[y * 7 + 1 + x]) == int(std::lround(255.0 * v)));
      }
    }
  }
}
