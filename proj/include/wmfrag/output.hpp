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

#ifndef WMFRAG_OUTPUT_HPP
#define WMFRAG_OUTPUT_HPP

#include "wmfrag/codec.hpp"

#include <string>
#include <vector>

namespace wmfrag {

/// Plain comma-separated table with a header row; no quoting.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Throws Error(invalid_argument) naming the column when absent.
  std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);

struct PlotOptions {
  std::string title;
  int width = 720;
  int height = 480;
};

/// Mean of `y` per (group, x) with a standard-error bar, one polyline per
/// group. Rows whose y is not finite are skipped. An empty `group_by` puts
/// every row in one group.
std::string plot_svg(const CsvTable& table, const std::string& x, const std::string& y,
                     const std::string& group_by, const PlotOptions& opts = {});

/// 8-bit grayscale PNG of a [0,1] grid, each cell drawn as scale x scale pixels.
std::string encode_png(const Grid& grid, int scale = 1);

}  // namespace wmfrag

#endif  // WMFRAG_OUTPUT_HPP
