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

#include "wmfrag/codec.hpp"

#include "wmfrag/rng.hpp"

#include <algorithm>
#include <cmath>

namespace wmfrag {

Eigen::MatrixXd orthonormal_rows(std::uint64_t seed, int rows, int dim) {
  require(dim >= 1, ErrorCode::invalid_argument, "orthonormal_rows: dimension must be >= 1");
  require(rows >= 0 && rows <= dim, ErrorCode::invalid_argument,
          "orthonormal_rows: cannot build " + std::to_string(rows) + " orthonormal vectors in dimension " +
              std::to_string(dim));
  Rng rng(seed);
  Eigen::MatrixXd out(rows, dim);
  int attempts = 0;
  for (int i = 0; i < rows;) {
    Eigen::VectorXd v = rng.gaussian_vector(dim);
    const double raw = v.norm();
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < i; ++j) v -= out.row(j).dot(v) * out.row(j).transpose();
    const double n = v.norm();
    if (n <= 1e-8 * raw) {
      require(++attempts < 1000, ErrorCode::invalid_argument, "orthonormal_rows: repeated dependent draws");
      continue;
    }
    out.row(i) = (v / n).transpose();
    ++i;
  }
  return out;
}

Codec Codec::generate(std::uint64_t seed, int d) {
  // Columns of V are orthonormal, i.e. V^T V = I.
  return Codec(orthonormal_rows(seed, d, d).transpose());
}

ImageVec Codec::to_image(const LatentVec& z) const {
  require_dim(z.size(), dim(), "to_image");
  return ImageVec(v_ * z.values);
}

LatentVec Codec::to_latent(const ImageVec& image) const {
  require_dim(image.size(), dim(), "to_latent");
  return LatentVec(v_.transpose() * image.values);
}

std::optional<int> grid_side(int d) {
  if (d < 1) return std::nullopt;
  const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d))));
  if (n * n != d) return std::nullopt;
  return n;
}

RenderMap RenderMap::for_prior(const ContentPrior& prior) {
  const auto side = grid_side(prior.dim());
  require(side.has_value(), ErrorCode::invalid_argument,
          "render: d = " + std::to_string(prior.dim()) + " is not a perfect square");
  double lo = prior.means().front().minCoeff();
  double hi = prior.means().front().maxCoeff();
  for (const auto& mu : prior.means()) {
    lo = std::min(lo, mu.minCoeff());
    hi = std::max(hi, mu.maxCoeff());
  }
  RenderMap map;
  map.lo = lo - 4.0 * prior.sigma();
  map.hi = hi + 4.0 * prior.sigma();
  if (map.hi <= map.lo) map.hi = map.lo + 1.0;
  map.side = *side;
  return map;
}

Grid render(const ImageVec& image, const RenderMap& map) {
  require(map.lo < map.hi, ErrorCode::invalid_argument, "render: need lo < hi");
  require_dim(image.size(), static_cast<Eigen::Index>(map.side) * map.side, "render");
  Grid g(map.side, map.side);
  const double span = map.hi - map.lo;
  for (int r = 0; r < map.side; ++r)
    for (int c = 0; c < map.side; ++c)
      g(r, c) = std::clamp((image.values[r * map.side + c] - map.lo) / span, 0.0, 1.0);
  return g;
}

ImageVec unrender(const Grid& grid, const RenderMap& map) {
  require(grid.rows() == map.side && grid.cols() == map.side, ErrorCode::dimension_mismatch,
          "unrender: grid shape does not match render map");
  Eigen::VectorXd v(static_cast<Eigen::Index>(map.side) * map.side);
  const double span = map.hi - map.lo;
  for (int r = 0; r < map.side; ++r)
    for (int c = 0; c < map.side; ++c) v[r * map.side + c] = map.lo + grid(r, c) * span;
  return ImageVec(std::move(v));
}

}  // namespace wmfrag
