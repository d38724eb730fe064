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

#ifndef WMFRAG_CODEC_HPP
#define WMFRAG_CODEC_HPP

#include "wmfrag/common.hpp"
#include "wmfrag/prior.hpp"

#include <cstdint>
#include <optional>

namespace wmfrag {

/// Rows of the result are orthonormal. Built from seeded standard Gaussian
/// draws by twice-applied modified Gram-Schmidt; a draw that is numerically
/// dependent on the earlier rows is discarded and redrawn.
Eigen::MatrixXd orthonormal_rows(std::uint64_t seed, int rows, int dim);

/// Fixed orthogonal map V between latent and image space: I = V z, z = V^T I.
class Codec {
 public:
  /// V with V^T V = I from seeded Gaussian draws.
  static Codec generate(std::uint64_t seed, int d);

  int dim() const { return static_cast<int>(v_.rows()); }
  const Eigen::MatrixXd& matrix() const { return v_; }

  ImageVec to_image(const LatentVec& z) const;
  LatentVec to_latent(const ImageVec& image) const;

 private:
  explicit Codec(Eigen::MatrixXd v) : v_(std::move(v)) {}
  Eigen::MatrixXd v_;
};

/// n x n grid, values in [0, 1] after rendering; row-major pixel order.
using Grid = Eigen::MatrixXd;

struct RenderMap {
  double lo = 0.0;
  double hi = 1.0;
  int side = 1;

  /// lo/hi = min/max coordinate over all prior means -/+ 4 sigma. Requires a
  /// perfect-square dimension.
  static RenderMap for_prior(const ContentPrior& prior);
};

/// n with n * n == d, if any.
std::optional<int> grid_side(int d);

Grid render(const ImageVec& image, const RenderMap& map);

/// Inverse of the affine part of `render` (clamping is not undone).
ImageVec unrender(const Grid& grid, const RenderMap& map);

}  // namespace wmfrag

#endif  // WMFRAG_CODEC_HPP
