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

#ifndef WMFRAG_WATERMARK_HPP
#define WMFRAG_WATERMARK_HPP

#include "wmfrag/codec.hpp"
#include "wmfrag/common.hpp"
#include "wmfrag/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace wmfrag {

/// B-bit payload. Bit i modulates carrier i with sign 2*bit - 1.
class Message {
 public:
  Message() = default;
  explicit Message(std::vector<std::uint8_t> bits);

  static Message random(int bit_count, Rng& rng);
  static Message zeros(int bit_count) { return Message(std::vector<std::uint8_t>(static_cast<std::size_t>(bit_count), 0)); }

  /// Hex digits, most significant bit of each nibble first; trailing pad bits are zero.
  static Message from_hex(const std::string& hex, int bit_count);
  std::string to_hex() const;

  int size() const { return static_cast<int>(bits_.size()); }
  std::uint8_t bit(int i) const { return bits_[static_cast<std::size_t>(i)]; }
  double sign(int i) const { return bits_[static_cast<std::size_t>(i)] ? 1.0 : -1.0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  Message flipped(int i) const;
  Message complement() const;

  bool operator==(const Message&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Spread-spectrum key: B orthonormal carriers (rows), embedding norm rho,
/// soft-decoder sharpness kappa and the decoder's zero point.
struct WatermarkKey {
  Eigen::MatrixXd carriers;
  double rho = 1.0;
  double kappa = 1.0;
  Eigen::VectorXd center;

  int bits() const { return static_cast<int>(carriers.rows()); }
  int dim() const { return static_cast<int>(carriers.cols()); }
};

/// B orthonormal carriers in R^d, deterministic in `seed`.
Eigen::MatrixXd gen_carriers(std::uint64_t seed, int d, int bit_count);

/// kappa = 4 / (rho / sqrt(B)).
double default_kappa(double rho, int bit_count);

WatermarkKey make_key(std::uint64_t seed, int d, int bit_count, double rho, double kappa, Eigen::VectorXd center);

/// delta_m = (rho / sqrt(B)) sum_i s_i p_i
Eigen::VectorXd watermark_delta(const Message& m, const WatermarkKey& key);

/// z_0 = z_clean + delta_m, so |z_0 - z_clean| = rho.
LatentVec embed(const LatentVec& z_clean, const Message& m, const WatermarkKey& key);

/// <z - center, p_i> for every carrier.
Eigen::VectorXd carrier_projections(const LatentVec& z, const WatermarkKey& key);

Message decode_hard(const ImageVec& image, const WatermarkKey& key, const Codec& codec);
Message decode_hard_latent(const LatentVec& z, const WatermarkKey& key);

/// q_i = logistic(kappa * <to_latent(I) - center, p_i>), the probability of bit value 1.
Eigen::VectorXd decode_soft(const ImageVec& image, const WatermarkKey& key, const Codec& codec);
Eigen::VectorXd decode_soft_latent(const LatentVec& z, const WatermarkKey& key);

/// Negative mean probability assigned to the target bits; in [-1, 0].
double wm_loss(const ImageVec& image, const Message& target, const WatermarkKey& key, const Codec& codec);
double wm_loss_latent(const LatentVec& z, const Message& target, const WatermarkKey& key);

/// Exact gradient of wm_loss with respect to the image:
///   -(kappa / B) sum_i s'_i q_i (1 - q_i) V p_i
ImageVec wm_loss_grad(const ImageVec& image, const Message& target, const WatermarkKey& key, const Codec& codec);

/// The same gradient taken in latent space through the codec adjoint.
LatentVec wm_loss_grad_latent(const LatentVec& z, const Message& target, const WatermarkKey& key);

namespace testing {
/// Fault hook for the verify suite: negates every gradient returned above.
void set_flip_gradient_sign(bool on);
bool flip_gradient_sign();
}  // namespace testing

}  // namespace wmfrag

#endif  // WMFRAG_WATERMARK_HPP
