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

#include "wmfrag/watermark.hpp"

#include <atomic>
#include <cmath>

namespace wmfrag {

namespace {

std::atomic<bool> g_flip_gradient{false};

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

namespace testing {
void set_flip_gradient_sign(bool on) { g_flip_gradient.store(on); }
bool flip_gradient_sign() { return g_flip_gradient.load(); }
}  // namespace testing

Message::Message(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto& b : bits_) require(b <= 1, ErrorCode::invalid_argument, "message bits must be 0 or 1");
}

Message Message::random(int bit_count, Rng& rng) {
  require(bit_count >= 1, ErrorCode::invalid_argument, "message: B must be >= 1");
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(bit_count));
  for (auto& b : bits) b = rng.coin() ? 1 : 0;
  return Message(std::move(bits));
}

Message Message::from_hex(const std::string& hex, int bit_count) {
  require(bit_count >= 1, ErrorCode::invalid_argument, "message: B must be >= 1");
  const std::size_t digits = (static_cast<std::size_t>(bit_count) + 3) / 4;
  require(hex.size() == digits, ErrorCode::parse,
          "message hex '" + hex + "' must have " + std::to_string(digits) + " digits for B = " +
              std::to_string(bit_count));
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(bit_count));
  for (std::size_t i = 0; i < digits; ++i) {
    const int v = hex_value(hex[i]);
    require(v >= 0, ErrorCode::parse, "message hex contains non-hex character");
    for (int j = 0; j < 4; ++j) {
      const std::size_t idx = 4 * i + static_cast<std::size_t>(j);
      const std::uint8_t b = static_cast<std::uint8_t>((v >> (3 - j)) & 1);
      if (idx < bits.size()) {
        bits[idx] = b;
      } else {
        require(b == 0, ErrorCode::parse, "message hex has nonzero padding bits");
      }
    }
  }
  return Message(std::move(bits));
}

std::string Message::to_hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < bits_.size(); i += 4) {
    int v = 0;
    for (std::size_t j = 0; j < 4; ++j) v = (v << 1) | (i + j < bits_.size() ? bits_[i + j] : 0);
    out.push_back(digits[v]);
  }
  return out;
}

Message Message::flipped(int i) const {
  Message out = *this;
  out.bits_[static_cast<std::size_t>(i)] ^= 1;
  return out;
}

Message Message::complement() const {
  Message out = *this;
  for (auto& b : out.bits_) b ^= 1;
  return out;
}

Eigen::MatrixXd gen_carriers(std::uint64_t seed, int d, int bit_count) {
  require(bit_count >= 1, ErrorCode::invalid_argument, "watermark.B must be >= 1");
  require(bit_count <= d, ErrorCode::invalid_argument,
          "watermark.B (" + std::to_string(bit_count) + ") must not exceed prior.d (" + std::to_string(d) + ")");
  return orthonormal_rows(seed, bit_count, d);
}

double default_kappa(double rho, int bit_count) { return 4.0 / (rho / std::sqrt(static_cast<double>(bit_count))); }

WatermarkKey make_key(std::uint64_t seed, int d, int bit_count, double rho, double kappa, Eigen::VectorXd center) {
  require(rho > 0.0 && std::isfinite(rho), ErrorCode::invalid_argument, "watermark.rho must be > 0");
  require(kappa > 0.0 && std::isfinite(kappa), ErrorCode::invalid_argument, "watermark.kappa must be > 0");
  require_dim(center.size(), d, "watermark center");
  WatermarkKey key;
  key.carriers = gen_carriers(seed, d, bit_count);
  key.rho = rho;
  key.kappa = kappa;
  key.center = std::move(center);
  return key;
}

Eigen::VectorXd watermark_delta(const Message& m, const WatermarkKey& key) {
  require_dim(m.size(), key.bits(), "message length");
  Eigen::VectorXd s(key.bits());
  for (int i = 0; i < key.bits(); ++i) s[i] = m.sign(i);
  return (key.rho / std::sqrt(static_cast<double>(key.bits()))) * (key.carriers.transpose() * s);
}

LatentVec embed(const LatentVec& z_clean, const Message& m, const WatermarkKey& key) {
  require_dim(z_clean.size(), key.dim(), "embed");
  return LatentVec(z_clean.values + watermark_delta(m, key));
}

Eigen::VectorXd carrier_projections(const LatentVec& z, const WatermarkKey& key) {
  require_dim(z.size(), key.dim(), "decode");
  return key.carriers * (z.values - key.center);
}

Message decode_hard_latent(const LatentVec& z, const WatermarkKey& key) {
  const Eigen::VectorXd proj = carrier_projections(z, key);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(proj.size()));
  for (Eigen::Index i = 0; i < proj.size(); ++i) bits[static_cast<std::size_t>(i)] = proj[i] > 0.0 ? 1 : 0;
  return Message(std::move(bits));
}

Message decode_hard(const ImageVec& image, const WatermarkKey& key, const Codec& codec) {
  return decode_hard_latent(codec.to_latent(image), key);
}

Eigen::VectorXd decode_soft_latent(const LatentVec& z, const WatermarkKey& key) {
  Eigen::VectorXd q = carrier_projections(z, key);
  for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = logistic(key.kappa * q[i]);
  return q;
}

Eigen::VectorXd decode_soft(const ImageVec& image, const WatermarkKey& key, const Codec& codec) {
  return decode_soft_latent(codec.to_latent(image), key);
}

double wm_loss_latent(const LatentVec& z, const Message& target, const WatermarkKey& key) {
  require_dim(target.size(), key.bits(), "target message");
  const Eigen::VectorXd q = decode_soft_latent(z, key);
  double acc = 0.0;
  for (int i = 0; i < key.bits(); ++i) acc += target.bit(i) ? q[i] : 1.0 - q[i];
  return -acc / key.bits();
}

double wm_loss(const ImageVec& image, const Message& target, const WatermarkKey& key, const Codec& codec) {
  return wm_loss_latent(codec.to_latent(image), target, key);
}

LatentVec wm_loss_grad_latent(const LatentVec& z, const Message& target, const WatermarkKey& key) {
  require_dim(target.size(), key.bits(), "target message");
  const Eigen::VectorXd q = decode_soft_latent(z, key);
  Eigen::VectorXd w(key.bits());
  for (int i = 0; i < key.bits(); ++i) w[i] = -(key.kappa / key.bits()) * target.sign(i) * q[i] * (1.0 - q[i]);
  Eigen::VectorXd g = key.carriers.transpose() * w;
  if (testing::flip_gradient_sign()) g = -g;
  return LatentVec(std::move(g));
}

ImageVec wm_loss_grad(const ImageVec& image, const Message& target, const WatermarkKey& key, const Codec& codec) {
  return codec.to_image(wm_loss_grad_latent(codec.to_latent(image), target, key));
}

}  // namespace wmfrag
