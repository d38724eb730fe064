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

#include "wmfrag/metrics.hpp"

#include "wmfrag/diffusion.hpp"

#include <cmath>

namespace wmfrag {

double bit_accuracy(const Message& m, const Message& m_hat) {
  require(m.size() == m_hat.size(), ErrorCode::dimension_mismatch,
          "bit_accuracy: messages have different lengths (" + std::to_string(m.size()) + " vs " +
              std::to_string(m_hat.size()) + ")");
  require(m.size() > 0, ErrorCode::invalid_argument, "bit_accuracy: empty message");
  int correct = 0;
  for (int i = 0; i < m.size(); ++i) correct += m.bit(i) == m_hat.bit(i);
  return static_cast<double>(correct) / m.size();
}

bool decode_success(const Message& m, const Message& m_hat) { return bit_accuracy(m, m_hat) == 1.0; }

SnrEstimate snr_empirical(const WatermarkKey& key, const NoiseSchedule& sched, const ContentPrior& prior, int t,
                          int n, Rng& rng) {
  require(n >= 2, ErrorCode::invalid_argument, "snr_empirical: need at least 2 samples");
  require_dim(prior.dim(), key.dim(), "snr_empirical prior");
  const double ab = sched.alpha_bar(t);
  if (ab >= 1.0) return {std::numeric_limits<double>::infinity(), 0.0};
  const double sa = std::sqrt(ab);
  double sum_s = 0.0, sum_n = 0.0, sum_ss = 0.0, sum_nn = 0.0, sum_sn = 0.0;
  for (int i = 0; i < n; ++i) {
    const ContentSample c = sample_content(prior, rng);
    const Message m = Message::random(key.bits(), rng);
    const Eigen::VectorXd eps = rng.gaussian_vector(prior.dim());
    const LatentVec marked = forward_with_noise(embed(c.z_clean, m, key), sched, t, eps);
    const LatentVec control = forward_with_noise(c.z_clean, sched, t, eps);
    const double signal = (key.carriers * (marked.values - control.values)).squaredNorm();
    const double noise = (control.values - sa * c.z_clean.values).squaredNorm();
    sum_s += signal;
    sum_n += noise;
    sum_ss += signal * signal;
    sum_nn += noise * noise;
    sum_sn += signal * noise;
  }
  const double nn = static_cast<double>(n);
  const double ms = sum_s / nn;
  const double mn = sum_n / nn;
  if (mn <= 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
  const double var_s = (sum_ss / nn - ms * ms) * nn / (nn - 1.0);
  const double var_n = (sum_nn / nn - mn * mn) * nn / (nn - 1.0);
  const double cov = (sum_sn / nn - ms * mn) * nn / (nn - 1.0);
  const double r = ms / mn;
  const double var_r = (var_s - 2.0 * r * cov + r * r * var_n) / (mn * mn * nn);
  return {r, std::sqrt(std::max(var_r, 0.0))};
}

double snr_analytic(const NoiseSchedule& sched, int t, double rho, int d) {
  const double ab = sched.alpha_bar(t);
  require(ab < 1.0, ErrorCode::invalid_argument, "snr_analytic: no noise at this step (alpha_bar = 1)");
  require(d >= 1, ErrorCode::invalid_argument, "snr_analytic: d must be >= 1");
  return ab * rho * rho / ((1.0 - ab) * d);
}

double psnr(const Grid& a, const Grid& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::dimension_mismatch,
          "psnr: grids have different shapes");
  require(a.size() > 0, ErrorCode::invalid_argument, "psnr: empty grid");
  const double mse = (a - b).squaredNorm() / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrSaturated;
  return std::min(kPsnrSaturated, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Grid& a, const Grid& b) {
  constexpr int kWin = 7;
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::dimension_mismatch,
          "ssim: grids have different shapes");
  require(a.rows() >= kWin && a.cols() >= kWin, ErrorCode::invalid_argument,
          "ssim: grid smaller than the 7x7 window");
  const double count = kWin * kWin;
  double total = 0.0;
  int windows = 0;
  for (Eigen::Index r = 0; r + kWin <= a.rows(); ++r) {
    for (Eigen::Index c = 0; c + kWin <= a.cols(); ++c) {
      const auto wa = a.block(r, c, kWin, kWin);
      const auto wb = b.block(r, c, kWin, kWin);
      const double ma = wa.sum() / count;
      const double mb = wb.sum() / count;
      const double va = (wa.array() - ma).square().sum() / count;
      const double vb = (wb.array() - mb).square().sum() / count;
      const double cov = ((wa.array() - ma) * (wb.array() - mb)).sum() / count;
      total += ((2 * ma * mb + kC1) * (2 * cov + kC2)) / ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
      ++windows;
    }
  }
  return total / windows;
}

bool content_match(const ContentPrior& prior, const ImageVec& watermarked, const ImageVec& attacked,
                   const Codec& codec) {
  return content_of(prior, codec.to_latent(watermarked)) == content_of(prior, codec.to_latent(attacked));
}

}  // namespace wmfrag
