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

#ifndef WMFRAG_METRICS_HPP
#define WMFRAG_METRICS_HPP

#include "wmfrag/codec.hpp"
#include "wmfrag/prior.hpp"
#include "wmfrag/rng.hpp"
#include "wmfrag/schedule.hpp"
#include "wmfrag/watermark.hpp"

#include <limits>

namespace wmfrag {

/// PSNR reported for identical grids.
inline constexpr double kPsnrSaturated = 99.0;

struct TrialMetrics {
  double bit_acc = 0.0;
  bool decode_success = false;
  double snr_emp = std::numeric_limits<double>::quiet_NaN();
  double snr_analytic = std::numeric_limits<double>::quiet_NaN();
  double psnr_db = std::numeric_limits<double>::quiet_NaN();
  double ssim = std::numeric_limits<double>::quiet_NaN();
  bool content_match = false;
};

double bit_accuracy(const Message& m, const Message& m_hat);
bool decode_success(const Message& m, const Message& m_hat);

struct SnrEstimate {
  double value = 0.0;  // +inf when the noise energy is zero (t = 0)
  double stderr_value = 0.0;
};

/// Monte Carlo estimate of abar_t |delta_m|^2 / E|sqrt(1 - abar_t) eps|^2 over
/// n forward samples. Each sample draws content, a random message and eps; the
/// watermark component is read off the carrier projections of the difference
/// between the watermarked state and a paired control without watermark
/// (same z_clean, same eps). Ratio of means, delta-method standard error.
SnrEstimate snr_empirical(const WatermarkKey& key, const NoiseSchedule& sched, const ContentPrior& prior, int t,
                          int n, Rng& rng);

/// abar_t rho^2 / ((1 - abar_t) d). Rejects t with abar_t = 1.
double snr_analytic(const NoiseSchedule& sched, int t, double rho, int d);

/// 10 log10(1 / MSE) for grids in [0,1]; kPsnrSaturated when MSE is zero.
double psnr(const Grid& a, const Grid& b);

/// Mean SSIM over all valid 7x7 windows (stride 1, uniform weights,
/// C1 = 0.01^2, C2 = 0.03^2).
double ssim(const Grid& a, const Grid& b);

/// Whether the t = 0 component posterior argmax agrees for I_w and I'.
bool content_match(const ContentPrior& prior, const ImageVec& watermarked, const ImageVec& attacked,
                   const Codec& codec);

}  // namespace wmfrag

#endif  // WMFRAG_METRICS_HPP
