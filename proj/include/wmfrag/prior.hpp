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

#ifndef WMFRAG_PRIOR_HPP
#define WMFRAG_PRIOR_HPP

#include "wmfrag/common.hpp"
#include "wmfrag/rng.hpp"
#include "wmfrag/schedule.hpp"

#include <cstdint>
#include <vector>

namespace wmfrag {

/// Isotropic Gaussian mixture sum_k pi_k N(mu_k, sigma^2 I) over latent space.
/// The component index plays the role of the image's high-level content.
///
/// Every time-t quantity below is for the clean-data marginal
///   p_t(x) = sum_k pi_k N(x; sqrt(abar_t) mu_k, v_t I),  v_t = abar_t sigma^2 + 1 - abar_t,
/// which is exactly what an ideally trained denoiser would model. The watermark
/// never enters these densities.
class ContentPrior {
 public:
  ContentPrior(std::vector<double> weights, std::vector<Eigen::VectorXd> means, double sigma);

  /// Equal weights; means along seeded random directions, rescaled so the
  /// minimum pairwise distance equals `separation`. K = 1 puts the single mean
  /// at the origin.
  static ContentPrior separated(int d, int K, double sigma, double separation, std::uint64_t seed);

  int dim() const { return static_cast<int>(means_.front().size()); }
  int components() const { return static_cast<int>(means_.size()); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& means() const { return means_; }
  double sigma() const { return sigma_; }

  /// sum_k pi_k mu_k
  Eigen::VectorXd global_mean() const;
  double min_pairwise_distance() const;

 private:
  std::vector<double> weights_;
  std::vector<Eigen::VectorXd> means_;
  double sigma_;
};

struct ContentSample {
  int component = 0;
  LatentVec z_clean;
};

ContentSample sample_content(const ContentPrior& prior, Rng& rng);

double marginal_variance(const ContentPrior& prior, const NoiseSchedule& sched, int t);

double log_marginal(const ContentPrior& prior, const NoiseSchedule& sched, const LatentVec& x, int t);

/// grad_x log p_t(x) = sum_k r_k(x) (sqrt(abar_t) mu_k - x) / v_t
LatentVec score(const ContentPrior& prior, const NoiseSchedule& sched, const LatentVec& x, int t);

/// Component posterior r_k(x) at step t; sums to one.
Eigen::VectorXd responsibilities(const ContentPrior& prior, const NoiseSchedule& sched, const LatentVec& x,
                                 int t);

/// argmax_k r_k(x) at t = 0 (ties go to the lowest index).
int content_of(const ContentPrior& prior, const LatentVec& x);

}  // namespace wmfrag

#endif  // WMFRAG_PRIOR_HPP
