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

#include "wmfrag/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace wmfrag {

ContentPrior::ContentPrior(std::vector<double> weights, std::vector<Eigen::VectorXd> means, double sigma)
    : weights_(std::move(weights)), means_(std::move(means)), sigma_(sigma) {
  require(!means_.empty(), ErrorCode::invalid_argument, "prior: need at least one component");
  require(weights_.size() == means_.size(), ErrorCode::invalid_argument, "prior: weights/means count differ");
  require(sigma_ >= 0.0 && std::isfinite(sigma_), ErrorCode::invalid_argument, "prior.sigma must be >= 0");
  const auto d = means_.front().size();
  require(d >= 1, ErrorCode::invalid_argument, "prior.d must be >= 1");
  double total = 0.0;
  for (std::size_t k = 0; k < means_.size(); ++k) {
    require_dim(means_[k].size(), d, "prior mean");
    require(weights_[k] > 0.0, ErrorCode::invalid_argument, "prior: weights must be positive");
    total += weights_[k];
  }
  require(std::abs(total - 1.0) < 1e-9, ErrorCode::invalid_argument, "prior: weights must sum to 1");
}

ContentPrior ContentPrior::separated(int d, int K, double sigma, double separation, std::uint64_t seed) {
  require(d >= 1, ErrorCode::invalid_argument, "prior.d must be >= 1");
  require(K >= 1, ErrorCode::invalid_argument, "prior.K must be >= 1");
  require(separation >= 0.0, ErrorCode::invalid_argument, "prior.mean_separation must be >= 0");
  std::vector<double> weights(static_cast<std::size_t>(K), 1.0 / K);
  std::vector<Eigen::VectorXd> means;
  if (K == 1) {
    means.push_back(Eigen::VectorXd::Zero(d));
    return ContentPrior(std::move(weights), std::move(means), sigma);
  }
  Rng rng(seed);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd dir = rng.gaussian_vector(d);
    means.push_back(dir / dir.norm());
  }
  double min_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < K; ++i)
    for (int j = i + 1; j < K; ++j) min_dist = std::min(min_dist, (means[i] - means[j]).norm());
  require(min_dist > 1e-12, ErrorCode::invalid_argument, "prior: degenerate mean directions for this seed");
  for (auto& m : means) m *= separation / min_dist;
  return ContentPrior(std::move(weights), std::move(means), sigma);
}

Eigen::VectorXd ContentPrior::global_mean() const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(dim());
  for (std::size_t k = 0; k < means_.size(); ++k) c += weights_[k] * means_[k];
  return c;
}

double ContentPrior::min_pairwise_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < means_.size(); ++i)
    for (std::size_t j = i + 1; j < means_.size(); ++j) best = std::min(best, (means_[i] - means_[j]).norm());
  return best;
}

ContentSample sample_content(const ContentPrior& prior, Rng& rng) {
  std::discrete_distribution<int> pick(prior.weights().begin(), prior.weights().end());
  ContentSample out;
  out.component = prior.components() == 1 ? 0 : pick(rng.engine());
  const auto& mu = prior.means()[static_cast<std::size_t>(out.component)];
  out.z_clean = LatentVec(mu + prior.sigma() * rng.gaussian_vector(mu.size()));
  return out;
}

double marginal_variance(const ContentPrior& prior, const NoiseSchedule& sched, int t) {
  const double ab = sched.alpha_bar(t);
  return ab * prior.sigma() * prior.sigma() + (1.0 - ab);
}

namespace {

// log pi_k + log N(x; sqrt(abar) mu_k, v I) for every k.
Eigen::VectorXd component_log_terms(const ContentPrior& prior, const NoiseSchedule& sched, const LatentVec& x,
                                    int t, double& v_out) {
  require_dim(x.size(), prior.dim(), "prior");
  const double ab = sched.alpha_bar(t);
  const double v = marginal_variance(prior, sched, t);
  require(v > 0.0, ErrorCode::invalid_argument, "prior: zero marginal variance (sigma = 0 at t = 0)");
  const double sa = std::sqrt(ab);
  const double d = static_cast<double>(prior.dim());
  const double norm_const = -0.5 * d * std::log(2.0 * std::numbers::pi * v);
  Eigen::VectorXd out(prior.components());
  for (int k = 0; k < prior.components(); ++k) {
    const double sq = (x.values - sa * prior.means()[static_cast<std::size_t>(k)]).squaredNorm();
    out[k] = std::log(prior.weights()[static_cast<std::size_t>(k)]) + norm_const - 0.5 * sq / v;
  }
  v_out = v;
  return out;
}

double log_sum_exp(const Eigen::VectorXd& a) {
  const double m = a.maxCoeff();
  return m + std::log((a.array() - m).exp().sum());
}

}  // namespace

double log_marginal(const ContentPrior& prior, const NoiseSchedule& sched, const LatentVec& x, int t) {
  double v = 0.0;
  return log_sum_exp(component_log_terms(prior, sched, x, t, v));
}

Eigen::VectorXd responsibilities(const ContentPrior& prior, const NoiseSchedule& sched, const LatentVec& x,
                                 int t) {
  double v = 0.0;
  Eigen::VectorXd terms = component_log_terms(prior, sched, x, t, v);
  terms.array() -= log_sum_exp(terms);
  Eigen::VectorXd r = terms.array().exp();
  return r / r.sum();
}

LatentVec score(const ContentPrior& prior, const NoiseSchedule& sched, const LatentVec& x, int t) {
  double v = 0.0;
  Eigen::VectorXd terms = component_log_terms(prior, sched, x, t, v);
  terms.array() -= log_sum_exp(terms);
  const double sa = std::sqrt(sched.alpha_bar(t));
  Eigen::VectorXd target = Eigen::VectorXd::Zero(x.size());
  double total = 0.0;
  for (int k = 0; k < prior.components(); ++k) {
    const double r = std::exp(terms[k]);
    target += r * prior.means()[static_cast<std::size_t>(k)];
    total += r;
  }
  return LatentVec((sa * target / total - x.values) / v);
}

int content_of(const ContentPrior& prior, const LatentVec& x) {
  require_dim(x.size(), prior.dim(), "content_of");
  if (prior.components() == 1) return 0;
  // Argmax of log pi_k - |x - mu_k|^2 / (2 sigma^2); valid also for sigma = 0 as nearest mean.
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  const double s2 = prior.sigma() > 0.0 ? prior.sigma() * prior.sigma() : 1e-300;
  for (int k = 0; k < prior.components(); ++k) {
    const double val = std::log(prior.weights()[static_cast<std::size_t>(k)]) -
                       0.5 * (x.values - prior.means()[static_cast<std::size_t>(k)]).squaredNorm() / s2;
    if (val > best_val) {
      best_val = val;
      best = k;
    }
  }
  return best;
}

}  // namespace wmfrag
