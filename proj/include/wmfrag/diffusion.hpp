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

#ifndef WMFRAG_DIFFUSION_HPP
#define WMFRAG_DIFFUSION_HPP

#include "wmfrag/common.hpp"
#include "wmfrag/prior.hpp"
#include "wmfrag/rng.hpp"
#include "wmfrag/schedule.hpp"
#include "wmfrag/watermark.hpp"

#include <functional>
#include <optional>
#include <string>

namespace wmfrag {

/// Which reverse steps receive the watermark-gradient update.
struct GuidedSteps {
  enum class Kind { all, last_n, final_fraction };
  Kind kind = Kind::all;
  int count = 0;          // last_n
  double fraction = 0.2;  // final_fraction

  static GuidedSteps all() { return {}; }
  static GuidedSteps last(int n) { return {Kind::last_n, n, 0.0}; }
  static GuidedSteps final_share(double f) { return {Kind::final_fraction, 0, f}; }

  /// Accepts "all", "last:<n>" and "final:<fraction>".
  static GuidedSteps parse(const std::string& text);
  std::string to_string() const;

  /// Whether the update applies on the reverse step t -> t-1 of a run that starts at t_start.
  bool contains(int t, int t_start) const;
};

/// Conditioning for reverse diffusion. `lambda` weights a quadratic pull toward
/// the reference latent; gamma/target/steps drive the attack-level gradient update.
struct GuidanceSpec {
  double gamma = 0.0;
  double lambda = 0.0;
  std::optional<LatentVec> reference;
  GuidedSteps steps;
  std::optional<Message> target;

  void validate() const;
};

/// sqrt(abar_t) z0 + sqrt(1 - abar_t) eps with the given eps.
LatentVec forward_with_noise(const LatentVec& z0, const NoiseSchedule& sched, int t, const Eigen::VectorXd& eps);

/// Closed-form sample of q(x_t | x_0 = z0).
LatentVec forward_closed(const LatentVec& z0, const NoiseSchedule& sched, int t, Rng& rng);

/// x_t = sqrt(alpha_t) x_{t-1} + sqrt(1 - alpha_t) eps_t
LatentVec forward_step(const LatentVec& x_prev, const NoiseSchedule& sched, int t, Rng& rng);

/// Posterior variance beta_t (1 - abar_{t-1}) / (1 - abar_t).
double posterior_variance(const NoiseSchedule& sched, int t);

/// Ancestral step x_t -> x_{t-1} using the exact clean-prior score plus the
/// optional reference pull lambda (sqrt(abar_t) ref - x) / v_t. No noise is
/// drawn at t = 1.
LatentVec reverse_step(const LatentVec& x, const NoiseSchedule& sched, const ContentPrior& prior, int t, Rng& rng,
                       const GuidanceSpec& g);

/// Called after each reverse step t -> t-1 with the freshly produced x_{t-1}.
using ReverseHook = std::function<void(int t, LatentVec& x_prev)>;

struct Regeneration {
  LatentVec noised;  // x_{t_start}
  LatentVec output;  // x_0'
};

/// Reverse steps t_start..1 from a noised state. It never sees the clean
/// latent, which is what makes the attack output a function of x_{t_start}.
LatentVec reverse_chain(const LatentVec& x_start, const NoiseSchedule& sched, const ContentPrior& prior, int t_start,
                        const GuidanceSpec& g, Rng& rng, const ReverseHook& hook = {});

/// Noise `start` to t_start, then run reverse steps t_start..1. Only x_{t_start}
/// feeds the reverse chain.
Regeneration regenerate(const LatentVec& start, const NoiseSchedule& sched, const ContentPrior& prior, int t_start,
                        const GuidanceSpec& g, Rng& rng, const ReverseHook& hook = {});

}  // namespace wmfrag

#endif  // WMFRAG_DIFFUSION_HPP
