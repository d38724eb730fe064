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

#ifndef WMFRAG_ATTACK_HPP
#define WMFRAG_ATTACK_HPP

#include "wmfrag/codec.hpp"
#include "wmfrag/diffusion.hpp"
#include "wmfrag/prior.hpp"
#include "wmfrag/schedule.hpp"
#include "wmfrag/watermark.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace wmfrag {

enum class AttackMode { unguided, guided, noise, blur, crop_resize };

std::string to_string(AttackMode mode);
AttackMode parse_attack_mode(const std::string& s);
bool is_diffusion_mode(AttackMode mode);

/// What the lambda pull aims at. `image` uses to_latent(I_w) itself; `content`
/// uses the mean of the prior component I_w is assigned to, so the pull carries
/// the content label and nothing about the payload.
enum class ReferenceKind { image, content };

std::string to_string(ReferenceKind kind);
ReferenceKind parse_reference_kind(const std::string& s);

struct AttackConfig {
  AttackMode mode = AttackMode::unguided;
  std::optional<int> t_start;  // unset means full strength, t_start = T
  double gamma = 0.1;
  double lambda = 0.0;
  ReferenceKind reference = ReferenceKind::image;
  GuidedSteps guided_steps;
  double noise_sigma = 0.0;
  int blur_kernel = 1;
  double blur_sigma = 0.0;  // 0 selects a box kernel, > 0 Gaussian weights
  double crop_frac = 0.0;
  std::uint64_t seed = 0;

  int resolved_t_start(const NoiseSchedule& sched) const { return t_start.value_or(sched.steps()); }
  void validate(const NoiseSchedule& sched) const;
};

struct AttackOutcome {
  ImageVec image;
  std::optional<LatentVec> noised_state;  // x_{t_start}, diffusion modes only
};

/// Weak attacker: regenerate with gamma = 0 and the cfg.reference target at weight lambda.
AttackOutcome attack_unguided(const ImageVec& watermarked, const AttackConfig& cfg, const NoiseSchedule& sched,
                              const ContentPrior& prior, const Codec& codec, Rng& rng);

/// One watermark-removal update: gradient ascent on the watermark loss,
/// x + gamma * grad_x L_wm(Dec(x)) with the gradient pulled back through the codec.
LatentVec guidance_update(const LatentVec& x, const Message& target, const WatermarkKey& key, double gamma);

/// Strong attacker: the reverse chain of attack_unguided with a guidance_update
/// after each step in cfg.guided_steps. The target is decode_hard(I_w). A null
/// key means the attacker has no decoder access and is rejected.
AttackOutcome attack_guided(const ImageVec& watermarked, const WatermarkKey* key, const AttackConfig& cfg,
                            const NoiseSchedule& sched, const ContentPrior& prior, const Codec& codec, Rng& rng);

/// Pixel-level baselines: additive Gaussian noise in image space, blur or
/// crop-and-resize on the rendered grid mapped back through the render range.
ImageVec attack_classical(const ImageVec& watermarked, const AttackConfig& cfg, const RenderMap& map, Rng& rng);

/// Normalized box blur of odd side `kernel` with edge replication.
Grid box_blur(const Grid& grid, int kernel);

/// Separable Gaussian blur truncated to an odd `kernel` side, weights
/// renormalized, edge replication. Matches box_blur as sigma grows.
Grid gaussian_blur(const Grid& grid, int kernel, double sigma);

/// Remove `crop_frac` of the side from every border and resample to the
/// original size bilinearly.
Grid crop_resize(const Grid& grid, double crop_frac);

}  // namespace wmfrag

#endif  // WMFRAG_ATTACK_HPP
