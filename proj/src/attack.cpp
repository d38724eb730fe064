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

#include "wmfrag/attack.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace wmfrag {

std::string to_string(AttackMode mode) {
  switch (mode) {
    case AttackMode::unguided:
      return "unguided";
    case AttackMode::guided:
      return "guided";
    case AttackMode::noise:
      return "noise";
    case AttackMode::blur:
      return "blur";
    case AttackMode::crop_resize:
      return "crop_resize";
  }
  return "unguided";
}

AttackMode parse_attack_mode(const std::string& s) {
  if (s == "unguided") return AttackMode::unguided;
  if (s == "guided") return AttackMode::guided;
  if (s == "noise") return AttackMode::noise;
  if (s == "blur") return AttackMode::blur;
  if (s == "crop_resize") return AttackMode::crop_resize;
  fail(ErrorCode::invalid_argument,
       "attack.mode must be one of unguided, guided, noise, blur, crop_resize; got '" + s + "'");
}

bool is_diffusion_mode(AttackMode mode) { return mode == AttackMode::unguided || mode == AttackMode::guided; }

std::string to_string(ReferenceKind kind) { return kind == ReferenceKind::content ? "content" : "image"; }

ReferenceKind parse_reference_kind(const std::string& s) {
  if (s == "image") return ReferenceKind::image;
  if (s == "content") return ReferenceKind::content;
  fail(ErrorCode::invalid_argument, "attack.reference must be 'image' or 'content'; got '" + s + "'");
}

void AttackConfig::validate(const NoiseSchedule& sched) const {
  if (t_start) {
    require(*t_start >= 1 && *t_start <= sched.steps(), ErrorCode::invalid_argument,
            "attack.t_start must be in [1, schedule.T = " + std::to_string(sched.steps()) + "]");
  }
  require(std::isfinite(gamma) && gamma >= 0.0, ErrorCode::invalid_argument, "attack.gamma must be >= 0");
  require(std::isfinite(lambda) && lambda >= 0.0, ErrorCode::invalid_argument, "attack.lambda must be >= 0");
  require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, ErrorCode::invalid_argument,
          "attack.noise_sigma must be >= 0");
  require(blur_kernel >= 1 && blur_kernel % 2 == 1, ErrorCode::invalid_argument,
          "attack.blur_kernel must be a positive odd integer");
  require(std::isfinite(blur_sigma) && blur_sigma >= 0.0, ErrorCode::invalid_argument,
          "attack.blur_sigma must be >= 0");
  require(crop_frac >= 0.0 && crop_frac < 0.5, ErrorCode::invalid_argument, "attack.crop_frac must be in [0, 0.5)");
}

namespace {

GuidanceSpec reference_guidance(const ImageVec& watermarked, const AttackConfig& cfg, const ContentPrior& prior,
                                const Codec& codec) {
  GuidanceSpec g;
  g.lambda = cfg.lambda;
  if (cfg.lambda <= 0.0) return g;
  const LatentVec z = codec.to_latent(watermarked);
  if (cfg.reference == ReferenceKind::content) {
    g.reference = LatentVec(prior.means()[static_cast<std::size_t>(content_of(prior, z))]);
  } else {
    g.reference = z;
  }
  return g;
}

}  // namespace

AttackOutcome attack_unguided(const ImageVec& watermarked, const AttackConfig& cfg, const NoiseSchedule& sched,
                              const ContentPrior& prior, const Codec& codec, Rng& rng) {
  cfg.validate(sched);
  const GuidanceSpec g = reference_guidance(watermarked, cfg, prior, codec);
  const Regeneration regen =
      regenerate(codec.to_latent(watermarked), sched, prior, cfg.resolved_t_start(sched), g, rng);
  return {codec.to_image(regen.output), regen.noised};
}

LatentVec guidance_update(const LatentVec& x, const Message& target, const WatermarkKey& key, double gamma) {
  return LatentVec(x.values + gamma * wm_loss_grad_latent(x, target, key).values);
}

AttackOutcome attack_guided(const ImageVec& watermarked, const WatermarkKey* key, const AttackConfig& cfg,
                            const NoiseSchedule& sched, const ContentPrior& prior, const Codec& codec, Rng& rng) {
  require(key != nullptr, ErrorCode::capability_missing,
          "guided attack needs the watermark decoder (strong attacker); no key was supplied");
  cfg.validate(sched);
  GuidanceSpec g = reference_guidance(watermarked, cfg, prior, codec);
  g.gamma = cfg.gamma;
  g.steps = cfg.guided_steps;
  g.target = decode_hard(watermarked, *key, codec);
  const int t_start = cfg.resolved_t_start(sched);
  const Message& target = *g.target;
  const double gamma = cfg.gamma;
  const GuidedSteps steps = cfg.guided_steps;
  ReverseHook hook;
  if (gamma > 0.0) {
    hook = [&](int t, LatentVec& x_prev) {
      if (steps.contains(t, t_start)) x_prev = guidance_update(x_prev, target, *key, gamma);
    };
  }
  const Regeneration regen = regenerate(codec.to_latent(watermarked), sched, prior, t_start, g, rng, hook);
  return {codec.to_image(regen.output), regen.noised};
}

Grid box_blur(const Grid& grid, int kernel) {
  require(kernel >= 1 && kernel % 2 == 1, ErrorCode::invalid_argument, "blur kernel must be a positive odd integer");
  const int half = kernel / 2;
  const auto rows = static_cast<int>(grid.rows());
  const auto cols = static_cast<int>(grid.cols());
  Grid out(rows, cols);
  const double norm = 1.0 / (static_cast<double>(kernel) * kernel);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int dr = -half; dr <= half; ++dr)
        for (int dc = -half; dc <= half; ++dc)
          acc += grid(std::clamp(r + dr, 0, rows - 1), std::clamp(c + dc, 0, cols - 1));
      out(r, c) = acc * norm;
    }
  }
  return out;
}

Grid gaussian_blur(const Grid& grid, int kernel, double sigma) {
  require(kernel >= 1 && kernel % 2 == 1, ErrorCode::invalid_argument, "blur kernel must be a positive odd integer");
  require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::invalid_argument, "blur sigma must be > 0");
  const int half = kernel / 2;
  std::vector<double> w(static_cast<std::size_t>(kernel));
  double total = 0.0;
  for (int i = -half; i <= half; ++i) total += w[static_cast<std::size_t>(i + half)] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& x : w) x /= total;
  const auto rows = static_cast<int>(grid.rows());
  const auto cols = static_cast<int>(grid.cols());
  Grid tmp(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = -half; i <= half; ++i) acc += w[static_cast<std::size_t>(i + half)] * grid(r, std::clamp(c + i, 0, cols - 1));
      tmp(r, c) = acc;
    }
  Grid out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = -half; i <= half; ++i) acc += w[static_cast<std::size_t>(i + half)] * tmp(std::clamp(r + i, 0, rows - 1), c);
      out(r, c) = acc;
    }
  return out;
}

Grid crop_resize(const Grid& grid, double crop_frac) {
  require(crop_frac >= 0.0 && crop_frac < 0.5, ErrorCode::invalid_argument, "crop_frac must be in [0, 0.5)");
  const auto n = static_cast<int>(grid.rows());
  require(grid.cols() == n, ErrorCode::dimension_mismatch, "crop_resize: grid must be square");
  const double offset = crop_frac * n;
  const double scale = 1.0 - 2.0 * crop_frac;
  Grid out(n, n);
  const auto sample = [&](double y, double x) {
    y = std::clamp(y, 0.0, static_cast<double>(n - 1));
    x = std::clamp(x, 0.0, static_cast<double>(n - 1));
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const int y1 = std::min(y0 + 1, n - 1);
    const int x1 = std::min(x0 + 1, n - 1);
    const double fy = y - y0;
    const double fx = x - x0;
    return (1 - fy) * ((1 - fx) * grid(y0, x0) + fx * grid(y0, x1)) + fy * ((1 - fx) * grid(y1, x0) + fx * grid(y1, x1));
  };
  // Pixel centers: output j maps to offset + (j + 0.5) * scale - 0.5 in source pixel coordinates.
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) out(r, c) = sample(offset + (r + 0.5) * scale - 0.5, offset + (c + 0.5) * scale - 0.5);
  return out;
}

ImageVec attack_classical(const ImageVec& watermarked, const AttackConfig& cfg, const RenderMap& map, Rng& rng) {
  switch (cfg.mode) {
    case AttackMode::noise: {
      require(std::isfinite(cfg.noise_sigma) && cfg.noise_sigma >= 0.0, ErrorCode::invalid_argument,
              "attack.noise_sigma must be >= 0");
      if (cfg.noise_sigma == 0.0) return watermarked;
      return ImageVec(watermarked.values + cfg.noise_sigma * rng.gaussian_vector(watermarked.size()));
    }
    case AttackMode::blur: {
      require(map.side * map.side == watermarked.size(), ErrorCode::invalid_argument,
              "blur attack needs a perfect-square dimension");
      if (cfg.blur_kernel == 1) return watermarked;
      const Grid g = render(watermarked, map);
      return unrender(cfg.blur_sigma > 0.0 ? gaussian_blur(g, cfg.blur_kernel, cfg.blur_sigma) : box_blur(g, cfg.blur_kernel),
                      map);
    }
    case AttackMode::crop_resize: {
      require(map.side * map.side == watermarked.size(), ErrorCode::invalid_argument,
              "crop_resize attack needs a perfect-square dimension");
      if (cfg.crop_frac == 0.0) return watermarked;
      return unrender(crop_resize(render(watermarked, map), cfg.crop_frac), map);
    }
    default:
      fail(ErrorCode::invalid_argument, "attack_classical: mode '" + to_string(cfg.mode) + "' is not classical");
  }
}

}  // namespace wmfrag
