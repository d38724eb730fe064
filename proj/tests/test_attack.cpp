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


#include "doctest.h"
#include "support.hpp"
#include "wmfrag/attack.hpp"
#include "wmfrag/metrics.hpp"

#include <cmath>

using namespace wmfrag;
using wmfrag::test::error_code_of;

namespace {

struct Setup {
  NoiseSchedule sched = make_linear(50, 0.002, 0.4);
  ContentPrior prior = ContentPrior::separated(64, 4, 1.0, 8.0, 1);
  Codec codec = Codec::generate(3, 64);
  WatermarkKey key = make_key(2, 64, 32, 11.0, default_kappa(11.0, 32), prior.global_mean());
  RenderMap map = RenderMap::for_prior(prior);

  ImageVec watermarked(Rng& rng, Message& m) const {
    m = Message::random(32, rng);
    return codec.to_image(embed(sample_content(prior, rng).z_clean, m, key));
  }
};

}  // namespace

TEST_SUITE("attack") {
  TEST_CASE("mode names round trip") {
    for (AttackMode m : {AttackMode::unguided, AttackMode::guided, AttackMode::noise, AttackMode::blur,
                         AttackMode::crop_resize}) {
      CHECK(parse_attack_mode(to_string(m)) == m);
    }
    CHECK(error_code_of([] { (void)parse_attack_mode("jpeg"); }) == ErrorCode::invalid_argument);
    CHECK(parse_reference_kind("content") == ReferenceKind::content);
    CHECK(error_code_of([] { (void)parse_reference_kind("text"); }) == ErrorCode::invalid_argument);
  }

  TEST_CASE("zero-strength classical attacks are the identity") {
    const Setup s;
    Rng rng(1);
    Message m;
    const ImageVec iw = s.watermarked(rng, m);
    AttackConfig cfg;
    cfg.mode = AttackMode::noise;
    CHECK(attack_classical(iw, cfg, s.map, rng).values == iw.values);
    cfg.mode = AttackMode::blur;
    cfg.blur_kernel = 1;
    CHECK(attack_classical(iw, cfg, s.map, rng).values == iw.values);
    cfg.mode = AttackMode::crop_resize;
    cfg.crop_frac = 0.0;
    CHECK(attack_classical(iw, cfg, s.map, rng).values == iw.values);
  }

  TEST_CASE("noise has the requested spread") {
    const Setup s;
    Rng rng(2);
    Message m;
    const ImageVec iw = s.watermarked(rng, m);
    AttackConfig cfg;
    cfg.mode = AttackMode::noise;
    cfg.noise_sigma = 0.3;
    double sq = 0.0;
    const int n = 500;
    for (int i = 0; i < n; ++i) sq += (attack_classical(iw, cfg, s.map, rng).values - iw.values).squaredNorm();
    CHECK(sq / (n * 64.0) == doctest::Approx(0.09).epsilon(0.03));
  }

  TEST_CASE("blur kernels") {
    const Grid flat = Grid::Constant(5, 5, 0.4);
    CHECK((box_blur(flat, 3) - flat).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((gaussian_blur(flat, 5, 0.7) - flat).cwiseAbs().maxCoeff() < 1e-15);
    Grid spike = Grid::Zero(5, 5);
    spike(2, 2) = 1.0;
    CHECK(box_blur(spike, 3)(1, 1) == doctest::Approx(1.0 / 9.0));
    CHECK(box_blur(spike, 3).sum() == doctest::Approx(1.0));
    // Wide Gaussian weights flatten towards the box kernel.
    CHECK((gaussian_blur(spike, 3, 1e4) - box_blur(spike, 3)).cwiseAbs().maxCoeff() < 1e-8);
    // Narrow ones approach the identity.
    CHECK((gaussian_blur(spike, 3, 0.05) - spike).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(error_code_of([&] { (void)box_blur(spike, 2); }) == ErrorCode::invalid_argument);
  }

  TEST_CASE("crop-resize keeps a linear ramp linear") {
    Grid ramp(8, 8);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) ramp(r, c) = (c + 0.5) / 8.0;
    const Grid out = crop_resize(ramp, 0.25);
    // The central half of the ramp stretched across the full width.
    for (int c = 0; c < 8; ++c) CHECK(out(3, c) == doctest::Approx(0.25 + 0.5 * (c + 0.5) / 8.0).epsilon(1e-12));
    CHECK(crop_resize(ramp, 0.0) == ramp);
  }

  TEST_CASE("pixel attacks need a square grid") {
    const ContentPrior prior = ContentPrior::separated(15, 1, 1.0, 0.0, 1);
    RenderMap map{-4.0, 4.0, 3};
    AttackConfig cfg;
    cfg.mode = AttackMode::blur;
    cfg.blur_kernel = 3;
    Rng rng(1);
    CHECK(error_code_of([&] { (void)attack_classical(ImageVec(Eigen::VectorXd::Zero(15)), cfg, map, rng); }) ==
          ErrorCode::invalid_argument);
  }

  TEST_CASE("guided with gamma = 0 reproduces unguided exactly") {
    const Setup s;
    Rng rng(3);
    Message m;
    const ImageVec iw = s.watermarked(rng, m);
    AttackConfig cfg;
    cfg.gamma = 0.0;
    cfg.lambda = 0.3;
    Rng a(44), b(44);
    const AttackOutcome u = attack_unguided(iw, cfg, s.sched, s.prior, s.codec, a);
    cfg.mode = AttackMode::guided;
    const AttackOutcome g = attack_guided(iw, &s.key, cfg, s.sched, s.prior, s.codec, b);
    CHECK(u.image.values == g.image.values);
    CHECK(u.noised_state->values == g.noised_state->values);
  }

  TEST_CASE("a small guidance step raises the watermark loss") {
    const Setup s;
    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
      Message m;
      const LatentVec z = s.codec.to_latent(s.watermarked(rng, m));
      const LatentVec x(z.values + 2.0 * rng.gaussian_vector(64));
      const double before = wm_loss_latent(x, m, s.key);
      CHECK(wm_loss_latent(guidance_update(x, m, s.key, 1e-3), m, s.key) > before);
    }
  }

  TEST_CASE("guided attack needs the key") {
    const Setup s;
    Rng rng(5);
    Message m;
    const ImageVec iw = s.watermarked(rng, m);
    AttackConfig cfg;
    cfg.mode = AttackMode::guided;
    CHECK(error_code_of([&] { (void)attack_guided(iw, nullptr, cfg, s.sched, s.prior, s.codec, rng); }) ==
          ErrorCode::capability_missing);
  }

  TEST_CASE("guidance on the last steps only still erases, with less distortion") {
    const Setup s;
    AttackConfig all;
    all.mode = AttackMode::guided;
    AttackConfig last = all;
    last.guided_steps = GuidedSteps::last(10);
    double acc_last = 0.0, psnr_all = 0.0, psnr_last = 0.0;
    const int n = 150;
    Rng rng(6);
    for (int i = 0; i < n; ++i) {
      Message m;
      const ImageVec iw = s.watermarked(rng, m);
      Rng a(1000 + i), b(1000 + i);
      const ImageVec out_all = attack_guided(iw, &s.key, all, s.sched, s.prior, s.codec, a).image;
      const ImageVec out_last = attack_guided(iw, &s.key, last, s.sched, s.prior, s.codec, b).image;
      acc_last += bit_accuracy(m, decode_hard(out_last, s.key, s.codec));
      psnr_all += psnr(render(out_all, s.map), render(iw, s.map));
      psnr_last += psnr(render(out_last, s.map), render(iw, s.map));
    }
    CHECK(acc_last / n <= 0.55);
    CHECK(psnr_last / n >= psnr_all / n);
  }

  TEST_CASE("config validation names the field") {
    const NoiseSchedule sched = make_linear(10, 1e-4, 0.02);
    AttackConfig cfg;
    cfg.t_start = 11;
    CHECK(error_code_of([&] { cfg.validate(sched); }) == ErrorCode::invalid_argument);
    cfg = {};
    cfg.blur_kernel = 4;
    try {
      cfg.validate(sched);
      FAIL("expected rejection");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("blur_kernel") != std::string::npos);
    }
    cfg = {};
    cfg.crop_frac = 0.5;
    CHECK(error_code_of([&] { cfg.validate(sched); }) == ErrorCode::invalid_argument);
  }
}
