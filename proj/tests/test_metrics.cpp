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
#include "wmfrag/metrics.hpp"

#include <cmath>

using namespace wmfrag;
using wmfrag::test::error_code_of;

TEST_SUITE("metrics") {
  TEST_CASE("bit accuracy and decode success") {
    const Message m({1, 0, 1, 1});
    CHECK(bit_accuracy(m, m) == 1.0);
    CHECK(bit_accuracy(m, m.complement()) == 0.0);
    CHECK(bit_accuracy(m, m.flipped(0)) == 0.75);
    CHECK(decode_success(m, m));
    CHECK_FALSE(decode_success(m, m.flipped(3)));
    CHECK(error_code_of([&] { (void)bit_accuracy(m, Message({1})); }) == ErrorCode::dimension_mismatch);
  }

  TEST_CASE("random guessing sits at chance") {
    Rng rng(17);
    const int n = 10000, B = 32;
    double acc = 0.0;
    int successes = 0;
    for (int i = 0; i < n; ++i) {
      const Message m = Message::random(B, rng);
      const Message guess = Message::random(B, rng);
      acc += bit_accuracy(m, guess);
      successes += decode_success(m, guess);
    }
    CHECK(std::abs(acc / n - 0.5) <= 3.0 / (2.0 * std::sqrt(static_cast<double>(n) * B)));
    CHECK(successes == 0);
  }

  TEST_CASE("analytic SNR") {
    CHECK(snr_analytic(make_linear(1, 0.5, 0.5), 1, 1.0, 1) == doctest::Approx(1.0));
    CHECK(snr_analytic(make_linear(1, 0.1, 0.1), 1, 2.0, 4) == doctest::Approx(9.0));
    const NoiseSchedule s = make_linear(1000, 1e-4, 0.02);
    CHECK(snr_analytic(s, 1000, 1.0, 64) < 1e-6);
    CHECK(error_code_of([&] { (void)snr_analytic(s, 0, 1.0, 64); }) == ErrorCode::invalid_argument);
  }

  TEST_CASE("empirical SNR matches the analytic law") {
    const NoiseSchedule s = make_linear(1, 0.5, 0.5);
    const ContentPrior p = ContentPrior::separated(64, 4, 1.0, 8.0, 1);
    const WatermarkKey key = make_key(2, 64, 32, 1.0, 1.0, p.global_mean());
    Rng rng(23);
    const SnrEstimate e = snr_empirical(key, s, p, 1, 100000, rng);
    CHECK(e.value == doctest::Approx(1.0 / 64.0).epsilon(0.03));
    CHECK(e.stderr_value > 0.0);
    Rng rng0(1);
    CHECK(std::isinf(snr_empirical(key, s, p, 0, 10, rng0).value));
  }

  TEST_CASE("PSNR") {
    const Grid a = Grid::Constant(8, 8, 0.3);
    CHECK(psnr(a, a) == kPsnrSaturated);
    CHECK(psnr(Grid::Zero(8, 8), Grid::Ones(8, 8)) == doctest::Approx(0.0).scale(1.0));
    CHECK(psnr(a, Grid::Constant(8, 8, 0.4)) == doctest::Approx(20.0));
    CHECK(error_code_of([&] { (void)psnr(a, Grid::Zero(7, 8)); }) == ErrorCode::dimension_mismatch);
  }

  TEST_CASE("SSIM") {
    Rng rng(5);
    Grid g(8, 8);
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = rng.uniform();
    CHECK(ssim(g, g) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ssim(g, Grid::Ones(8, 8) - g) < 0.0);
    // Constant grids: variances and covariance vanish, leaving the luminance term.
    const double c1 = 1e-4, m1 = 0.4, m2 = 0.6;
    const double want = (2 * m1 * m2 + c1) / (m1 * m1 + m2 * m2 + c1);
    CHECK(ssim(Grid::Constant(8, 8, m1), Grid::Constant(8, 8, m2)) == doctest::Approx(want).epsilon(1e-12));
    CHECK(error_code_of([] { (void)ssim(Grid::Zero(6, 6), Grid::Zero(6, 6)); }) == ErrorCode::invalid_argument);
  }

  TEST_CASE("content match") {
    const ContentPrior p = ContentPrior::separated(16, 4, 1.0, 8.0, 3);
    const Codec codec = Codec::generate(4, 16);
    Rng rng(6);
    int mismatches = 0;
    for (int i = 0; i < 200; ++i) {
      const ImageVec a = codec.to_image(LatentVec(p.means()[0] + rng.gaussian_vector(16)));
      const ImageVec b = codec.to_image(LatentVec(p.means()[2] + rng.gaussian_vector(16)));
      CHECK(content_match(p, a, a, codec));
      mismatches += !content_match(p, a, b, codec);
    }
    CHECK(mismatches == 200);
    const ContentPrior one = ContentPrior::separated(16, 1, 1.0, 0.0, 3);
    CHECK(content_match(one, codec.to_image(LatentVec(rng.gaussian_vector(16))),
                        codec.to_image(LatentVec(rng.gaussian_vector(16))), codec));
  }
}
