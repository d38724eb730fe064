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
#include "wmfrag/codec.hpp"
#include "wmfrag/diffusion.hpp"
#include "wmfrag/metrics.hpp"

#include <cmath>

using namespace wmfrag;
using wmfrag::test::error_code_of;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(xs.size() - 1);
  return m;
}

}  // namespace

TEST_SUITE("diffusion") {
  TEST_CASE("forward at t = 0 returns the input") {
    const NoiseSchedule s = make_linear(100, 1e-4, 0.02);
    Rng rng(1);
    const LatentVec z(rng.gaussian_vector(8));
    CHECK(forward_closed(z, s, 0, rng).values == z.values);
  }

  TEST_CASE("forward projections have the closed-form moments") {
    const NoiseSchedule s = make_linear(1000, 1e-4, 0.02);
    Eigen::VectorXd z0 = Eigen::VectorXd::Zero(8);
    z0[0] = 3.0;
    Eigen::VectorXd p = Eigen::VectorXd::Ones(8) / std::sqrt(8.0);
    Rng rng(2);
    const int n = 100000;
    for (int t : {50, 500}) {
      std::vector<double> proj(n);
      for (int i = 0; i < n; ++i) proj[i] = forward_closed(LatentVec(z0), s, t, rng).values.dot(p);
      const Moments m = moments(proj);
      const double ab = s.alpha_bar(t);
      CHECK(std::abs(m.mean - std::sqrt(ab) * z0.dot(p)) < 5.0 / std::sqrt(n));
      CHECK(std::abs(m.var - (1.0 - ab)) < 5.0 / std::sqrt(n));
    }
  }

  TEST_CASE("pure-noise limit") {
    const NoiseSchedule s = make_linear(50, 0.002, 0.4);
    CHECK(s.alpha_bar(50) < 1e-4);
    Rng rng(3);
    std::vector<double> xs;
    for (int i = 0; i < 20000; ++i) xs.push_back(forward_closed(LatentVec(Eigen::VectorXd::Constant(1, 5.0)), s, 50, rng).values[0]);
    const Moments m = moments(xs);
    CHECK(std::abs(m.mean) < 0.05);
    CHECK(m.var == doctest::Approx(1.0).epsilon(0.03));
  }

  TEST_CASE("iterated forward steps reach the closed-form marginal") {
    const NoiseSchedule s = make_linear(100, 1e-3, 0.05);
    Rng rng(4);
    const double z0 = 2.0;
    std::vector<double> xs;
    for (int i = 0; i < 20000; ++i) {
      LatentVec x(Eigen::VectorXd::Constant(1, z0));
      for (int t = 1; t <= 100; ++t) x = forward_step(x, s, t, rng);
      xs.push_back(x.values[0]);
    }
    const Moments m = moments(xs);
    const double ab = s.alpha_bar(100);
    CHECK(std::abs(m.mean - std::sqrt(ab) * z0) < 5.0 * std::sqrt((1.0 - ab) / 20000));
    CHECK(m.var == doctest::Approx(1.0 - ab).epsilon(0.04));
  }

  TEST_CASE("a vanishing beta makes the forward step the identity") {
    const NoiseSchedule s = make_linear(3, 1e-15, 1e-15);
    Rng rng(5);
    const LatentVec x(rng.gaussian_vector(6));
    CHECK((forward_step(x, s, 2, rng).values - x.values).norm() < 1e-6);
  }

  TEST_CASE("the last reverse step is deterministic") {
    const NoiseSchedule s = make_linear(100, 1e-4, 0.02);
    const ContentPrior p = ContentPrior::separated(8, 2, 1.0, 4.0, 1);
    Rng a(1), b(999);
    const LatentVec x(Eigen::VectorXd::LinSpaced(8, -1.0, 1.0));
    CHECK(reverse_step(x, s, p, 1, a, {}).values == reverse_step(x, s, p, 1, b, {}).values);
    Rng c(7), d(7);
    CHECK(reverse_step(x, s, p, 40, c, {}).values == reverse_step(x, s, p, 40, d, {}).values);
  }

  TEST_CASE("reverse chain from pure noise samples the prior") {
    const NoiseSchedule s = make_cosine(100);
    const double sigma = 0.5;
    Eigen::VectorXd mu(3);
    mu << 1.0, -2.0, 0.5;
    const ContentPrior p({1.0}, {mu}, sigma);
    Rng rng(8);
    const int n = 4000;
    std::vector<std::vector<double>> coords(3);
    for (int i = 0; i < n; ++i) {
      const LatentVec x0 = reverse_chain(LatentVec(rng.gaussian_vector(3)), s, p, 100, {}, rng);
      for (int j = 0; j < 3; ++j) coords[j].push_back(x0.values[j]);
    }
    for (int j = 0; j < 3; ++j) {
      const Moments m = moments(coords[j]);
      CHECK(std::abs(m.mean - mu[j]) < 5.0 * sigma / std::sqrt(n));
      CHECK(m.var == doctest::Approx(sigma * sigma).epsilon(0.08));
    }
  }

  TEST_CASE("full-strength regeneration forgets the watermark direction") {
    const NoiseSchedule s = make_linear(50, 0.002, 0.4);
    const ContentPrior p = ContentPrior::separated(16, 1, 1.0, 0.0, 1);
    const WatermarkKey key = make_key(2, 16, 8, 6.0, 1.0, Eigen::VectorXd::Zero(16));
    Rng rng(9);
    const int n = 3000;
    std::vector<double> proj;
    for (int i = 0; i < n; ++i) {
      const Message m = Message::random(8, rng);
      const Eigen::VectorXd delta = watermark_delta(m, key);
      const LatentVec z0(sample_content(p, rng).z_clean.values + delta);
      proj.push_back(regenerate(z0, s, p, 50, {}, rng).output.values.dot(delta) / delta.norm());
    }
    const Moments mo = moments(proj);
    CHECK(std::abs(mo.mean) < 3.0 * std::sqrt(mo.var / n));
  }

  TEST_CASE("weak regeneration keeps the watermark") {
    const NoiseSchedule s = make_linear(1000, 1e-4, 0.02);
    const ContentPrior p = ContentPrior::separated(64, 1, 1.0, 0.0, 1);
    const WatermarkKey key = make_key(2, 64, 32, 11.0, 1.0, Eigen::VectorXd::Zero(64));
    Rng rng(10);
    double acc = 0.0;
    const int n = 150;
    for (int i = 0; i < n; ++i) {
      const Message m = Message::random(32, rng);
      const LatentVec z0 = embed(sample_content(p, rng).z_clean, m, key);
      acc += bit_accuracy(m, decode_hard_latent(regenerate(z0, s, p, 100, {}, rng).output, key));
    }
    CHECK(acc / n >= 0.95);
  }

  TEST_CASE("a stronger reference pull ends closer to the reference") {
    const NoiseSchedule s = make_linear(50, 0.002, 0.4);
    const ContentPrior p = ContentPrior::separated(16, 1, 1.0, 0.0, 1);
    const RenderMap map = RenderMap::for_prior(p);
    Rng rng(11);
    std::vector<double> mean_psnr;
    for (double lambda : {0.0, 0.5, 2.0, 8.0}) {
      Rng r(12);
      double total = 0.0;
      for (int i = 0; i < 200; ++i) {
        const LatentVec ref = sample_content(p, r).z_clean;
        GuidanceSpec g;
        g.lambda = lambda;
        g.reference = ref;
        const LatentVec out = regenerate(ref, s, p, 50, g, r).output;
        total += psnr(render(ImageVec(out.values), map), render(ImageVec(ref.values), map));
      }
      mean_psnr.push_back(total / 200);
    }
    for (std::size_t i = 1; i < mean_psnr.size(); ++i) CHECK(mean_psnr[i] > mean_psnr[i - 1]);
  }

  TEST_CASE("guided step selection") {
    CHECK(GuidedSteps::parse("all").contains(50, 50));
    const GuidedSteps last = GuidedSteps::parse("last:10");
    CHECK(last.contains(10, 50));
    CHECK_FALSE(last.contains(11, 50));
    const GuidedSteps fin = GuidedSteps::parse("final:0.5");
    CHECK(fin.contains(25, 50));
    CHECK_FALSE(fin.contains(26, 50));
    CHECK(GuidedSteps::parse(last.to_string()).count == 10);
    CHECK(error_code_of([] { (void)GuidedSteps::parse("last:0"); }) == ErrorCode::parse);
    CHECK(error_code_of([] { (void)GuidedSteps::parse("some"); }) == ErrorCode::parse);
    CHECK(error_code_of([] { (void)GuidedSteps::parse("final:1.5"); }) == ErrorCode::parse);
  }

  TEST_CASE("guidance and step ranges are validated") {
    GuidanceSpec g;
    g.gamma = 0.1;
    CHECK(error_code_of([&] { g.validate(); }) == ErrorCode::invalid_argument);
    const NoiseSchedule s = make_linear(10, 1e-4, 0.02);
    const ContentPrior p = ContentPrior::separated(4, 1, 1.0, 0.0, 1);
    Rng rng(1);
    CHECK(error_code_of([&] { (void)regenerate(LatentVec(Eigen::VectorXd::Zero(4)), s, p, 11, {}, rng); }) ==
          ErrorCode::out_of_range);
    CHECK(error_code_of([&] { (void)reverse_step(LatentVec(Eigen::VectorXd::Zero(4)), s, p, 0, rng, {}); }) ==
          ErrorCode::out_of_range);
  }
}
