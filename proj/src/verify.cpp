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

#include "wmfrag/verify.hpp"

#include "wmfrag/harness.hpp"
#include "wmfrag/output.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace wmfrag {

bool VerifyReport::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

class Suite {
 public:
  void add(std::string name, bool pass, std::string measured, std::string tolerance) {
    report_.checks.push_back({std::move(name), pass, std::move(measured), std::move(tolerance)});
  }

  // A check that throws is recorded as a failure with the message.
  void run(const std::string& name, const std::function<void(Suite&)>& body) {
    try {
      body(*this);
    } catch (const std::exception& e) {
      add(name, false, std::string("threw: ") + e.what(), "-");
    }
  }

  VerifyReport take() { return std::move(report_); }

 private:
  VerifyReport report_;
};

double rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  return (got - want).norm() / std::max(want.norm(), 1e-300);
}

void check_schedules(Suite& s) {
  const std::vector<std::pair<std::string, NoiseSchedule>> scheds = {
      {"linear", make_linear(1000, 1e-4, 0.02)}, {"cosine", make_cosine(1000)}, {"linear50", make_linear(50, 0.002, 0.4)}};
  double worst = 0.0;
  bool ordered = true;
  for (const auto& [name, sched] : scheds) {
    double prod = 1.0;
    for (int t = 1; t <= sched.steps(); ++t) {
      prod *= 1.0 - sched.beta(t);
      worst = std::max(worst, std::abs(sched.alpha_bar(t) - prod) / prod);
      ordered = ordered && sched.beta(t) > 0.0 && sched.beta(t) < 1.0 && sched.alpha_bar(t) < sched.alpha_bar(t - 1);
    }
  }
  s.add("schedule.alpha_bar_product", worst <= 1e-12, "max rel err " + num(worst), "<= 1e-12");
  s.add("schedule.monotone_and_bounded", ordered, ordered ? "all steps ok" : "violation found",
        "abar strictly decreasing, beta in (0,1)");
}

void check_prior(Suite& s) {
  const NoiseSchedule sched = make_linear(1000, 1e-4, 0.02);
  const ContentPrior prior = ContentPrior::separated(64, 4, 1.0, 8.0, 1);
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int t = 1 + static_cast<int>(rng.next_u64() % 1000);
    const LatentVec x = forward_closed(sample_content(prior, rng).z_clean, sched, t, rng);
    const Eigen::VectorXd g = score(prior, sched, x, t).values;
    Eigen::VectorXd fd(x.size());
    const double h = 1e-5;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      LatentVec up = x, dn = x;
      up.values[j] += h;
      dn.values[j] -= h;
      fd[j] = (log_marginal(prior, sched, up, t) - log_marginal(prior, sched, dn, t)) / (2 * h);
    }
    worst = std::max(worst, rel_err(g, fd));
  }
  s.add("prior.score_finite_difference", worst < 1e-5, "max rel err " + num(worst), "< 1e-5 at 100 points");

  double simplex = 0.0;
  bool nonneg = true;
  for (int i = 0; i < 100; ++i) {
    const int t = static_cast<int>(rng.next_u64() % 1001);
    const double scale = i < 50 ? 1.0 : 1e3;  // far-field points stress the log-sum-exp
    const LatentVec x(scale * rng.gaussian_vector(64));
    const Eigen::VectorXd r = responsibilities(prior, sched, x, t);
    simplex = std::max(simplex, std::abs(r.sum() - 1.0));
    nonneg = nonneg && (r.array() >= 0.0).all();
  }
  s.add("prior.responsibilities_simplex", simplex <= 1e-12 && nonneg, "max |sum - 1| " + num(simplex),
        "<= 1e-12, entries >= 0");
}

void check_reverse_fidelity(Suite& s) {
  const NoiseSchedule sched = make_linear(1000, 1e-4, 0.02);
  const int d = 16;
  const double sigma = 0.7;
  const ContentPrior prior({1.0}, {Eigen::VectorXd::Constant(d, 1.5)}, sigma);
  const int n = 400;
  Rng rng(202);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sum_sq = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) {
    const LatentVec out = reverse_chain(LatentVec(rng.gaussian_vector(d)), sched, prior, 1000, GuidanceSpec{}, rng);
    sum += out.values;
    sum_sq += out.values.cwiseProduct(out.values);
  }
  const Eigen::VectorXd mean = sum / n;
  const Eigen::VectorXd var = (sum_sq - n * mean.cwiseProduct(mean)) / (n - 1);
  const double mean_dev = (mean.array() - 1.5).abs().maxCoeff() / sigma;
  const double var_dev = (var.array() / (sigma * sigma) - 1.0).abs().maxCoeff() / std::sqrt(2.0);
  const double tol = 5.0 / std::sqrt(static_cast<double>(n));
  const bool pass = mean_dev <= tol && var_dev <= tol;
  const std::string measured = "max mean dev " + num(mean_dev) + " sd, max var dev " + num(var_dev) + " sd-units";
  s.add("prior.reverse_fidelity_k1", pass, measured, "<= 5/sqrt(N), N = 400");
  s.add("diffusion.reverse_fidelity_k1", pass, measured, "<= 5/sqrt(N), N = 400");
}

void check_watermark(Suite& s) {
  const int d = 64, b = 32;
  const Codec codec = Codec::generate(3, d);
  Rng rng(303);
  const LatentVec z(rng.gaussian_vector(d));
  const WatermarkKey exact = make_key(2, d, b, 11.0, default_kappa(11.0, b), z.values);
  int recovered = 0;
  double energy = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Message m = Message::random(b, rng);
    const LatentVec z0 = embed(z, m, exact);
    recovered += decode_hard_latent(z0, exact) == m;
    energy = std::max(energy, std::abs((z0.values - z.values).norm() - exact.rho));
  }
  s.add("watermark.round_trip", recovered == 1000, std::to_string(recovered) + "/1000 recovered", "1000/1000");
  s.add("watermark.energy", energy <= 1e-10, "max |norm - rho| " + num(energy), "<= 1e-10");

  const WatermarkKey key = make_key(2, d, b, 11.0, default_kappa(11.0, b), Eigen::VectorXd::Zero(d));
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const ImageVec image(2.0 * rng.gaussian_vector(d));
    const Message target = Message::random(b, rng);
    const Eigen::VectorXd g = wm_loss_grad(image, target, key, codec).values;
    Eigen::VectorXd fd(d);
    const double h = 1e-6;
    for (int j = 0; j < d; ++j) {
      ImageVec up = image, dn = image;
      up.values[j] += h;
      dn.values[j] -= h;
      fd[j] = (wm_loss(up, target, key, codec) - wm_loss(dn, target, key, codec)) / (2 * h);
    }
    worst = std::max(worst, rel_err(g, fd));
  }
  s.add("watermark.gradient_finite_difference", worst < 1e-5, "max rel err " + num(worst), "< 1e-5 at 100 points");

  int same = 0;
  for (int i = 0; i < 100; ++i) {
    const ImageVec image(3.0 * rng.gaussian_vector(d));
    const Eigen::VectorXd r = rng.gaussian_vector(d);
    const Eigen::VectorXd ortho = r - key.carriers.transpose() * (key.carriers * r);
    const ImageVec moved(image.values + codec.to_image(LatentVec(10.0 * ortho)).values);
    same += decode_hard(moved, key, codec) == decode_hard(image, key, codec);
  }
  s.add("watermark.decoder_equivariance", same == 100, std::to_string(same) + "/100 unchanged", "100/100");
}

void check_codec(Suite& s) {
  const Codec codec = Codec::generate(3, 64);
  Rng rng(404);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const LatentVec a(rng.gaussian_vector(64)), b(rng.gaussian_vector(64));
    const ImageVec ia = codec.to_image(a), ib = codec.to_image(b);
    worst = std::max({worst, std::abs(ia.values.norm() - a.values.norm()),
                      std::abs(ia.values.dot(ib.values) - a.values.dot(b.values)),
                      (codec.to_latent(ia).values - a.values).cwiseAbs().maxCoeff()});
  }
  s.add("codec.isometry", worst <= 1e-10, "max deviation " + num(worst), "<= 1e-10");

  const ContentPrior prior = ContentPrior::separated(64, 4, 1.0, 8.0, 1);
  const RenderMap map = RenderMap::for_prior(prior);
  bool monotone = true;
  double idem = 0.0;
  for (int i = 0; i < 100; ++i) {
    const ImageVec image(6.0 * rng.gaussian_vector(64));
    const Grid g = render(image, map);
    const int j = static_cast<int>(rng.next_u64() % 64);
    ImageVec bumped = image;
    bumped.values[j] += std::abs(rng.gaussian()) * 3.0;
    const Grid gb = render(bumped, map);
    monotone = monotone && gb(j / map.side, j % map.side) >= g(j / map.side, j % map.side);
    idem = std::max(idem, (render(unrender(g, map), map) - g).cwiseAbs().maxCoeff());
  }
  s.add("codec.render_monotone_idempotent", monotone && idem <= 1e-12,
        std::string(monotone ? "monotone" : "NOT monotone") + ", re-render deviation " + num(idem),
        "monotone, <= 1e-12");
}

void check_diffusion(Suite& s) {
  const NoiseSchedule sched = make_linear(1000, 1e-4, 0.02);
  const int d = 64;
  const double sigma = 0.5;
  const ContentPrior prior({1.0}, {Eigen::VectorXd::Constant(d, 0.3)}, sigma);
  const WatermarkKey key = make_key(2, d, 8, 1.0, 1.0, Eigen::VectorXd::Zero(d));
  const Eigen::VectorXd p = key.carriers.row(0).transpose();
  const double mu_p = prior.means().front().dot(p);
  Rng rng(505);
  const int n = 20000;
  double worst = 0.0;
  for (int t : {100, 500, 1000}) {
    const double ab = sched.alpha_bar(t);
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double proj = forward_closed(sample_content(prior, rng).z_clean, sched, t, rng).values.dot(p);
      sum += proj;
      sum_sq += proj * proj;
    }
    const double mean = sum / n;
    const double var = (sum_sq - n * mean * mean) / (n - 1);
    const double want_var = ab * sigma * sigma + 1.0 - ab;
    const double z_mean = std::abs(mean - std::sqrt(ab) * mu_p) / std::sqrt(want_var / n);
    const double z_var = std::abs(var - want_var) / (want_var * std::sqrt(2.0 / n));
    worst = std::max({worst, z_mean, z_var});
  }
  s.add("diffusion.forward_moment_law", worst <= 5.0, "max deviation " + num(worst) + " standard errors",
        "<= 5 standard errors at t = 100, 500, 1000");

  // Stepwise chain against the closed form at t = 100.
  {
    const int m = 4000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < m; ++i) {
      LatentVec x = sample_content(prior, rng).z_clean;
      for (int t = 1; t <= 100; ++t) x = forward_step(x, sched, t, rng);
      const double proj = x.values.dot(p);
      sum += proj;
      sum_sq += proj * proj;
    }
    const double ab = sched.alpha_bar(100);
    const double mean = sum / m;
    const double var = (sum_sq - m * mean * mean) / (m - 1);
    const double want_var = ab * sigma * sigma + 1.0 - ab;
    const double dev = std::max(std::abs(mean - std::sqrt(ab) * mu_p) / std::sqrt(want_var / m),
                                std::abs(var - want_var) / (want_var * std::sqrt(2.0 / m)));
    s.add("diffusion.stepwise_matches_closed_form", dev <= 5.0, num(dev) + " standard errors", "<= 5");
  }

  // The reverse chain only ever receives x_{t_start}: replaying it from the
  // reported noised state with the same stream reproduces the output exactly.
  {
    const ContentPrior mix = ContentPrior::separated(d, 4, 1.0, 8.0, 1);
    bool identical = true;
    for (int i = 0; i < 10; ++i) {
      const LatentVec z0 = sample_content(mix, rng).z_clean;
      const std::uint64_t seed = rng.next_u64();
      Rng a(seed), b(seed);
      const Regeneration regen = regenerate(z0, sched, mix, 300, GuidanceSpec{}, a);
      (void)b.gaussian_vector(d);  // the forward draw regenerate consumed
      const LatentVec replay = reverse_chain(regen.noised, sched, mix, 300, GuidanceSpec{}, b);
      identical = identical && replay.values == regen.output.values;
    }
    s.add("diffusion.data_processing_structure", identical,
          identical ? "output reproduced from x_t_start alone" : "output depends on more than x_t_start",
          "exact replay in 10/10 cases");
  }
}

void check_snr(Suite& s, const NoiseSchedule& sched, const std::vector<int>& ts, const std::string& name,
               std::uint64_t seed) {
  const int d = 64;
  const ContentPrior prior = ContentPrior::separated(d, 1, 1.0, 0.0, 1);
  const WatermarkKey key = make_key(2, d, 32, 1.0, default_kappa(1.0, 32), prior.global_mean());
  Rng rng(seed);
  double worst = 0.0;
  for (int t : ts) {
    const double emp = snr_empirical(key, sched, prior, t, 100000, rng).value;
    worst = std::max(worst, std::abs(emp / snr_analytic(sched, t, 1.0, d) - 1.0));
  }
  std::string where;
  for (int t : ts) where += (where.empty() ? "t = " : ", ") + std::to_string(t);
  s.add(name, worst <= 0.03, "max rel err " + num(worst) + " (" + where + ")", "<= 3% at N = 1e5");
}

ExperimentConfig small_sweep() {
  ExperimentConfig c;
  c.trials = 150;
  c.sweep.mode = {AttackMode::unguided, AttackMode::guided};
  c.sweep.t_start = {100, 250, 500, 750, 1000};
  return c;
}

void check_attack_and_dpi(Suite& s) {
  const SweepResult r = run_sweep(small_sweep(), 1);
  const std::size_t n_t = 5;
  double worst_gap = -1.0;
  double worst_rise = -INFINITY;
  bool monotone = true;
  for (std::size_t i = 0; i < n_t; ++i) {
    const PointSummary& u = r.summaries[i];
    const PointSummary& g = r.summaries[n_t + i];
    worst_gap = std::max(worst_gap, g.bit_acc_mean - u.bit_acc_mean);
    if (i + 1 < n_t) {
      const PointSummary& next = r.summaries[i + 1];
      const double slack = 3.0 * std::hypot(u.bit_acc_se, next.bit_acc_se);
      worst_rise = std::max(worst_rise, next.bit_acc_mean - u.bit_acc_mean - slack);
      monotone = monotone && next.bit_acc_mean <= u.bit_acc_mean + slack;
    }
  }
  s.add("attack.guided_at_least_unguided", worst_gap <= 0.005,
        "max acc(guided) - acc(unguided) " + num(worst_gap), "<= 0.005 at each of 5 t_start values");
  s.add("attack.monotone_in_t_start", monotone, "max excess rise " + num(worst_rise), "rise <= 3 combined se");

  bool dpi = true;
  double worst_excess = -INFINITY;
  for (const auto& summary : r.summaries) {
    if (!summary.dpi) continue;
    dpi = dpi && summary.dpi->pass;
    for (const auto& p : summary.dpi->pairs)
      worst_excess = std::max(worst_excess, p.downstream_value - p.upstream_value - p.slack);
  }
  s.add("infotheory.data_processing", dpi, "max I(M;I') - I(M;X_t) - slack " + num(worst_excess) + " bits",
        "<= 0 at the 5 unguided sweep points");

  Rng rng(707);
  const ContentPrior prior = ContentPrior::separated(64, 4, 1.0, 8.0, 1);
  const WatermarkKey key = make_key(2, 64, 32, 11.0, default_kappa(11.0, 32), prior.global_mean());
  double worst = INFINITY;
  for (int i = 0; i < 100; ++i) {
    const LatentVec x(prior.global_mean() + 2.0 * rng.gaussian_vector(64));
    const Message target = Message::random(32, rng);
    const double before = wm_loss_latent(x, target, key);
    const double after = wm_loss_latent(guidance_update(x, target, key, 1e-4), target, key);
    worst = std::min(worst, after - before);
  }
  s.add("attack.first_order_guidance", worst >= -1e-12, "min L(after) - L(before) " + num(worst),
        ">= -1e-12 at gamma = 1e-4, 100 states");

  ExperimentConfig c;
  c.trials = 200;
  c.schedule.T = 50;
  c.schedule.beta_start = 0.002;
  c.schedule.beta_end = 0.4;
  c.attack.mode = AttackMode::guided;
  c.attack.reference = ReferenceKind::content;
  c.attack.lambda = 1.0;
  const double match = run_sweep(c, 1).summaries.front().content_match_rate;
  s.add("attack.content_preservation_guided", match >= 0.9, "content match " + num(match),
        ">= 0.90 over 200 guided trials, 8 sigma separation");
}

void check_infotheory(Suite& s) {
  bool mono = true;
  for (double v = 0.25; v <= 4.0; v += 0.25) {
    double prev = -1.0;
    for (double a = 0.0; a <= 4.0; a += 0.25) {
      const double cur = mi_per_bit_analytic({a, v});
      mono = mono && cur >= prev - 1e-12;
      prev = cur;
    }
  }
  for (double a = 0.25; a <= 4.0; a += 0.25) {
    double prev = 2.0;
    for (double v = 0.25; v <= 4.0; v += 0.25) {
      const double cur = mi_per_bit_analytic({a, v});
      mono = mono && cur <= prev + 1e-12;
      prev = cur;
    }
  }
  s.add("infotheory.mi_monotone_in_a_and_v", mono, mono ? "monotone on 16x16 grid" : "violation", "exact");

  const ContentPrior prior = ContentPrior::separated(64, 1, 1.0, 0.0, 1);
  const WatermarkKey key = make_key(2, 64, 32, 11.0, default_kappa(11.0, 32), prior.global_mean());
  bool nonincreasing = true;
  for (const NoiseSchedule& sched : {make_linear(1000, 1e-4, 0.02), make_cosine(1000)}) {
    double prev = INFINITY;
    for (int t = 0; t <= sched.steps(); ++t) {
      const double cur = mi_message_state_analytic(key, sched, prior, t).value;
      nonincreasing = nonincreasing && cur <= prev + 1e-12;
      prev = cur;
    }
  }
  s.add("infotheory.mi_nonincreasing_in_t", nonincreasing, nonincreasing ? "t = 0..T, both schedules" : "violation",
        "I(t+1) <= I(t) + 1e-12");

  bool fano = true;
  for (int b : {1, 8, 32, 100}) {
    fano = fano && fano_success_upper(0.0, b) == std::exp2(-b);
    double prev = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const double cur = fano_success_upper(b * i / 100.0, b);
      fano = fano && cur >= prev;
      prev = cur;
    }
  }
  s.add("infotheory.fano_zero_and_monotone", fano, fano ? "exact at 0, monotone on grid" : "violation",
        "P(0) = 2^-B exactly, non-decreasing");

  // Monte Carlo oracle: I = 1 - E[log2(1 + exp(-2 a y s / v))] with y = s a + sqrt(v) n.
  Rng rng(808);
  double worst = 0.0;
  for (const ChannelSpec ch : {ChannelSpec{0.5, 1.0}, ChannelSpec{1.5, 0.8}, ChannelSpec{3.0, 2.0}}) {
    const int n = 1000000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sgn = rng.coin() ? 1.0 : -1.0;
      const double y = sgn * ch.a + std::sqrt(ch.v) * rng.gaussian();
      const double u = -2.0 * ch.a * y * sgn / ch.v;
      acc += (u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u))) / std::log(2.0);
    }
    worst = std::max(worst, std::abs(1.0 - acc / n - mi_per_bit_analytic(ch)));
  }
  s.add("infotheory.quadrature_matches_monte_carlo", worst <= 0.005, "max |diff| " + num(worst) + " bits",
        "<= 0.005 bits at 3 channels");

  ExperimentConfig c;
  c.prior.K = 1;
  c.trials = 200;
  c.sweep.t_start = {25, 50, 100, 200, 1000};
  const SweepResult r = run_sweep(c, 1);
  bool consistent = true;
  double worst_excess = -INFINITY;
  for (const auto& p : r.summaries) {
    const double rate = static_cast<double>(p.decode_successes) / p.trials;
    const double bound = *p.fano_success;
    const double se = std::sqrt(bound * (1.0 - bound) / p.trials);
    worst_excess = std::max(worst_excess, rate - bound - 3.0 * se);
    consistent = consistent && rate <= bound + 3.0 * se;
  }
  s.add("infotheory.fano_consistency", consistent, "max success - bound - 3se " + num(worst_excess),
        "<= 0 at 5 K = 1 sweep points");
}

void check_metrics(Suite& s) {
  Rng rng(909);
  double asym = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Grid a = (Grid::Random(8, 8).array() + 1.0) / 2.0;
    const Grid b = (Grid::Random(8, 8).array() + 1.0) / 2.0;
    asym = std::max({asym, std::abs(psnr(a, b) - psnr(b, a)), std::abs(ssim(a, b) - ssim(b, a))});
  }
  s.add("metrics.psnr_ssim_symmetry", asym <= 1e-15, "max asymmetry " + num(asym), "<= 1e-15");

  // rho / sqrt(B) = 6 projection standard deviations.
  const ContentPrior prior = ContentPrior::separated(64, 1, 1.0, 0.0, 1);
  const double rho = 6.0 * std::sqrt(32.0);
  const WatermarkKey key = make_key(2, 64, 32, rho, default_kappa(rho, 32), prior.global_mean());
  const Codec codec = Codec::generate(3, 64);
  double worst = 1.0;
  for (int i = 0; i < 1000; ++i) {
    const Message m = Message::random(32, rng);
    const ImageVec image = codec.to_image(embed(sample_content(prior, rng).z_clean, m, key));
    worst = std::min(worst, bit_accuracy(m, decode_hard(image, key, codec)));
  }
  s.add("metrics.clean_bit_accuracy", worst == 1.0, "min bit accuracy " + num(worst), "1.0 over 1000 images");
}

void check_harness(Suite& s) {
  ExperimentConfig c;
  c.trials = 20;
  c.sweep.t_start = {50, 100};
  c.sweep.mode = {AttackMode::unguided, AttackMode::noise};
  c.attack.noise_sigma = 0.3;
  const auto render_all = [&](int threads) {
    const SweepResult r = run_sweep(c, threads);
    std::string csv = csv_header();
    for (const auto& p : r.records)
      for (const auto& rec : p) csv += csv_row(rec);
    return std::array<std::string, 3>{csv, summary_json(r).dump(),
                                      plot_svg(parse_csv(csv), "t_start", "bit_acc", "mode")};
  };
  const auto first = render_all(1);
  const auto second = render_all(1);
  const auto threaded = render_all(2);
  const bool same = first == second && first == threaded;
  s.add("harness.end_to_end_determinism", same, same ? "CSV, JSON and SVG identical" : "outputs differ",
        "byte-identical across two runs and 1 vs 2 threads");

  const Experiment exp(c);
  std::vector<std::string> forward, backward(10);
  for (std::uint64_t i = 0; i < 10; ++i) forward.push_back(csv_row(run_trial(exp, i)));
  for (std::uint64_t i = 10; i-- > 0;) backward[i] = csv_row(run_trial(exp, i));
  s.add("harness.seed_isolation", forward == backward, forward == backward ? "records unchanged" : "records differ",
        "identical per-trial records in reversed order");

  const std::string want =
      "trial_id,seed,mode,t_start,gamma,lambda,rho,B,d,K,bit_acc,decode_success,psnr_db,ssim,snr_emp,snr_analytic,"
      "content_match\n";
  s.add("harness.csv_schema", csv_header() == want, csv_header() == want ? "17 columns in order" : "header differs",
        "fixed column order");
}

}  // namespace

VerifyReport run_verify(const VerifyOptions& opts) {
  struct FaultGuard {
    explicit FaultGuard(bool on) { testing::set_flip_gradient_sign(on); }
    ~FaultGuard() { testing::set_flip_gradient_sign(false); }
  } guard(opts.inject_gradient_fault);

  Suite s;
  s.run("schedule", check_schedules);
  s.run("prior", check_prior);
  s.run("prior.reverse_fidelity_k1", check_reverse_fidelity);
  s.run("watermark", check_watermark);
  s.run("codec", check_codec);
  s.run("diffusion", check_diffusion);
  s.run("diffusion.snr_law", [](Suite& x) {
    check_snr(x, make_linear(1000, 1e-4, 0.02), {100, 500, 1000}, "diffusion.snr_law", 606);
  });
  s.run("metrics.snr_agreement_cosine", [](Suite& x) {
    check_snr(x, make_cosine(1000), {100, 500, 900}, "metrics.snr_agreement_cosine", 607);
  });
  s.run("attack", check_attack_and_dpi);
  s.run("infotheory", check_infotheory);
  s.run("metrics", check_metrics);
  s.run("harness", check_harness);
  return s.take();
}

std::string format_report(const VerifyReport& report) {
  std::ostringstream os;
  int failed = 0;
  for (const auto& c : report.checks) {
    failed += !c.pass;
    char line[512];
    std::snprintf(line, sizeof line, "[%s] %-42s %s (want %s)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                  c.measured.c_str(), c.tolerance.c_str());
    os << line;
  }
  os << report.checks.size() - failed << "/" << report.checks.size() << " checks passed\n";
  return os.str();
}

nlohmann::json report_json(const VerifyReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks)
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"measured", c.measured}, {"tolerance", c.tolerance}});
  return {{"pass", report.pass()}, {"checks", checks}};
}

}  // namespace wmfrag
