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


// End-to-end acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
// Everything runs single-threaded so the timing line means something.

#include "wmfrag/config.hpp"
#include "wmfrag/harness.hpp"
#include "wmfrag/infotheory.hpp"
#include "wmfrag/metrics.hpp"
#include "wmfrag/prior.hpp"
#include "wmfrag/diffusion.hpp"
#include "wmfrag/watermark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#ifndef WMFRAG_CONFIG_DIR
#error "WMFRAG_CONFIG_DIR must point at the configs directory"
#endif
#ifndef WMFRAG_CLI_PATH
#error "WMFRAG_CLI_PATH must point at the CLI binary"
#endif

using namespace wmfrag;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ExperimentConfig cfg(const std::string& name) { return load_config(std::string(WMFRAG_CONFIG_DIR) + "/" + name); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void expect(bool ok, const std::string& what) {
    pass = pass && ok;
    if (detail.tellp() > 0) detail << "; ";
    detail << (ok ? "" : "!! ") << what;
  }
};

double binomial_se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

double success_rate(const PointSummary& s) {
  return static_cast<double>(s.decode_successes) / static_cast<double>(s.trials);
}

void snr_decay(Outcome& o) {
  const ExperimentConfig c = cfg("c1_snr.json");
  const Experiment exp(c);
  for (int t : {100, 500, 1000}) {
    Rng rng = Rng::stream(c.master_seed, static_cast<std::uint64_t>(t));
    const double emp = snr_empirical(exp.key, exp.schedule, exp.prior, t, 100000, rng).value;
    const double ana = snr_analytic(exp.schedule, t, c.watermark.rho, c.prior.d);
    const double rel = std::abs(emp - ana) / ana;
    o.expect(rel < 0.03, "t=" + std::to_string(t) + " rel " + fmt("%.4f", rel));
  }
}

void erasure(Outcome& o) {
  ExperimentConfig c = cfg("c2_erasure_k1.json");
  const Experiment exp(c);
  double prev = mi_message_state_analytic(exp.key, exp.schedule, exp.prior, 0).value;
  bool monotone = true;
  int first_below = 0;
  for (int t = 1; t <= exp.schedule.steps(); ++t) {
    const double cur = mi_message_state_analytic(exp.key, exp.schedule, exp.prior, t).value;
    monotone = monotone && cur <= prev + 1e-12;
    prev = cur;
    if (first_below == 0 && exp.schedule.alpha_bar(t) < 1e-4) first_below = t;
  }
  o.expect(monotone, monotone ? "analytic non-increasing on 0..T" : "analytic increases somewhere");
  const double at = mi_message_state_analytic(exp.key, exp.schedule, exp.prior, first_below).value;
  o.expect(at < 0.01, "I(t=" + std::to_string(first_below) + ") = " + fmt("%.2e", at) + " bits");

  const SweepResult r = run_sweep(c, 1);
  for (const PointSummary& s : r.summaries) {
    const double B = c.watermark.B;
    const double diff = std::abs(s.mi_state->value - *s.mi_analytic) / B;
    o.expect(diff <= 0.02, s.label + " |plug-in - analytic|/B " + fmt("%.4f", diff));
  }
}

void decode_failure(Outcome& o) {
  for (const char* name : {"c3_unguided.json", "c3_guided_t50.json"}) {
    const ExperimentConfig c = cfg(name);
    const PointSummary s = run_sweep(c, 1).summaries.at(0);
    const bool guided = c.attack.mode == AttackMode::guided;
    const bool acc_ok = guided ? s.bit_acc_mean <= 0.52 : (s.bit_acc_mean >= 0.485 && s.bit_acc_mean <= 0.515);
    o.expect(acc_ok && s.decode_successes == 0, std::string(guided ? "guided" : "unguided") + " acc " +
                                                    fmt("%.4f", s.bit_acc_mean) + " success " +
                                                    std::to_string(s.decode_successes) + "/" + std::to_string(s.trials));
  }
}

// Shared by the survival and DPI checks.
SweepResult survival_sweep() { return run_sweep(cfg("c4_survival.json"), 1); }

void survival(Outcome& o, const SweepResult& r) {
  const int T = r.points.at(0).config.schedule.T;
  const int weak = (T + 9) / 10;
  bool found = false;
  for (std::size_t i = 0; i < r.summaries.size(); ++i) {
    if (r.points[i].config.attack.t_start == weak) {
      found = true;
      o.expect(r.summaries[i].bit_acc_mean >= 0.95, "t=" + std::to_string(weak) + " acc " +
                                                        fmt("%.4f", r.summaries[i].bit_acc_mean));
    }
  }
  o.expect(found, "sweep contains t_start = ceil(0.1T)");
  std::ostringstream accs;
  bool monotone = r.summaries.size() == 5;
  for (std::size_t i = 0; i < r.summaries.size(); ++i) {
    const PointSummary& s = r.summaries[i];
    accs << (i ? "," : "") << fmt("%.3f", s.bit_acc_mean);
    if (i == 0) continue;
    const PointSummary& p = r.summaries[i - 1];
    monotone = monotone && s.bit_acc_mean <= p.bit_acc_mean + 3.0 * std::hypot(s.bit_acc_se, p.bit_acc_se);
  }
  o.expect(monotone, "5-point acc " + accs.str() + " non-increasing within 3 se");
}

void classical_gap(Outcome& o) {
  for (const char* name : {"c5_noise.json", "c5_blur.json", "c5_crop.json"}) {
    const PointSummary s = run_sweep(cfg(name), 1).summaries.at(0);
    const bool psnr_ok = std::abs(s.psnr_mean - 30.0) <= 0.5;
    o.expect(s.bit_acc_mean >= 0.90 && psnr_ok,
             std::string(name).substr(3, std::string(name).size() - 8) + " acc " + fmt("%.4f", s.bit_acc_mean) +
                 " @ " + fmt("%.2f", s.psnr_mean) + " dB");
  }
  const PointSummary d = run_sweep(cfg("c5_diffusion.json"), 1).summaries.at(0);
  o.expect(d.bit_acc_mean <= 0.60, "diffusion acc " + fmt("%.4f", d.bit_acc_mean));
}

void content_preservation(Outcome& o) {
  for (const char* name : {"c6_content_unguided.json", "c6_content_guided.json"}) {
    const ExperimentConfig c = cfg(name);
    const PointSummary s = run_sweep(c, 1).summaries.at(0);
    const bool guided = c.attack.mode == AttackMode::guided;
    const double need = guided ? 0.90 : 0.95;
    const bool acc_ok = guided ? s.bit_acc_mean <= 0.52 : (s.bit_acc_mean >= 0.485 && s.bit_acc_mean <= 0.515);
    o.expect(s.content_match_rate >= need && acc_ok && s.decode_successes == 0,
             std::string(guided ? "guided" : "unguided") + " lambda " + fmt("%g", c.attack.lambda) + " match " +
                 fmt("%.3f", s.content_match_rate) + " acc " + fmt("%.4f", s.bit_acc_mean) + " success " +
                 std::to_string(s.decode_successes));
  }
}

void fano(Outcome& o) {
  const SweepResult r = run_sweep(cfg("c7_fano_k1.json"), 1);
  double worst = -1.0;
  std::string worst_label;
  for (const PointSummary& s : r.summaries) {
    if (!s.fano_success) {
      o.expect(false, s.label + " has no analytic MI");
      continue;
    }
    const double bound = *s.fano_success;
    const double slack = 3.0 * binomial_se(bound, s.trials);
    const double margin = success_rate(s) - (bound + slack);
    if (margin > worst || worst_label.empty()) {
      worst = margin;
      worst_label = s.label;
    }
    if (margin > 0) o.expect(false, s.label + " success " + fmt("%.3f", success_rate(s)) + " > " + fmt("%.3f", bound));
  }
  o.expect(true, std::to_string(r.summaries.size()) + " points, tightest " + worst_label + " margin " +
                     fmt("%.3f", worst));
}

void dpi(Outcome& o, const SweepResult& r) {
  int points = 0;
  for (const PointSummary& s : r.summaries) {
    if (!s.mi_state) continue;
    ++points;
    const double slack = 3.0 * std::hypot(s.mi_output.stderr_bits, s.mi_state->stderr_bits);
    const bool ok = s.mi_output.value <= s.mi_state->value + slack;
    if (!ok)
      o.expect(false, s.label + " out " + fmt("%.3f", s.mi_output.value) + " > state " +
                          fmt("%.3f", s.mi_state->value) + " + " + fmt("%.3f", slack));
  }
  o.expect(points == 5, std::to_string(points) + " sweep points checked");
}

double rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  return (got - want).norm() / std::max(want.norm(), 1e-300);
}

void numerics(Outcome& o) {
  const ExperimentConfig c = parse_config_text("{}");
  const Experiment exp(c);
  Rng rng(9090);
  const int d = c.prior.d;

  double worst_grad = 0.0;
  for (int i = 0; i < 100; ++i) {
    const ImageVec image(2.0 * rng.gaussian_vector(d));
    const Message target = Message::random(c.watermark.B, rng);
    const Eigen::VectorXd g = wm_loss_grad(image, target, exp.key, exp.codec).values;
    Eigen::VectorXd fd(d);
    const double h = 1e-6;
    for (int j = 0; j < d; ++j) {
      ImageVec up = image, dn = image;
      up.values[j] += h;
      dn.values[j] -= h;
      fd[j] = (wm_loss(up, target, exp.key, exp.codec) - wm_loss(dn, target, exp.key, exp.codec)) / (2 * h);
    }
    worst_grad = std::max(worst_grad, rel_err(g, fd));
  }
  o.expect(worst_grad < 1e-5, "wm_loss_grad max rel " + fmt("%.1e", worst_grad));

  double worst_score = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int t = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(exp.schedule.steps()));
    const LatentVec x = forward_closed(sample_content(exp.prior, rng).z_clean, exp.schedule, t, rng);
    const Eigen::VectorXd g = score(exp.prior, exp.schedule, x, t).values;
    Eigen::VectorXd fd(d);
    const double h = 1e-5;
    for (int j = 0; j < d; ++j) {
      LatentVec up = x, dn = x;
      up.values[j] += h;
      dn.values[j] -= h;
      fd[j] = (log_marginal(exp.prior, exp.schedule, up, t) - log_marginal(exp.prior, exp.schedule, dn, t)) / (2 * h);
    }
    worst_score = std::max(worst_score, rel_err(g, fd));
  }
  o.expect(worst_score < 1e-5, "score max rel " + fmt("%.1e", worst_score));

  // Monte Carlo over the equiprobable +-a input: I = 1 - E[log2(1 + exp(-2 a s y / v))].
  double worst_mi = 0.0;
  for (const ChannelSpec ch : {ChannelSpec{0.3, 1.0}, ChannelSpec{1.0, 0.5}, ChannelSpec{2.5, 3.0}}) {
    const int n = 1000000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sgn = rng.coin() ? 1.0 : -1.0;
      const double y = sgn * ch.a + std::sqrt(ch.v) * rng.gaussian();
      const double u = -2.0 * ch.a * sgn * y / ch.v;
      acc += (u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u))) / std::log(2.0);
    }
    worst_mi = std::max(worst_mi, std::abs(1.0 - acc / n - mi_per_bit_analytic(ch)));
  }
  o.expect(worst_mi <= 0.005, "quadrature vs MC max " + fmt("%.4f", worst_mi) + " bits");
}

int run(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void determinism(Outcome& o) {
  const fs::path dir = fs::temp_directory_path() / "wmfrag_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = WMFRAG_CLI_PATH;
  const std::string config = std::string(WMFRAG_CONFIG_DIR) + "/c10_determinism.json";
  const std::string a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
  const int ra = run(cli + " --quiet --config " + config + " --out " + a + " sweep --threads 1");
  const int rb = run(cli + " --quiet --config " + config + " --out " + b + " sweep --threads 1");
  const bool same = ra == 0 && rb == 0 && read_file(a) == read_file(b) && !read_file(a).empty();
  o.expect(same, same ? "two sweeps byte-identical" : "sweep outputs differ or failed");
  const int rv = run(cli + " --quiet verify > " + (dir / "verify.txt").string());
  o.expect(rv == 0, "verify exit " + std::to_string(rv));
}

}  // namespace

int main() {
  const auto start = Clock::now();
  int failed = 0;
  auto report = [&](const char* id, const char* name, const std::function<void(Outcome&)>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      body(o);
    } catch (const std::exception& e) {
      o.expect(false, std::string("threw: ") + e.what());
    }
    failed += !o.pass;
    std::printf("%-4s %-28s %s  (%.1fs)  %s\n", id, name, o.pass ? "PASS" : "FAIL", seconds_since(t0),
                o.detail.str().c_str());
    std::fflush(stdout);
  };

  report("C1", "snr decay law", snr_decay);
  report("C2", "information erasure", erasure);
  report("C3", "decode failure", decode_failure);
  SweepResult c4;
  report("C4", "weak-edit survival", [&](Outcome& o) {
    c4 = survival_sweep();
    survival(o, c4);
  });
  report("C5", "classical vs diffusion", classical_gap);
  report("C6", "content preservation", content_preservation);
  report("C7", "fano consistency", fano);
  report("C8", "dpi consistency", [&](Outcome& o) { dpi(o, c4); });
  report("C9", "numerical correctness", numerics);
  report("C10", "determinism and runtime", [&](Outcome& o) {
    determinism(o);
    const double total = seconds_since(start);
    o.expect(total < 600.0, "suite " + fmt("%.0f", total) + " s < 600 s");
  });

  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
