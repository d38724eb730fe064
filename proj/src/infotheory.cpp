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

#include "wmfrag/infotheory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace wmfrag {

double binary_entropy(double p) {
  require(p >= 0.0 && p <= 1.0, ErrorCode::invalid_argument, "binary_entropy: p must be in [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

namespace {

constexpr std::array<double, 8> kXgk = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                        0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the nodes kXgk[1], kXgk[3], kXgk[5], kXgk[7].
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

void gk15(const std::function<double(double)>& f, double lo, double hi, double& kronrod, double& err) {
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  const double fc = f(c);
  double k = kWgk[7] * fc;
  double g = kWg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double f1 = f(c - h * kXgk[i]);
    const double f2 = f(c + h * kXgk[i]);
    k += kWgk[i] * (f1 + f2);
    if (i % 2 == 1) g += kWg[i / 2] * (f1 + f2);
  }
  kronrod = k * h;
  err = std::abs((k - g) * h);
}

double adapt(const std::function<double(double)>& f, double lo, double hi, double tol, int depth) {
  double k = 0.0;
  double err = 0.0;
  gk15(f, lo, hi, k, err);
  if (err <= tol || depth >= 40) return k;
  const double mid = 0.5 * (lo + hi);
  return adapt(f, lo, mid, 0.5 * tol, depth + 1) + adapt(f, mid, hi, 0.5 * tol, depth + 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi, double tol) {
  require(hi >= lo, ErrorCode::invalid_argument, "integrate_adaptive: need lo <= hi");
  if (hi == lo) return 0.0;
  return adapt(f, lo, hi, tol, 0);
}

double mi_per_bit_analytic(const ChannelSpec& ch) {
  require(ch.v > 0.0 && std::isfinite(ch.v), ErrorCode::invalid_argument, "channel: v must be > 0");
  require(ch.a >= 0.0 && std::isfinite(ch.a), ErrorCode::invalid_argument, "channel: a must be >= 0");
  const double a = ch.a;
  const double v = ch.v;
  const double sd = std::sqrt(v);
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * v) + std::log(0.5);
  // -f log2 f for y >= 0; the mixture density is even.
  const auto neg_f_log_f = [&](double y) {
    const double log_f = log_norm - (y - a) * (y - a) / (2.0 * v) + std::log1p(std::exp(-2.0 * a * y / v));
    return -std::exp(log_f) * log_f / std::numbers::ln2;
  };
  const double upper = a + 10.0 * sd;
  // Panels of width <= sd keep the narrow peaks visible to the first pass.
  const int panels = std::max(1, static_cast<int>(std::ceil(upper / sd)));
  const double width = upper / panels;
  double half_entropy = 0.0;
  for (int i = 0; i < panels; ++i)
    half_entropy += integrate_adaptive(neg_f_log_f, i * width, (i + 1) * width, 1e-11 / panels);
  const double h_y = 2.0 * half_entropy;
  const double h_noise = 0.5 * std::log2(2.0 * std::numbers::pi * std::numbers::e * v);
  return std::clamp(h_y - h_noise, 0.0, 1.0);
}

ChannelSpec carrier_channel(const WatermarkKey& key, const NoiseSchedule& sched, const ContentPrior& prior, int t) {
  const double ab = sched.alpha_bar(t);
  ChannelSpec ch;
  ch.a = std::sqrt(ab) * key.rho / std::sqrt(static_cast<double>(key.bits()));
  ch.v = marginal_variance(prior, sched, t);
  return ch;
}

MIEstimate mi_message_state_analytic(const WatermarkKey& key, const NoiseSchedule& sched, const ContentPrior& prior,
                                     int t) {
  require(prior.components() == 1, ErrorCode::invalid_argument,
          "analytic I(M; X_t) needs a single-component prior (K = 1); carrier projections are not independent "
          "under a mixture, use the plug-in estimator instead");
  const ChannelSpec ch = carrier_channel(key, sched, prior, t);
  require(ch.v > 0.0, ErrorCode::invalid_argument,
          "analytic I(M; X_t) is infinite at t = 0 with sigma = 0 (noiseless channel)");
  MIEstimate est;
  est.value = key.bits() * mi_per_bit_analytic(ch);
  est.method = MIMethod::analytic_quadrature;
  return est;
}

namespace {

double plugin_from_counts(const std::vector<std::array<double, 2>>& counts, double n) {
  std::array<double, 2> col{0.0, 0.0};
  for (const auto& row : counts) {
    col[0] += row[0];
    col[1] += row[1];
  }
  double mi = 0.0;
  for (const auto& row : counts) {
    const double rs = row[0] + row[1];
    for (int y = 0; y < 2; ++y) {
      if (row[y] <= 0.0) continue;
      mi += (row[y] / n) * std::log2(row[y] * n / (rs * col[y]));
    }
  }
  return std::max(mi, 0.0);
}

}  // namespace

MIEstimate mi_plugin(std::span<const BitObservation> pairs, int bins) {
  require(!pairs.empty(), ErrorCode::invalid_argument, "mi_plugin: no observations");
  require(bins >= 2, ErrorCode::invalid_argument, "mi_plugin: need at least 2 bins");
  const std::size_t n = pairs.size();
  std::vector<double> sorted;
  sorted.reserve(n);
  for (const auto& p : pairs) sorted.push_back(p.soft);
  std::sort(sorted.begin(), sorted.end());
  // Upper edges of the first bins-1 bins; equal values always share a bin.
  std::vector<double> edges;
  for (int b = 1; b < bins; ++b) edges.push_back(sorted[std::min(n - 1, (n * static_cast<std::size_t>(b)) / bins)]);
  std::vector<std::array<double, 2>> counts(static_cast<std::size_t>(bins), {0.0, 0.0});
  for (const auto& p : pairs) {
    const auto bin = static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), p.soft) - edges.begin());
    counts[bin][p.truth ? 1 : 0] += 1.0;
  }
  const double total = static_cast<double>(n);
  MIEstimate est;
  est.method = MIMethod::plugin;
  est.samples = n;
  est.value = plugin_from_counts(counts, total);
  if (n < 2) return est;
  // Delete-one jackknife: every observation in a cell yields the same leave-one-out value.
  double mean = 0.0;
  std::vector<std::pair<double, double>> loo;  // (weight, value)
  for (auto& row : counts) {
    for (int y = 0; y < 2; ++y) {
      if (row[y] <= 0.0) continue;
      const double w = row[y];
      row[y] -= 1.0;
      const double val = plugin_from_counts(counts, total - 1.0);
      row[y] += 1.0;
      loo.emplace_back(w, val);
      mean += w * val;
    }
  }
  mean /= total;
  double var = 0.0;
  for (const auto& [w, val] : loo) var += w * (val - mean) * (val - mean);
  est.stderr_bits = std::sqrt((total - 1.0) / total * var);
  return est;
}

MIEstimate mi_plugin_total(const std::vector<std::vector<BitObservation>>& by_position, int bins) {
  require(!by_position.empty(), ErrorCode::invalid_argument, "mi_plugin_total: no bit positions");
  MIEstimate total;
  total.method = MIMethod::plugin;
  double var = 0.0;
  for (const auto& obs : by_position) {
    const MIEstimate e = mi_plugin(obs, bins);
    total.value += e.value;
    var += e.stderr_bits * e.stderr_bits;
    total.samples = e.samples;
  }
  total.stderr_bits = std::sqrt(var);
  return total;
}

double fano_success_upper(double mi_total, int bit_count) {
  require(bit_count >= 1, ErrorCode::invalid_argument, "fano: B must be >= 1");
  const double b = static_cast<double>(bit_count);
  require(std::isfinite(mi_total) && mi_total >= -1e-12 && mi_total <= b + 1e-12, ErrorCode::invalid_argument,
          "fano: mi_total must be in [0, B]");
  const double residual = b - std::clamp(mi_total, 0.0, b);  // lower bound on H(M | Y)
  const double chance = std::exp2(-b);
  // log2(|M| - 1) = B + log2(1 - 2^-B)
  const double log_rest = b + std::log1p(-chance) / std::numbers::ln2;
  const auto g = [&](double pe) { return binary_entropy(pe) + pe * log_rest; };
  const double pe_max = 1.0 - chance;  // g is increasing on [0, pe_max] and g(pe_max) = B
  if (residual <= 0.0) return 1.0;
  if (residual >= g(pe_max)) return chance;
  double lo = 0.0;
  double hi = pe_max;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < residual ? lo : hi) = mid;
  }
  return std::clamp(1.0 - hi, chance, 1.0);
}

DpiReport dpi_report(std::span<const LabeledEstimate> chain) {
  std::size_t samples = 0;
  for (const auto& e : chain) {
    if (e.estimate.method != MIMethod::plugin) continue;
    if (samples == 0) samples = e.estimate.samples;
    require(e.estimate.samples == samples, ErrorCode::invalid_argument,
            "dpi_report: estimates come from different trial sets (" + std::to_string(samples) + " vs " +
                std::to_string(e.estimate.samples) + " samples)");
  }
  DpiReport report;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    for (std::size_t j = i + 1; j < chain.size(); ++j) {
      DpiPair p;
      p.upstream = chain[i].label;
      p.downstream = chain[j].label;
      p.upstream_value = chain[i].estimate.value;
      p.downstream_value = chain[j].estimate.value;
      p.slack = 3.0 * std::hypot(chain[i].estimate.stderr_bits, chain[j].estimate.stderr_bits);
      p.pass = p.downstream_value <= p.upstream_value + p.slack + 1e-12;
      report.pass = report.pass && p.pass;
      report.pairs.push_back(std::move(p));
    }
  }
  return report;
}

}  // namespace wmfrag
