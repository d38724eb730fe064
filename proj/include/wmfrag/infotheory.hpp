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

#ifndef WMFRAG_INFOTHEORY_HPP
#define WMFRAG_INFOTHEORY_HPP

#include "wmfrag/prior.hpp"
#include "wmfrag/schedule.hpp"
#include "wmfrag/watermark.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace wmfrag {

/// Per-bit channel Y = S + N(0, v) with S uniform on {-a, +a}.
struct ChannelSpec {
  double a = 0.0;
  double v = 1.0;

  double snr() const { return a * a / v; }
};

enum class MIMethod { analytic_quadrature, plugin };

struct MIEstimate {
  double value = 0.0;   // bits
  MIMethod method = MIMethod::analytic_quadrature;
  double stderr_bits = 0.0;
  std::size_t samples = 0;
};

/// h(p) in bits; h(0) = h(1) = 0.
double binary_entropy(double p);

/// Adaptive Gauss-Kronrod (7/15) integration of f over [lo, hi] to absolute
/// tolerance `tol`.
double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi, double tol);

/// I(S; Y) in bits, as H(Y) - 0.5 log2(2 pi e v) with H(Y) by quadrature.
double mi_per_bit_analytic(const ChannelSpec& ch);

/// Channel seen by one carrier at step t: a = sqrt(abar_t) rho / sqrt(B), v = abar_t sigma^2 + 1 - abar_t.
ChannelSpec carrier_channel(const WatermarkKey& key, const NoiseSchedule& sched, const ContentPrior& prior, int t);

/// I(M; X_t) = B * I(S; Y). Exact only for a single-component prior.
MIEstimate mi_message_state_analytic(const WatermarkKey& key, const NoiseSchedule& sched, const ContentPrior& prior,
                                     int t);

struct BitObservation {
  std::uint8_t truth = 0;
  double soft = 0.5;
};

/// Plug-in MI (bits) between the true bit and the soft decode binned into
/// `bins` quantile bins, with an exact delete-one jackknife standard error.
MIEstimate mi_plugin(std::span<const BitObservation> pairs, int bins = 8);

/// Sum of per-position plug-in estimates (positions treated as independent).
MIEstimate mi_plugin_total(const std::vector<std::vector<BitObservation>>& by_position, int bins = 8);

/// Largest success probability allowed by Fano's inequality for a uniform
/// B-bit message when I(M; observation) = mi_total.
double fano_success_upper(double mi_total, int bit_count);

struct LabeledEstimate {
  std::string label;
  MIEstimate estimate;
};

struct DpiPair {
  std::string upstream;
  std::string downstream;
  double upstream_value = 0.0;
  double downstream_value = 0.0;
  double slack = 0.0;  // 3 * combined standard error
  bool pass = false;
};

struct DpiReport {
  std::vector<DpiPair> pairs;
  bool pass = true;
};

/// `chain` is ordered from upstream to downstream along M -> X_t -> I'. Every
/// ordered pair (i < j) must satisfy I_j <= I_i + 3 sqrt(se_i^2 + se_j^2).
/// Plug-in estimates must share one sample count.
DpiReport dpi_report(std::span<const LabeledEstimate> chain);

}  // namespace wmfrag

#endif  // WMFRAG_INFOTHEORY_HPP
