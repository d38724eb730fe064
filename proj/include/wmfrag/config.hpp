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

#ifndef WMFRAG_CONFIG_HPP
#define WMFRAG_CONFIG_HPP

#include "wmfrag/attack.hpp"
#include "wmfrag/codec.hpp"
#include "wmfrag/prior.hpp"
#include "wmfrag/schedule.hpp"
#include "wmfrag/watermark.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wmfrag {

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::linear;
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  double s = 0.008;

  NoiseSchedule build() const;
};

struct PriorSpec {
  int d = 64;
  int K = 4;
  double sigma = 1.0;
  double mean_separation = 8.0;
  std::uint64_t seed = 1;

  ContentPrior build() const;
};

struct WatermarkSpec {
  int B = 32;
  double rho = 11.0;
  std::optional<double> kappa;  // default 4 / (rho / sqrt(B))
  std::uint64_t seed = 2;

  double resolved_kappa() const { return kappa.value_or(default_kappa(rho, B)); }
};

/// Grid for `sweep`; an empty axis means "use the base config value".
struct SweepGrid {
  std::vector<AttackMode> mode;
  std::vector<int> t_start;
  std::vector<double> gamma;
  std::vector<double> lambda;
  std::vector<double> rho;
  std::vector<int> B;

  bool empty() const {
    return mode.empty() && t_start.empty() && gamma.empty() && lambda.empty() && rho.empty() && B.empty();
  }
};

struct ExperimentConfig {
  ScheduleSpec schedule;
  PriorSpec prior;
  WatermarkSpec watermark;
  std::uint64_t codec_seed = 3;
  AttackConfig attack;
  SweepGrid sweep;
  int mi_bins = 8;
  int trials = 100;
  std::uint64_t master_seed = 0;
  std::string out = "wmfrag_out";
  std::string notes;  // free text, carried through round trips

  /// Checks every cross-field constraint; throws Error(invalid_argument) naming the field.
  void validate() const;
};

/// Parse a JSON document (nested objects or dotted keys both accepted). Unknown
/// keys are rejected; missing keys take the documented defaults.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

nlohmann::json to_json(const ExperimentConfig& cfg);

/// Everything a trial needs, built once from a config.
struct Experiment {
  ExperimentConfig config;
  NoiseSchedule schedule;
  ContentPrior prior;
  Codec codec;
  WatermarkKey key;
  std::optional<RenderMap> render_map;

  explicit Experiment(const ExperimentConfig& cfg);
};

}  // namespace wmfrag

#endif  // WMFRAG_CONFIG_HPP
