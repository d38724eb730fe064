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

#ifndef WMFRAG_HARNESS_HPP
#define WMFRAG_HARNESS_HPP

#include "wmfrag/config.hpp"
#include "wmfrag/infotheory.hpp"
#include "wmfrag/metrics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wmfrag {

struct TrialRecord {
  std::uint64_t trial_id = 0;
  std::uint64_t seed = 0;  // derive_seed(master_seed, trial_id)
  std::string message_hex;
  AttackMode mode = AttackMode::unguided;
  int t_start = 0;  // 0 for classical modes
  double gamma = 0.0;
  double lambda = 0.0;
  double noise_sigma = 0.0;
  int blur_kernel = 1;
  double crop_frac = 0.0;
  double rho = 0.0;
  int B = 0;
  int d = 0;
  int K = 0;
  TrialMetrics metrics;
  std::vector<std::uint8_t> truth;
  std::vector<double> soft_out;    // soft decode of I'
  std::vector<double> soft_state;  // soft decode of x_{t_start}; empty for classical modes
};

/// Per-trial random streams, all keyed off the derived seed.
enum class TrialStream : std::uint64_t { content = 1, message = 2, attack = 3, snr = 4 };
Rng trial_rng(std::uint64_t derived_seed, TrialStream which, std::uint64_t attack_seed = 0);

/// Key whose decoder center follows the forward process to step t, so the
/// matched filter reads x_t the way the public decoder reads z_0.
WatermarkKey state_key(const WatermarkKey& key, const NoiseSchedule& sched, int t);

/// Pure function of (experiment, trial_id).
TrialRecord run_trial(const Experiment& exp, std::uint64_t trial_id);

/// One fully resolved sweep point.
struct SweepPoint {
  std::size_t index = 0;
  ExperimentConfig config;
  std::string label;  // "mode=... t_start=... ..."
};

/// Cartesian product in the order mode > t_start > gamma > lambda > rho > B.
/// An empty grid yields the base config as the single point.
std::vector<SweepPoint> expand_sweep(const ExperimentConfig& cfg);

struct PointSummary {
  std::string label;
  std::size_t trials = 0;
  double bit_acc_mean = 0.0;
  double bit_acc_se = 0.0;
  std::size_t decode_successes = 0;
  double psnr_mean = 0.0;
  double ssim_mean = 0.0;
  double snr_emp_mean = 0.0;
  double snr_analytic = 0.0;
  double content_match_rate = 0.0;
  MIEstimate mi_output;
  std::optional<MIEstimate> mi_state;
  std::optional<double> mi_analytic;    // K = 1 diffusion points only
  std::optional<double> fano_success;  // fano_success_upper(mi_analytic, B)
  std::optional<DpiReport> dpi;
};

PointSummary summarize(const SweepPoint& point, const std::vector<TrialRecord>& records);

struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<std::vector<TrialRecord>> records;  // per point, trial order
  std::vector<PointSummary> summaries;
};

/// Runs every point; trials may run on `threads` workers, results are
/// gathered in deterministic order. Errors name the failing point.
SweepResult run_sweep(const ExperimentConfig& cfg, int threads = 1);

/// Writes `<csv_path>`, `<stem>.bits.csv` and `<stem>.summary.json`, each via
/// temp file + rename. Nothing is written if the sweep throws.
void run_sweep_to_files(const ExperimentConfig& cfg, const std::string& csv_path, int threads = 1);

extern const std::vector<std::string> kCsvColumns;
std::string csv_header();
std::string csv_row(const TrialRecord& r);
std::string bits_csv(const SweepResult& result);
nlohmann::json summary_json(const SweepResult& result);

/// Write to `path.tmp` then rename over `path`.
void atomic_write(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);
std::string format_number(double v);

/// Single-image workflow state for the embed / attack / decode commands.
struct ImageState {
  ExperimentConfig config;
  std::uint64_t trial_id = 0;
  Message message;
  ImageVec watermarked;
  ImageVec current;
  std::vector<std::string> history;  // attack modes applied so far
};

ImageState embed_state(const ExperimentConfig& cfg, std::uint64_t trial_id);
ImageState attack_state(const ImageState& in, const AttackConfig& attack);
nlohmann::json state_to_json(const ImageState& s);
ImageState state_from_json(const nlohmann::json& j);

struct DecodeReport {
  Message decoded;
  double bit_acc = 0.0;
  bool success = false;
  double psnr_db = std::numeric_limits<double>::quiet_NaN();
};
DecodeReport decode_state(const ImageState& s);

}  // namespace wmfrag

#endif  // WMFRAG_HARNESS_HPP
