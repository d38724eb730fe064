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
#include "wmfrag/harness.hpp"

#include <filesystem>

using namespace wmfrag;
using wmfrag::test::error_code_of;

namespace {

ExperimentConfig small(const std::string& extra = "") {
  return parse_config_text(R"({"trials": 6, "master_seed": 5)" + extra + "}");
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("wmfrag_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("derived seeds follow the SplitMix64 finalizer") {
    // First output of the reference splitmix64 generator seeded with 0.
    CHECK(splitmix64_mix(0x9e3779b97f4a7c15ULL) == 0xe220a8397b1dcdafULL);
    CHECK(splitmix64_mix(0) == 0ULL);
    CHECK(splitmix64_mix(1) == 0x5692161d100b05e5ULL);
    CHECK(derive_seed(7, 7) == 0ULL);
    CHECK(derive_seed(5, 3) == splitmix64_mix(6));
  }

  TEST_CASE("a trial is a pure function of config and id") {
    const Experiment e(small());
    const TrialRecord a = run_trial(e, 3);
    const TrialRecord b = run_trial(e, 3);
    CHECK(csv_row(a) == csv_row(b));
    CHECK(a.soft_out == b.soft_out);
    CHECK(a.seed == derive_seed(5, 3));
    CHECK(csv_row(run_trial(e, 4)) != csv_row(a));
  }

  TEST_CASE("zero-strength noise leaves a low-noise watermark intact") {
    const Experiment e(small(R"(, "prior": {"K": 1, "sigma": 0.05}, "attack": {"mode": "noise", "noise_sigma": 0})"));
    for (std::uint64_t i = 0; i < 6; ++i) {
      const TrialRecord r = run_trial(e, i);
      CHECK(r.metrics.bit_acc == 1.0);
      CHECK(r.metrics.psnr_db == kPsnrSaturated);
      CHECK(r.soft_state.empty());
    }
  }

  TEST_CASE("sweep expansion order and labels") {
    const ExperimentConfig c =
        small(R"(, "sweep": {"mode": ["unguided", "guided"], "t_start": [10, 20], "gamma": [0.1, 0.2]})");
    const auto pts = expand_sweep(c);
    REQUIRE(pts.size() == 8);
    CHECK(pts[0].config.attack.mode == AttackMode::unguided);
    CHECK(pts[1].config.attack.gamma == 0.2);
    CHECK(pts[2].config.attack.t_start == 20);
    CHECK(pts[4].config.attack.mode == AttackMode::guided);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(pts[i].index == i);
      CHECK(pts[i].config.sweep.empty());
    }
    CHECK(pts[5].label.find("mode=guided") != std::string::npos);
    CHECK(expand_sweep(small()).size() == 1);
  }

  TEST_CASE("a one-point sweep is N run_trial rows") {
    const ExperimentConfig c = small();
    const SweepResult r = run_sweep(c, 1);
    REQUIRE(r.records.size() == 1);
    REQUIRE(r.records[0].size() == 6);
    const Experiment e(c);
    for (std::uint64_t i = 0; i < 6; ++i) CHECK(csv_row(r.records[0][i]) == csv_row(run_trial(e, i)));
  }

  TEST_CASE("thread count does not change the output") {
    const ExperimentConfig c = small(R"(, "sweep": {"mode": ["unguided", "noise"], "t_start": [30]})");
    const SweepResult one = run_sweep(c, 1);
    const SweepResult three = run_sweep(c, 3);
    CHECK(bits_csv(one) == bits_csv(three));
    CHECK(summary_json(one).dump() == summary_json(three).dump());
  }

  TEST_CASE("files are byte-identical across runs and the CSV schema is fixed") {
    const auto dir = scratch_dir("files");
    const ExperimentConfig c = small(R"(, "sweep": {"t_start": [20, 60]})");
    const std::string a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
    run_sweep_to_files(c, a, 1);
    run_sweep_to_files(c, b, 2);
    CHECK(read_file(a) == read_file(b));
    CHECK(read_file((dir / "a.bits.csv").string()) == read_file((dir / "b.bits.csv").string()));
    CHECK(read_file((dir / "a.summary.json").string()) == read_file((dir / "b.summary.json").string()));
    const std::string text = read_file(a);
    CHECK(text.substr(0, text.find('\n')) + "\n" == csv_header());
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 2 * 6);
    CHECK_FALSE(std::filesystem::exists(a + ".tmp"));
  }

  TEST_CASE("an invalid sweep writes nothing") {
    const auto dir = scratch_dir("invalid");
    const std::string path = (dir / "bad.csv").string();
    CHECK(error_code_of([&] { run_sweep_to_files(small(R"(, "sweep": {"t_start": [5000]})"), path, 1); }) ==
          ErrorCode::invalid_argument);
    CHECK(std::filesystem::is_empty(dir));
  }

  TEST_CASE("bit accuracy falls with attack strength") {
    const ExperimentConfig c = parse_config_text(
        R"({"trials": 60, "master_seed": 8, "prior": {"K": 1}, "sweep": {"t_start": [100, 500, 1000]}})");
    const SweepResult r = run_sweep(c, 1);
    const auto& s = r.summaries;
    for (std::size_t i = 1; i < s.size(); ++i) {
      const double slack = 3.0 * std::hypot(s[i].bit_acc_se, s[i - 1].bit_acc_se);
      CHECK(s[i].bit_acc_mean <= s[i - 1].bit_acc_mean + slack);
    }
    CHECK(s.front().bit_acc_mean > 0.9);
    CHECK(std::abs(s.back().bit_acc_mean - 0.5) < 0.05);
    CHECK(s.front().mi_analytic.has_value());
    CHECK(s.front().dpi.has_value());
  }

  TEST_CASE("DPI is only reported where the chain is Markov") {
    const ExperimentConfig c = small(
        R"(, "prior": {"K": 1}, "sweep": {"mode": ["unguided", "guided"], "t_start": [20], "lambda": [0, 0.5]})");
    const SweepResult r = run_sweep(c, 1);
    REQUIRE(r.summaries.size() == 4);
    CHECK(r.summaries[0].dpi.has_value());         // unguided, lambda 0
    CHECK_FALSE(r.summaries[1].dpi.has_value());   // unguided, lambda 0.5
    CHECK_FALSE(r.summaries[2].dpi.has_value());   // guided
    CHECK(r.summaries[0].mi_state.has_value());
  }

  TEST_CASE("image state workflow") {
    const ExperimentConfig c = small();
    const ImageState s = embed_state(c, 2);
    CHECK(s.history.empty());
    CHECK(s.watermarked.values == s.current.values);
    const DecodeReport clean = decode_state(s);
    CHECK(clean.psnr_db == kPsnrSaturated);

    const ImageState back = state_from_json(state_to_json(s));
    CHECK(back.message == s.message);
    CHECK(back.current.values == s.current.values);
    CHECK(to_json(back.config) == to_json(s.config));

    AttackConfig atk;
    atk.mode = AttackMode::unguided;
    atk.t_start = 1000;
    const ImageState attacked = attack_state(s, atk);
    REQUIRE(attacked.history.size() == 1);
    CHECK(attacked.history[0] == "unguided");
    CHECK(attacked.watermarked.values == s.watermarked.values);
    CHECK(decode_state(attacked).psnr_db < 40.0);
    CHECK(attack_state(s, atk).current.values == attacked.current.values);
  }
}
