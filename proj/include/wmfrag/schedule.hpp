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

#ifndef WMFRAG_SCHEDULE_HPP
#define WMFRAG_SCHEDULE_HPP

#include <span>
#include <string>
#include <vector>

namespace wmfrag {

enum class ScheduleKind { linear, cosine };

std::string to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(const std::string& s);

/// Diffusion noise schedule beta_t, alpha_t = 1 - beta_t and the cumulative
/// product alpha_bar_t for t = 1..T, with alpha_bar_0 = 1. Immutable.
class NoiseSchedule {
 public:
  ScheduleKind kind() const { return kind_; }
  int steps() const { return static_cast<int>(beta_.size()) - 1; }

  /// t in [1, T].
  double beta(int t) const;
  double alpha(int t) const { return 1.0 - beta(t); }
  /// t in [0, T].
  double alpha_bar(int t) const;

  /// beta_1..beta_T.
  std::span<const double> betas() const { return {beta_.data() + 1, beta_.size() - 1}; }

 private:
  friend NoiseSchedule make_linear(int, double, double);
  friend NoiseSchedule make_cosine(int, double);
  NoiseSchedule(ScheduleKind kind, std::vector<double> beta);

  ScheduleKind kind_;
  std::vector<double> beta_;       // index 0 unused
  std::vector<double> alpha_bar_;  // index 0 == 1
};

/// Betas linearly spaced from beta_start (t=1) to beta_end (t=T).
NoiseSchedule make_linear(int steps, double beta_start, double beta_end);

/// Cosine schedule, alpha_bar_t = f(t)/f(0), f(t) = cos^2(((t/T + s)/(1 + s)) * pi/2).
/// Betas are clipped to 0.999 and alpha_bar is re-accumulated from them.
NoiseSchedule make_cosine(int steps, double s = 0.008);

}  // namespace wmfrag

#endif  // WMFRAG_SCHEDULE_HPP
