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

#include "wmfrag/schedule.hpp"

#include "wmfrag/common.hpp"

#include <cmath>
#include <numbers>

namespace wmfrag {

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::linear ? "linear" : "cosine"; }

ScheduleKind parse_schedule_kind(const std::string& s) {
  if (s == "linear") return ScheduleKind::linear;
  if (s == "cosine") return ScheduleKind::cosine;
  fail(ErrorCode::invalid_argument, "schedule.kind must be 'linear' or 'cosine', got '" + s + "'");
}

NoiseSchedule::NoiseSchedule(ScheduleKind kind, std::vector<double> beta)
    : kind_(kind), beta_(std::move(beta)), alpha_bar_(beta_.size()) {
  alpha_bar_[0] = 1.0;
  for (std::size_t t = 1; t < beta_.size(); ++t) {
    require(beta_[t] > 0.0 && beta_[t] < 1.0, ErrorCode::invalid_argument,
            "schedule: beta_" + std::to_string(t) + " outside (0,1)");
    alpha_bar_[t] = alpha_bar_[t - 1] * (1.0 - beta_[t]);
  }
}

double NoiseSchedule::beta(int t) const {
  require(t >= 1 && t <= steps(), ErrorCode::out_of_range,
          "schedule: step " + std::to_string(t) + " outside [1," + std::to_string(steps()) + "]");
  return beta_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::alpha_bar(int t) const {
  require(t >= 0 && t <= steps(), ErrorCode::out_of_range,
          "schedule: step " + std::to_string(t) + " outside [0," + std::to_string(steps()) + "]");
  return alpha_bar_[static_cast<std::size_t>(t)];
}

NoiseSchedule make_linear(int steps, double beta_start, double beta_end) {
  require(steps >= 1, ErrorCode::invalid_argument, "schedule.T must be >= 1");
  require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0, ErrorCode::invalid_argument,
          "schedule: need 0 < beta_start <= beta_end < 1");
  std::vector<double> beta(static_cast<std::size_t>(steps) + 1, 0.0);
  for (int t = 1; t <= steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
    beta[static_cast<std::size_t>(t)] = beta_start + frac * (beta_end - beta_start);
  }
  return NoiseSchedule(ScheduleKind::linear, std::move(beta));
}

NoiseSchedule make_cosine(int steps, double s) {
  require(steps >= 1, ErrorCode::invalid_argument, "schedule.T must be >= 1");
  require(s > 0.0 && std::isfinite(s), ErrorCode::invalid_argument, "schedule.s must be > 0");
  const auto f = [&](int t) {
    const double c = std::cos(((static_cast<double>(t) / steps + s) / (1.0 + s)) * std::numbers::pi / 2.0);
    return c * c;
  };
  const double f0 = f(0);
  std::vector<double> beta(static_cast<std::size_t>(steps) + 1, 0.0);
  double prev = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double cur = f(t) / f0;
    beta[static_cast<std::size_t>(t)] = std::min(1.0 - cur / prev, 0.999);
    prev = cur;
  }
  return NoiseSchedule(ScheduleKind::cosine, std::move(beta));
}

}  // namespace wmfrag
