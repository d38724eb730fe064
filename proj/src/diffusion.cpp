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

#include "wmfrag/diffusion.hpp"

#include <cmath>
#include <sstream>

namespace wmfrag {

GuidedSteps GuidedSteps::parse(const std::string& text) {
  if (text == "all") return all();
  const auto colon = text.find(':');
  require(colon != std::string::npos, ErrorCode::parse,
          "attack.guided_steps must be 'all', 'last:<n>' or 'final:<fraction>', got '" + text + "'");
  const std::string head = text.substr(0, colon);
  const std::string tail = text.substr(colon + 1);
  try {
    std::size_t used = 0;
    if (head == "last") {
      const int n = std::stoi(tail, &used);
      require(used == tail.size() && n >= 1, ErrorCode::parse, "attack.guided_steps: last:<n> needs n >= 1");
      return last(n);
    }
    if (head == "final") {
      const double f = std::stod(tail, &used);
      require(used == tail.size() && f > 0.0 && f <= 1.0, ErrorCode::parse,
              "attack.guided_steps: final:<fraction> needs fraction in (0,1]");
      return final_share(f);
    }
  } catch (const std::logic_error&) {
    fail(ErrorCode::parse, "attack.guided_steps: cannot parse '" + text + "'");
  }
  fail(ErrorCode::parse, "attack.guided_steps: unknown form '" + text + "'");
}

std::string GuidedSteps::to_string() const {
  switch (kind) {
    case Kind::all:
      return "all";
    case Kind::last_n:
      return "last:" + std::to_string(count);
    case Kind::final_fraction: {
      std::ostringstream os;
      os << "final:" << fraction;
      return os.str();
    }
  }
  return "all";
}

bool GuidedSteps::contains(int t, int t_start) const {
  switch (kind) {
    case Kind::all:
      return true;
    case Kind::last_n:
      return t <= count;
    case Kind::final_fraction:
      return t <= static_cast<int>(std::ceil(fraction * t_start));
  }
  return true;
}

void GuidanceSpec::validate() const {
  require(std::isfinite(gamma) && gamma >= 0.0, ErrorCode::invalid_argument, "guidance: gamma must be >= 0");
  require(std::isfinite(lambda) && lambda >= 0.0, ErrorCode::invalid_argument, "guidance: lambda must be >= 0");
  require(gamma == 0.0 || target.has_value(), ErrorCode::invalid_argument,
          "guidance: gamma > 0 requires a target message");
}

LatentVec forward_with_noise(const LatentVec& z0, const NoiseSchedule& sched, int t, const Eigen::VectorXd& eps) {
  require_dim(eps.size(), z0.size(), "forward noise");
  const double ab = sched.alpha_bar(t);
  return LatentVec(std::sqrt(ab) * z0.values + std::sqrt(1.0 - ab) * eps);
}

LatentVec forward_closed(const LatentVec& z0, const NoiseSchedule& sched, int t, Rng& rng) {
  (void)sched.alpha_bar(t);  // range check before drawing
  return forward_with_noise(z0, sched, t, rng.gaussian_vector(z0.size()));
}

LatentVec forward_step(const LatentVec& x_prev, const NoiseSchedule& sched, int t, Rng& rng) {
  const double a = sched.alpha(t);
  return LatentVec(std::sqrt(a) * x_prev.values + std::sqrt(1.0 - a) * rng.gaussian_vector(x_prev.size()));
}

double posterior_variance(const NoiseSchedule& sched, int t) {
  return sched.beta(t) * (1.0 - sched.alpha_bar(t - 1)) / (1.0 - sched.alpha_bar(t));
}

LatentVec reverse_step(const LatentVec& x, const NoiseSchedule& sched, const ContentPrior& prior, int t, Rng& rng,
                       const GuidanceSpec& g) {
  require(t >= 1 && t <= sched.steps(), ErrorCode::out_of_range,
          "reverse_step: t = " + std::to_string(t) + " outside [1," + std::to_string(sched.steps()) + "]");
  const double a = sched.alpha(t);
  Eigen::VectorXd s = score(prior, sched, x, t).values;
  if (g.reference && g.lambda > 0.0) {
    require_dim(g.reference->size(), x.size(), "reference");
    const double v = marginal_variance(prior, sched, t);
    s += g.lambda * (std::sqrt(sched.alpha_bar(t)) * g.reference->values - x.values) / v;
  }
  Eigen::VectorXd next = (x.values + (1.0 - a) * s) / std::sqrt(a);
  if (t > 1) next += std::sqrt(posterior_variance(sched, t)) * rng.gaussian_vector(x.size());
  return LatentVec(std::move(next));
}

Regeneration regenerate(const LatentVec& start, const NoiseSchedule& sched, const ContentPrior& prior, int t_start,
                        const GuidanceSpec& g, Rng& rng, const ReverseHook& hook) {
  require(t_start >= 1 && t_start <= sched.steps(), ErrorCode::out_of_range,
          "regenerate: t_start = " + std::to_string(t_start) + " outside [1," + std::to_string(sched.steps()) + "]");
  g.validate();
  Regeneration out;
  out.noised = forward_closed(start, sched, t_start, rng);
  out.output = reverse_chain(out.noised, sched, prior, t_start, g, rng, hook);
  return out;
}

LatentVec reverse_chain(const LatentVec& x_start, const NoiseSchedule& sched, const ContentPrior& prior, int t_start,
                        const GuidanceSpec& g, Rng& rng, const ReverseHook& hook) {
  require(t_start >= 1 && t_start <= sched.steps(), ErrorCode::out_of_range,
          "reverse_chain: t_start = " + std::to_string(t_start) + " outside [1," + std::to_string(sched.steps()) +
              "]");
  LatentVec x = x_start;
  for (int t = t_start; t >= 1; --t) {
    x = reverse_step(x, sched, prior, t, rng, g);
    if (hook) hook(t, x);
  }
  return x;
}

}  // namespace wmfrag
