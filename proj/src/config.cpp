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

#include "wmfrag/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace wmfrag {

using nlohmann::json;

NoiseSchedule ScheduleSpec::build() const {
  return kind == ScheduleKind::linear ? make_linear(T, beta_start, beta_end) : make_cosine(T, s);
}

ContentPrior PriorSpec::build() const { return ContentPrior::separated(d, K, sigma, mean_separation, seed); }

void ExperimentConfig::validate() const {
  (void)schedule.build();
  require(prior.d >= 1, ErrorCode::invalid_argument, "prior.d must be >= 1");
  require(prior.K >= 1, ErrorCode::invalid_argument, "prior.K must be >= 1");
  require(prior.sigma > 0.0 && std::isfinite(prior.sigma), ErrorCode::invalid_argument, "prior.sigma must be > 0");
  require(prior.mean_separation >= 0.0, ErrorCode::invalid_argument, "prior.mean_separation must be >= 0");
  require(watermark.B >= 1, ErrorCode::invalid_argument, "watermark.B must be >= 1");
  require(watermark.B <= prior.d, ErrorCode::invalid_argument,
          "watermark.B (" + std::to_string(watermark.B) + ") must not exceed prior.d (" + std::to_string(prior.d) +
              ")");
  require(watermark.rho > 0.0 && std::isfinite(watermark.rho), ErrorCode::invalid_argument,
          "watermark.rho must be > 0");
  if (watermark.kappa) {
    require(*watermark.kappa > 0.0 && std::isfinite(*watermark.kappa), ErrorCode::invalid_argument,
            "watermark.kappa must be > 0");
  }
  require(trials >= 1, ErrorCode::invalid_argument, "trials must be >= 1");
  require(mi_bins >= 2, ErrorCode::invalid_argument, "analysis.mi_bins must be >= 2");
  const NoiseSchedule sched = schedule.build();
  attack.validate(sched);
  const bool renderable = grid_side(prior.d).has_value();
  const auto needs_grid = [](AttackMode m) { return m == AttackMode::blur || m == AttackMode::crop_resize; };
  require(!needs_grid(attack.mode) || renderable, ErrorCode::invalid_argument,
          "attack.mode '" + to_string(attack.mode) + "' needs prior.d to be a perfect square");
  for (AttackMode m : sweep.mode) {
    require(!needs_grid(m) || renderable, ErrorCode::invalid_argument,
            "sweep.mode '" + to_string(m) + "' needs prior.d to be a perfect square");
  }
  for (int t : sweep.t_start) {
    require(t >= 1 && t <= sched.steps(), ErrorCode::invalid_argument,
            "sweep.t_start values must be in [1, schedule.T]");
  }
  for (double g : sweep.gamma) require(g >= 0.0, ErrorCode::invalid_argument, "sweep.gamma values must be >= 0");
  for (double l : sweep.lambda) require(l >= 0.0, ErrorCode::invalid_argument, "sweep.lambda values must be >= 0");
  for (double r : sweep.rho) require(r > 0.0, ErrorCode::invalid_argument, "sweep.rho values must be > 0");
  for (int b : sweep.B) {
    require(b >= 1 && b <= prior.d, ErrorCode::invalid_argument, "sweep.B values must be in [1, prior.d]");
  }
}

namespace {

void flatten(const json& node, const std::string& prefix, std::map<std::string, json>& out) {
  if (node.is_object()) {
    for (const auto& [k, v] : node.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    return;
  }
  require(!out.contains(prefix), ErrorCode::parse, "config: key '" + prefix + "' given twice");
  out[prefix] = node;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "schedule.kind", "schedule.T", "schedule.beta_start", "schedule.beta_end", "schedule.s",
      "prior.d", "prior.K", "prior.sigma", "prior.mean_separation", "prior.seed",
      "watermark.B", "watermark.rho", "watermark.kappa", "watermark.seed",
      "codec.seed",
      "attack.mode", "attack.t_start", "attack.gamma", "attack.lambda", "attack.reference", "attack.guided_steps",
      "attack.noise_sigma", "attack.blur_kernel", "attack.blur_sigma", "attack.crop_frac", "attack.seed",
      "sweep.mode", "sweep.t_start", "sweep.gamma", "sweep.lambda", "sweep.rho", "sweep.B",
      "analysis.mi_bins", "trials", "master_seed", "out", "notes"};
  return keys;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, json> values) : values_(std::move(values)) {}

  const json* find(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  }

  double real(const std::string& key, double fallback) const {
    const json* v = find(key);
    if (!v) return fallback;
    require(v->is_number(), ErrorCode::parse, "config: '" + key + "' must be a number");
    return v->get<double>();
  }

  int integer(const std::string& key, int fallback) const {
    const json* v = find(key);
    if (!v) return fallback;
    require(v->is_number_integer(), ErrorCode::parse, "config: '" + key + "' must be an integer");
    return v->get<int>();
  }

  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const {
    const json* v = find(key);
    if (!v) return fallback;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer()) {
      require(v->get<std::int64_t>() >= 0, ErrorCode::parse, "config: '" + key + "' must be non-negative");
      return static_cast<std::uint64_t>(v->get<std::int64_t>());
    }
    if (v->is_string()) {
      const std::string s = v->get<std::string>();
      std::size_t used = 0;
      std::uint64_t out = 0;
      try {
        out = std::stoull(s, &used, 0);
      } catch (const std::logic_error&) {
        used = 0;
      }
      require(used == s.size() && !s.empty(), ErrorCode::parse, "config: '" + key + "' is not a 64-bit integer");
      return out;
    }
    fail(ErrorCode::parse, "config: '" + key + "' must be a 64-bit unsigned integer");
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    const json* v = find(key);
    if (!v) return fallback;
    require(v->is_string(), ErrorCode::parse, "config: '" + key + "' must be a string");
    return v->get<std::string>();
  }

  template <typename T, typename Fn>
  std::vector<T> list(const std::string& key, Fn convert) const {
    const json* v = find(key);
    if (!v) return {};
    require(v->is_array(), ErrorCode::parse, "config: '" + key + "' must be an array");
    std::vector<T> out;
    for (const auto& item : *v) out.push_back(convert(item, key));
    return out;
  }

 private:
  std::map<std::string, json> values_;
};

double as_real(const json& j, const std::string& key) {
  require(j.is_number(), ErrorCode::parse, "config: '" + key + "' entries must be numbers");
  return j.get<double>();
}

int as_int(const json& j, const std::string& key) {
  require(j.is_number_integer(), ErrorCode::parse, "config: '" + key + "' entries must be integers");
  return j.get<int>();
}

AttackMode as_mode(const json& j, const std::string& key) {
  require(j.is_string(), ErrorCode::parse, "config: '" + key + "' entries must be strings");
  return parse_attack_mode(j.get<std::string>());
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  require(doc.is_object(), ErrorCode::parse, "config: top level must be a JSON object");
  std::map<std::string, json> flat;
  flatten(doc, "", flat);
  for (const auto& [k, v] : flat) {
    require(known_keys().contains(k), ErrorCode::parse, "config: unknown key '" + k + "'");
  }
  const Reader r(std::move(flat));
  ExperimentConfig cfg;
  cfg.schedule.kind = parse_schedule_kind(r.text("schedule.kind", to_string(cfg.schedule.kind)));
  cfg.schedule.T = r.integer("schedule.T", cfg.schedule.T);
  cfg.schedule.beta_start = r.real("schedule.beta_start", cfg.schedule.beta_start);
  cfg.schedule.beta_end = r.real("schedule.beta_end", cfg.schedule.beta_end);
  cfg.schedule.s = r.real("schedule.s", cfg.schedule.s);

  cfg.prior.d = r.integer("prior.d", cfg.prior.d);
  cfg.prior.K = r.integer("prior.K", cfg.prior.K);
  cfg.prior.sigma = r.real("prior.sigma", cfg.prior.sigma);
  cfg.prior.mean_separation = r.real("prior.mean_separation", cfg.prior.mean_separation);
  cfg.prior.seed = r.u64("prior.seed", cfg.prior.seed);

  cfg.watermark.B = r.integer("watermark.B", cfg.watermark.B);
  cfg.watermark.rho = r.real("watermark.rho", cfg.watermark.rho);
  if (const json* k = r.find("watermark.kappa"); k && !k->is_null()) cfg.watermark.kappa = r.real("watermark.kappa", 0.0);
  cfg.watermark.seed = r.u64("watermark.seed", cfg.watermark.seed);
  cfg.codec_seed = r.u64("codec.seed", cfg.codec_seed);

  auto& a = cfg.attack;
  a.mode = parse_attack_mode(r.text("attack.mode", to_string(a.mode)));
  if (const json* t = r.find("attack.t_start"); t && !t->is_null()) {
    if (!(t->is_string() && t->get<std::string>() == "T")) a.t_start = r.integer("attack.t_start", 0);
  }
  a.gamma = r.real("attack.gamma", a.gamma);
  a.lambda = r.real("attack.lambda", a.lambda);
  a.reference = parse_reference_kind(r.text("attack.reference", to_string(a.reference)));
  a.guided_steps = GuidedSteps::parse(r.text("attack.guided_steps", a.guided_steps.to_string()));
  a.noise_sigma = r.real("attack.noise_sigma", a.noise_sigma);
  a.blur_kernel = r.integer("attack.blur_kernel", a.blur_kernel);
  a.blur_sigma = r.real("attack.blur_sigma", a.blur_sigma);
  a.crop_frac = r.real("attack.crop_frac", a.crop_frac);
  a.seed = r.u64("attack.seed", a.seed);

  cfg.sweep.mode = r.list<AttackMode>("sweep.mode", as_mode);
  cfg.sweep.t_start = r.list<int>("sweep.t_start", as_int);
  cfg.sweep.gamma = r.list<double>("sweep.gamma", as_real);
  cfg.sweep.lambda = r.list<double>("sweep.lambda", as_real);
  cfg.sweep.rho = r.list<double>("sweep.rho", as_real);
  cfg.sweep.B = r.list<int>("sweep.B", as_int);

  cfg.mi_bins = r.integer("analysis.mi_bins", cfg.mi_bins);
  cfg.trials = r.integer("trials", cfg.trials);
  cfg.master_seed = r.u64("master_seed", cfg.master_seed);
  cfg.out = r.text("out", cfg.out);
  cfg.notes = r.text("notes", cfg.notes);
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::parse, std::string("config: malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io, "config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["schedule"] = {{"kind", to_string(cfg.schedule.kind)},
                   {"T", cfg.schedule.T},
                   {"beta_start", cfg.schedule.beta_start},
                   {"beta_end", cfg.schedule.beta_end},
                   {"s", cfg.schedule.s}};
  j["prior"] = {{"d", cfg.prior.d},
                {"K", cfg.prior.K},
                {"sigma", cfg.prior.sigma},
                {"mean_separation", cfg.prior.mean_separation},
                {"seed", cfg.prior.seed}};
  j["watermark"] = {{"B", cfg.watermark.B}, {"rho", cfg.watermark.rho}, {"seed", cfg.watermark.seed}};
  if (cfg.watermark.kappa) j["watermark"]["kappa"] = *cfg.watermark.kappa;
  j["codec"] = {{"seed", cfg.codec_seed}};
  const auto& a = cfg.attack;
  j["attack"] = {{"mode", to_string(a.mode)},
                 {"gamma", a.gamma},
                 {"lambda", a.lambda},
                 {"reference", to_string(a.reference)},
                 {"guided_steps", a.guided_steps.to_string()},
                 {"noise_sigma", a.noise_sigma},
                 {"blur_kernel", a.blur_kernel},
                 {"blur_sigma", a.blur_sigma},
                 {"crop_frac", a.crop_frac},
                 {"seed", a.seed}};
  j["attack"]["t_start"] = a.t_start ? json(*a.t_start) : json("T");
  json sweep = json::object();
  if (!cfg.sweep.mode.empty()) {
    json modes = json::array();
    for (AttackMode m : cfg.sweep.mode) modes.push_back(to_string(m));
    sweep["mode"] = modes;
  }
  if (!cfg.sweep.t_start.empty()) sweep["t_start"] = cfg.sweep.t_start;
  if (!cfg.sweep.gamma.empty()) sweep["gamma"] = cfg.sweep.gamma;
  if (!cfg.sweep.lambda.empty()) sweep["lambda"] = cfg.sweep.lambda;
  if (!cfg.sweep.rho.empty()) sweep["rho"] = cfg.sweep.rho;
  if (!cfg.sweep.B.empty()) sweep["B"] = cfg.sweep.B;
  if (!sweep.empty()) j["sweep"] = sweep;
  j["analysis"] = {{"mi_bins", cfg.mi_bins}};
  j["trials"] = cfg.trials;
  j["master_seed"] = cfg.master_seed;
  j["out"] = cfg.out;
  if (!cfg.notes.empty()) j["notes"] = cfg.notes;
  return j;
}

Experiment::Experiment(const ExperimentConfig& cfg)
    : config(cfg),
      schedule(cfg.schedule.build()),
      prior(cfg.prior.build()),
      codec(Codec::generate(cfg.codec_seed, cfg.prior.d)) {
  cfg.validate();
  key = make_key(cfg.watermark.seed, cfg.prior.d, cfg.watermark.B, cfg.watermark.rho, cfg.watermark.resolved_kappa(),
                 prior.global_mean());
  if (grid_side(cfg.prior.d)) render_map = RenderMap::for_prior(prior);
}

}  // namespace wmfrag
