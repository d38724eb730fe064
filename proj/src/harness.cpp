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

#include "wmfrag/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace wmfrag {

using nlohmann::json;

Rng trial_rng(std::uint64_t derived_seed, TrialStream which, std::uint64_t attack_seed) {
  const std::uint64_t base = which == TrialStream::attack ? splitmix64_mix(derived_seed ^ attack_seed) : derived_seed;
  return Rng::stream(base, static_cast<std::uint64_t>(which));
}

WatermarkKey state_key(const WatermarkKey& key, const NoiseSchedule& sched, int t) {
  WatermarkKey k = key;
  k.center *= std::sqrt(sched.alpha_bar(t));
  return k;
}

namespace {

struct Watermarked {
  Message message;
  ImageVec image;
};

Watermarked make_watermarked(const Experiment& exp, std::uint64_t seed) {
  Rng content_rng = trial_rng(seed, TrialStream::content);
  Rng message_rng = trial_rng(seed, TrialStream::message);
  const ContentSample c = sample_content(exp.prior, content_rng);
  Message m = Message::random(exp.key.bits(), message_rng);
  ImageVec image = exp.codec.to_image(embed(c.z_clean, m, exp.key));
  return {std::move(m), std::move(image)};
}

AttackOutcome apply_attack(const Experiment& exp, const AttackConfig& attack, const ImageVec& input, Rng& rng) {
  switch (attack.mode) {
    case AttackMode::unguided:
      return attack_unguided(input, attack, exp.schedule, exp.prior, exp.codec, rng);
    case AttackMode::guided:
      return attack_guided(input, &exp.key, attack, exp.schedule, exp.prior, exp.codec, rng);
    default: {
      // Only blur and crop read the render map; noise works for any d.
      const RenderMap map = exp.render_map.value_or(RenderMap{});
      return {attack_classical(input, attack, map, rng), std::nullopt};
    }
  }
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TrialRecord run_trial(const Experiment& exp, std::uint64_t trial_id) {
  const ExperimentConfig& cfg = exp.config;
  TrialRecord r;
  r.trial_id = trial_id;
  r.seed = derive_seed(cfg.master_seed, trial_id);
  r.mode = cfg.attack.mode;
  r.gamma = cfg.attack.gamma;
  r.lambda = cfg.attack.lambda;
  r.noise_sigma = cfg.attack.noise_sigma;
  r.blur_kernel = cfg.attack.blur_kernel;
  r.crop_frac = cfg.attack.crop_frac;
  r.rho = cfg.watermark.rho;
  r.B = cfg.watermark.B;
  r.d = cfg.prior.d;
  r.K = cfg.prior.K;

  const Watermarked wm = make_watermarked(exp, r.seed);
  r.message_hex = wm.message.to_hex();
  r.truth = wm.message.bits();

  Rng attack_rng = trial_rng(r.seed, TrialStream::attack, cfg.attack.seed);
  const AttackOutcome out = apply_attack(exp, cfg.attack, wm.image, attack_rng);

  const Message decoded = decode_hard(out.image, exp.key, exp.codec);
  r.metrics.bit_acc = bit_accuracy(wm.message, decoded);
  r.metrics.decode_success = decode_success(wm.message, decoded);
  if (exp.render_map) {
    const Grid a = render(wm.image, *exp.render_map);
    const Grid b = render(out.image, *exp.render_map);
    r.metrics.psnr_db = psnr(a, b);
    if (a.rows() >= 7) r.metrics.ssim = ssim(a, b);
  }
  r.metrics.content_match = content_match(exp.prior, wm.image, out.image, exp.codec);
  r.soft_out = to_std(decode_soft(out.image, exp.key, exp.codec));

  if (is_diffusion_mode(cfg.attack.mode)) {
    r.t_start = cfg.attack.resolved_t_start(exp.schedule);
    Rng snr_rng = trial_rng(r.seed, TrialStream::snr);
    r.metrics.snr_emp = snr_empirical(exp.key, exp.schedule, exp.prior, r.t_start, 4, snr_rng).value;
    r.metrics.snr_analytic = snr_analytic(exp.schedule, r.t_start, cfg.watermark.rho, cfg.prior.d);
    r.soft_state = to_std(decode_soft_latent(*out.noised_state, state_key(exp.key, exp.schedule, r.t_start)));
  }
  return r;
}

std::vector<SweepPoint> expand_sweep(const ExperimentConfig& cfg) {
  const SweepGrid& g = cfg.sweep;
  const auto axis = [](const auto& values, auto base) {
    using T = decltype(base);
    return values.empty() ? std::vector<T>{base} : std::vector<T>(values.begin(), values.end());
  };
  const NoiseSchedule sched = cfg.schedule.build();
  const auto modes = axis(g.mode, cfg.attack.mode);
  const auto t_starts = axis(g.t_start, cfg.attack.resolved_t_start(sched));
  const auto gammas = axis(g.gamma, cfg.attack.gamma);
  const auto lambdas = axis(g.lambda, cfg.attack.lambda);
  const auto rhos = axis(g.rho, cfg.watermark.rho);
  const auto bs = axis(g.B, cfg.watermark.B);

  std::vector<SweepPoint> points;
  for (AttackMode mode : modes)
    for (int t : t_starts)
      for (double gamma : gammas)
        for (double lambda : lambdas)
          for (double rho : rhos)
            for (int b : bs) {
              SweepPoint p;
              p.index = points.size();
              p.config = cfg;
              p.config.sweep = SweepGrid{};
              p.config.attack.mode = mode;
              if (!g.t_start.empty()) p.config.attack.t_start = t;
              p.config.attack.gamma = gamma;
              p.config.attack.lambda = lambda;
              p.config.watermark.rho = rho;
              p.config.watermark.B = b;
              std::ostringstream label;
              label << "mode=" << to_string(mode);
              if (is_diffusion_mode(mode)) label << " t_start=" << t << " gamma=" << format_number(gamma);
              label << " lambda=" << format_number(lambda) << " rho=" << format_number(rho) << " B=" << b;
              p.label = label.str();
              points.push_back(std::move(p));
            }
  return points;
}

namespace {

struct MeanSe {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
};

// Mean and standard error over the finite entries only.
MeanSe mean_se(const std::vector<double>& xs) {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (double x : xs) {
    if (!std::isfinite(x)) continue;
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  MeanSe out;
  if (n == 0) return out;
  out.mean = sum / n;
  out.se = n > 1 ? std::sqrt(std::max(0.0, (sum_sq - n * out.mean * out.mean) / (n - 1.0)) / n) : 0.0;
  return out;
}

std::vector<std::vector<BitObservation>> by_position(const std::vector<TrialRecord>& records, bool state) {
  const std::size_t bits = records.front().truth.size();
  std::vector<std::vector<BitObservation>> out(bits);
  for (const auto& r : records) {
    const auto& soft = state ? r.soft_state : r.soft_out;
    for (std::size_t i = 0; i < bits; ++i) out[i].push_back({r.truth[i], soft[i]});
  }
  return out;
}

PointSummary summarize_with(const Experiment& exp, const std::string& label,
                            const std::vector<TrialRecord>& records) {
  require(!records.empty(), ErrorCode::invalid_argument, "summarize: no trial records");
  PointSummary s;
  s.label = label;
  s.trials = records.size();
  std::vector<double> acc, psnr_v, ssim_v, snr_v, match;
  for (const auto& r : records) {
    acc.push_back(r.metrics.bit_acc);
    psnr_v.push_back(r.metrics.psnr_db);
    ssim_v.push_back(r.metrics.ssim);
    snr_v.push_back(r.metrics.snr_emp);
    match.push_back(r.metrics.content_match ? 1.0 : 0.0);
    s.decode_successes += r.metrics.decode_success ? 1 : 0;
  }
  const MeanSe a = mean_se(acc);
  s.bit_acc_mean = a.mean;
  s.bit_acc_se = a.se;
  s.psnr_mean = mean_se(psnr_v).mean;
  s.ssim_mean = mean_se(ssim_v).mean;
  s.snr_emp_mean = mean_se(snr_v).mean;
  s.snr_analytic = records.front().metrics.snr_analytic;
  s.content_match_rate = mean_se(match).mean;
  const int bins = exp.config.mi_bins;
  s.mi_output = mi_plugin_total(by_position(records, false), bins);
  if (!records.front().soft_state.empty()) {
    s.mi_state = mi_plugin_total(by_position(records, true), bins);
    // M -> X_t -> I' is a Markov chain only when nothing but x_{t_start} feeds
    // the reverse process: the guided target and the lambda reference both read I_w.
    const AttackConfig& a = exp.config.attack;
    const bool markov = a.lambda == 0.0 && (a.mode == AttackMode::unguided || a.gamma == 0.0);
    if (markov) {
      const std::vector<LabeledEstimate> chain = {{"X_t_start", *s.mi_state}, {"I_attacked", s.mi_output}};
      s.dpi = dpi_report(chain);
    }
    if (exp.prior.components() == 1) {
      const int t = records.front().t_start;
      s.mi_analytic = mi_message_state_analytic(exp.key, exp.schedule, exp.prior, t).value;
      s.fano_success = fano_success_upper(std::min(*s.mi_analytic, static_cast<double>(exp.key.bits())),
                                          exp.key.bits());
    }
  }
  return s;
}

Error at_point(const SweepPoint& p, const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  return Error(err ? err->code() : ErrorCode::invalid_argument,
               "sweep point " + std::to_string(p.index) + " (" + p.label + "): " + e.what());
}

}  // namespace

PointSummary summarize(const SweepPoint& point, const std::vector<TrialRecord>& records) {
  return summarize_with(Experiment(point.config), point.label, records);
}

SweepResult run_sweep(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  SweepResult result;
  result.points = expand_sweep(cfg);
  const int workers = std::max(1, threads);
  for (const SweepPoint& p : result.points) {
    try {
      const Experiment exp(p.config);
      const auto n = static_cast<std::size_t>(p.config.trials);
      std::vector<TrialRecord> records(n);
      if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) records[i] = run_trial(exp, i);
      } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
          pool.emplace_back([&, w] {
            try {
              for (std::size_t i = next++; i < n; i = next++) records[i] = run_trial(exp, i);
            } catch (...) {
              errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
          });
        }
        for (auto& t : pool) t.join();
        for (const auto& e : errors)
          if (e) std::rethrow_exception(e);
      }
      result.summaries.push_back(summarize_with(exp, p.label, records));
      result.records.push_back(std::move(records));
    } catch (const std::exception& e) {
      throw at_point(p, e);
    }
  }
  return result;
}

const std::vector<std::string> kCsvColumns = {
    "trial_id", "seed",     "mode",    "t_start",  "gamma",        "lambda",      "rho",          "B", "d",
    "K",        "bit_acc",  "decode_success", "psnr_db", "ssim", "snr_emp", "snr_analytic", "content_match"};

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string csv_header() {
  std::string out;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) out += (i ? "," : "") + kCsvColumns[i];
  return out + "\n";
}

std::string csv_row(const TrialRecord& r) {
  std::ostringstream os;
  const TrialMetrics& m = r.metrics;
  os << r.trial_id << ',' << r.seed << ',' << to_string(r.mode) << ',' << r.t_start << ','
     << format_number(r.gamma) << ',' << format_number(r.lambda) << ',' << format_number(r.rho) << ',' << r.B << ','
     << r.d << ',' << r.K << ',' << format_number(m.bit_acc) << ',' << (m.decode_success ? 1 : 0) << ','
     << format_number(m.psnr_db) << ',' << format_number(m.ssim) << ',' << format_number(m.snr_emp) << ','
     << format_number(m.snr_analytic) << ',' << (m.content_match ? 1 : 0) << '\n';
  return os.str();
}

std::string bits_csv(const SweepResult& result) {
  std::ostringstream os;
  os << "point,trial_id,bit,truth,soft_out,soft_state\n";
  for (std::size_t p = 0; p < result.records.size(); ++p) {
    for (const auto& r : result.records[p]) {
      for (std::size_t i = 0; i < r.truth.size(); ++i) {
        os << p << ',' << r.trial_id << ',' << i << ',' << int{r.truth[i]} << ',' << format_number(r.soft_out[i])
           << ',' << (r.soft_state.empty() ? "nan" : format_number(r.soft_state[i])) << '\n';
      }
    }
  }
  return os.str();
}

namespace {

json mi_json(const MIEstimate& e) {
  return {{"bits", e.value}, {"stderr", e.stderr_bits}, {"samples", e.samples}};
}

// NaN has no JSON spelling; emit null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json summary_json(const SweepResult& result) {
  json points = json::array();
  for (std::size_t i = 0; i < result.summaries.size(); ++i) {
    const PointSummary& s = result.summaries[i];
    const ExperimentConfig& c = result.points[i].config;
    json p = {{"index", i},
              {"label", s.label},
              {"attack", to_json(c)["attack"]},
              {"rho", c.watermark.rho},
              {"B", c.watermark.B},
              {"trials", s.trials},
              {"bit_acc", {{"mean", num(s.bit_acc_mean)}, {"stderr", num(s.bit_acc_se)}}},
              {"decode_success", {{"count", s.decode_successes}, {"rate", double(s.decode_successes) / s.trials}}},
              {"psnr_db_mean", num(s.psnr_mean)},
              {"ssim_mean", num(s.ssim_mean)},
              {"snr_emp_mean", num(s.snr_emp_mean)},
              {"snr_analytic", num(s.snr_analytic)},
              {"content_match_rate", num(s.content_match_rate)},
              {"mi_output", mi_json(s.mi_output)}};
    if (s.mi_state) p["mi_state"] = mi_json(*s.mi_state);
    if (s.mi_analytic) p["mi_analytic_bits"] = *s.mi_analytic;
    if (s.fano_success) p["fano_success_upper"] = *s.fano_success;
    if (s.dpi) p["dpi_pass"] = s.dpi->pass;
    points.push_back(std::move(p));
  }
  return {{"points", points}};
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::io, "cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    require(static_cast<bool>(out), ErrorCode::io, "write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::io, "cannot rename '" + tmp + "' to '" + path + "'");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void run_sweep_to_files(const ExperimentConfig& cfg, const std::string& csv_path, int threads) {
  const SweepResult result = run_sweep(cfg, threads);
  std::string csv = csv_header();
  for (const auto& point : result.records)
    for (const auto& r : point) csv += csv_row(r);
  const std::filesystem::path p(csv_path);
  const std::string stem = (p.parent_path() / p.stem()).string();
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  atomic_write(stem + ".bits.csv", bits_csv(result));
  atomic_write(stem + ".summary.json", summary_json(result).dump(2) + "\n");
  atomic_write(csv_path, csv);
}

ImageState embed_state(const ExperimentConfig& cfg, std::uint64_t trial_id) {
  const Experiment exp(cfg);
  const Watermarked wm = make_watermarked(exp, derive_seed(cfg.master_seed, trial_id));
  ImageState s;
  s.config = cfg;
  s.trial_id = trial_id;
  s.message = wm.message;
  s.watermarked = wm.image;
  s.current = wm.image;
  return s;
}

ImageState attack_state(const ImageState& in, const AttackConfig& attack) {
  ExperimentConfig cfg = in.config;
  cfg.attack = attack;
  const Experiment exp(cfg);
  // Each successive attack on the same state gets its own stream.
  Rng rng = trial_rng(derive_seed(cfg.master_seed, in.trial_id), TrialStream::attack,
                      attack.seed ^ splitmix64_mix(in.history.size()));
  ImageState out = in;
  out.config = cfg;
  out.current = apply_attack(exp, attack, in.current, rng).image;
  out.history.push_back(to_string(attack.mode));
  return out;
}

json state_to_json(const ImageState& s) {
  return {{"config", to_json(s.config)},
          {"trial_id", s.trial_id},
          {"bits", s.message.size()},
          {"message", s.message.to_hex()},
          {"watermarked", to_std(s.watermarked.values)},
          {"current", to_std(s.current.values)},
          {"history", s.history}};
}

ImageState state_from_json(const json& j) {
  try {
    ImageState s;
    s.config = parse_config(j.at("config"));
    s.trial_id = j.at("trial_id").get<std::uint64_t>();
    s.message = Message::from_hex(j.at("message").get<std::string>(), j.at("bits").get<int>());
    const auto load = [&](const char* key) {
      const auto v = j.at(key).get<std::vector<double>>();
      require(static_cast<int>(v.size()) == s.config.prior.d, ErrorCode::dimension_mismatch,
              std::string("state: '") + key + "' has the wrong length");
      return ImageVec(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    s.watermarked = load("watermarked");
    s.current = load("current");
    if (j.contains("history")) s.history = j.at("history").get<std::vector<std::string>>();
    require(s.message.size() == s.config.watermark.B, ErrorCode::parse, "state: message length differs from B");
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, std::string("state file: ") + e.what());
  }
}

DecodeReport decode_state(const ImageState& s) {
  const Experiment exp(s.config);
  DecodeReport r;
  r.decoded = decode_hard(s.current, exp.key, exp.codec);
  r.bit_acc = bit_accuracy(s.message, r.decoded);
  r.success = decode_success(s.message, r.decoded);
  if (exp.render_map) r.psnr_db = psnr(render(s.watermarked, *exp.render_map), render(s.current, *exp.render_map));
  return r;
}

}  // namespace wmfrag
