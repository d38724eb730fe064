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


// Command-line front end. Talks to the library only through wmfrag.h.

#include "wmfrag/wmfrag.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerify = 1;
constexpr int kExitConfig = 2;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> trials;
  bool quiet = false;
};

// Thrown on any library failure; carries the exit code.
struct CliFailure {
  int code;
};

void check(wmfrag_status s, const char* what) {
  if (s == WMFRAG_OK) return;
  std::cerr << "wmfrag " << what << ": " << wmfrag_last_error() << "\n";
  throw CliFailure{kExitConfig};
}

struct ConfigDeleter {
  void operator()(wmfrag_config* c) const { wmfrag_config_free(c); }
};
struct StateDeleter {
  void operator()(wmfrag_state* s) const { wmfrag_state_free(s); }
};
using ConfigPtr = std::unique_ptr<wmfrag_config, ConfigDeleter>;
using StatePtr = std::unique_ptr<wmfrag_state, StateDeleter>;

std::string take(char* s) {
  std::string out = s ? s : "";
  wmfrag_string_free(s);
  return out;
}

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string json_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void set(wmfrag_config* cfg, const std::string& key, const std::string& json_value) {
  if (wmfrag_config_set(cfg, key.c_str(), json_value.c_str()) != WMFRAG_OK) {
    std::cerr << "wmfrag: --" << key << ": " << wmfrag_last_error() << "\n";
    throw CliFailure{kExitConfig};
  }
}

void apply_globals(wmfrag_config* cfg, const Globals& g) {
  if (g.seed) set(cfg, "master_seed", std::to_string(*g.seed));
  if (g.trials) set(cfg, "trials", std::to_string(*g.trials));
}

ConfigPtr load_config(const Globals& g) {
  wmfrag_config* raw = nullptr;
  if (g.config.empty()) {
    check(wmfrag_config_default(&raw), "config");
  } else {
    check(wmfrag_config_load(g.config.c_str(), &raw), "config");
  }
  ConfigPtr cfg(raw);
  apply_globals(cfg.get(), g);
  return cfg;
}

StatePtr load_state(const std::string& path) {
  wmfrag_state* raw = nullptr;
  check(wmfrag_state_load(path.c_str(), &raw), "state");
  return StatePtr(raw);
}

std::string require_out(const Globals& g, const char* command) {
  if (g.out.empty()) {
    std::cerr << "wmfrag " << command << ": --out is required\n";
    throw CliFailure{kExitConfig};
  }
  return g.out;
}

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
  if (ec) {
    std::cerr << "wmfrag: cannot create " << parent << ": " << ec.message() << "\n";
    throw CliFailure{kExitConfig};
  }
}

// Text to --out when given, stdout otherwise.
void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  ensure_parent(g.out);
  std::ofstream os(g.out, std::ios::binary);
  os << text;
  if (!os) {
    std::cerr << "wmfrag: cannot write " << g.out << "\n";
    throw CliFailure{kExitConfig};
  }
}

std::string bits_path_for(const std::string& csv) {
  const std::string suffix = ".bits.csv";
  if (csv.size() >= suffix.size() && csv.compare(csv.size() - suffix.size(), suffix.size(), suffix) == 0) return csv;
  const auto dot = csv.rfind(".csv");
  return (dot == std::string::npos ? csv : csv.substr(0, dot)) + suffix;
}

std::string out_dir(const std::string& config_json) {
  return nlohmann::json::parse(config_json).value("out", std::string("wmfrag_out"));
}

int watermark_bits(const std::string& config_json) {
  return nlohmann::json::parse(config_json).at("watermark").at("B").get<int>();
}

struct AttackFlags {
  std::optional<std::string> mode, t_start, reference, guided_steps;
  std::optional<double> gamma, lambda, noise_sigma, blur_sigma, crop_frac;
  std::optional<int> blur_kernel;
  std::optional<std::uint64_t> seed;
  std::string in;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Watermark fragility under diffusion regeneration"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Master seed override");
  app.add_option("--out", g.out, "Output path");
  app.add_option("--trials", g.trials, "Trials per sweep point")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "Suppress progress output");
  app.set_version_flag("--version", wmfrag_version());

  auto* embed = app.add_subcommand("embed", "Generate a content image and embed a random message");
  std::uint64_t trial_id = 0;
  embed->add_option("--trial-id", trial_id, "Trial index the content and message are drawn for");

  auto* attack = app.add_subcommand("attack", "Apply a removal attack to a state file");
  AttackFlags af;
  attack->add_option("--in", af.in, "Input state file")->required();
  attack->add_option("--mode", af.mode, "unguided | guided | noise | blur | crop_resize");
  attack->add_option("--t-start", af.t_start, "Noising depth (integer or T)");
  attack->add_option("--gamma", af.gamma, "Guidance step size");
  attack->add_option("--lambda", af.lambda, "Reference pull weight");
  attack->add_option("--reference", af.reference, "image | content");
  attack->add_option("--guided-steps", af.guided_steps, "all | last:<n> | final:<fraction>");
  attack->add_option("--noise-sigma", af.noise_sigma, "Gaussian noise std in image space");
  attack->add_option("--blur-kernel", af.blur_kernel, "Odd blur kernel side");
  attack->add_option("--blur-sigma", af.blur_sigma, "Gaussian blur width (0 = box)");
  attack->add_option("--crop-frac", af.crop_frac, "Border fraction removed before resize");
  attack->add_option("--attack-seed", af.seed, "Attack randomness seed");

  auto* decode = app.add_subcommand("decode", "Decode the current image of a state file");
  std::string decode_in;
  decode->add_option("--in", decode_in, "State file")->required();

  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep and write CSV + JSON summaries");
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  sweep->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* mi = app.add_subcommand("mi", "Mutual information: plug-in from a sweep CSV, or analytic from a config");
  std::string mi_csv;
  int bins = 0;
  int step = 50;
  mi->add_option("--csv", mi_csv, "Sweep CSV (or its .bits.csv companion)");
  mi->add_option("--bins", bins, "Quantile bins (default: config value or 8)");
  mi->add_option("--step", step, "t spacing of the analytic curve")->check(CLI::PositiveNumber);

  auto* fano = app.add_subcommand("fano", "Upper bound on decode success from I(M; observation)");
  double mi_bits = 0.0;
  std::optional<int> fano_bits;
  fano->add_option("--mi", mi_bits, "Mutual information in bits")->required();
  fano->add_option("--bits,-B", fano_bits, "Message length (default: config value)");

  auto* verify = app.add_subcommand("verify", "Run the cross-module invariant suite");
  bool inject = false;
  bool as_json = false;
  verify->add_flag("--inject-fault", inject, "Flip the watermark gradient sign for this run");
  verify->add_flag("--json", as_json, "JSON report");

  auto* plot = app.add_subcommand("plot", "SVG line plot of a sweep CSV");
  std::string plot_csv, plot_x, plot_y, group_by, title;
  plot->add_option("--csv", plot_csv, "Sweep CSV")->required();
  plot->add_option("--x", plot_x, "x column")->required();
  plot->add_option("--y", plot_y, "y column")->required();
  plot->add_option("--group-by", group_by, "Column splitting the series");
  plot->add_option("--title", title, "Plot title");

  auto* exportc = app.add_subcommand("export", "PNG of a state file's image");
  std::string export_in;
  std::string which = "current";
  int scale = 8;
  exportc->add_option("--in", export_in, "State file")->required();
  exportc->add_option("--which", which, "current | watermarked");
  exportc->add_option("--scale", scale, "Pixels per cell")->check(CLI::Range(1, 64));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (embed->parsed()) {
      const std::string out = require_out(g, "embed");
      ConfigPtr cfg = load_config(g);
      wmfrag_state* raw = nullptr;
      check(wmfrag_embed(cfg.get(), trial_id, &raw), "embed");
      StatePtr state(raw);
      ensure_parent(out);
      check(wmfrag_state_save(state.get(), out.c_str()), "embed");
      if (!g.quiet) std::cerr << "wrote " << out << "\n";
    } else if (attack->parsed()) {
      const std::string out = require_out(g, "attack");
      StatePtr in = load_state(af.in);
      ConfigPtr cfg;
      if (g.config.empty()) {
        wmfrag_config* raw = nullptr;
        check(wmfrag_state_config(in.get(), &raw), "attack");
        cfg.reset(raw);
      } else {
        cfg = load_config(g);
      }
      if (af.mode) set(cfg.get(), "attack.mode", json_string(*af.mode));
      if (af.t_start) set(cfg.get(), "attack.t_start", *af.t_start == "T" ? json_string("T") : *af.t_start);
      if (af.gamma) set(cfg.get(), "attack.gamma", json_number(*af.gamma));
      if (af.lambda) set(cfg.get(), "attack.lambda", json_number(*af.lambda));
      if (af.reference) set(cfg.get(), "attack.reference", json_string(*af.reference));
      if (af.guided_steps) set(cfg.get(), "attack.guided_steps", json_string(*af.guided_steps));
      if (af.noise_sigma) set(cfg.get(), "attack.noise_sigma", json_number(*af.noise_sigma));
      if (af.blur_kernel) set(cfg.get(), "attack.blur_kernel", std::to_string(*af.blur_kernel));
      if (af.blur_sigma) set(cfg.get(), "attack.blur_sigma", json_number(*af.blur_sigma));
      if (af.crop_frac) set(cfg.get(), "attack.crop_frac", json_number(*af.crop_frac));
      if (af.seed) set(cfg.get(), "attack.seed", std::to_string(*af.seed));
      wmfrag_state* raw = nullptr;
      check(wmfrag_attack(in.get(), cfg.get(), &raw), "attack");
      StatePtr result(raw);
      ensure_parent(out);
      check(wmfrag_state_save(result.get(), out.c_str()), "attack");
      if (!g.quiet) std::cerr << "wrote " << out << "\n";
    } else if (decode->parsed()) {
      StatePtr state = load_state(decode_in);
      char* report = nullptr;
      check(wmfrag_decode(state.get(), &report), "decode");
      emit(g, take(report));
    } else if (sweep->parsed()) {
      ConfigPtr cfg = load_config(g);
      std::string out = g.out;
      if (out.empty()) {
        char* json = nullptr;
        check(wmfrag_config_to_json(cfg.get(), &json), "sweep");
        const std::string dir = out_dir(take(json));
        out = (std::filesystem::path(dir) / "sweep.csv").string();
      }
      ensure_parent(out);
      if (!g.quiet) std::cerr << "sweep -> " << out << " (" << threads << " threads)\n";
      check(wmfrag_sweep(cfg.get(), out.c_str(), threads), "sweep");
      if (!g.quiet) std::cerr << "wrote " << out << ", " << bits_path_for(out) << "\n";
    } else if (mi->parsed()) {
      char* json = nullptr;
      if (!mi_csv.empty()) {
        check(wmfrag_mi_from_bits(bits_path_for(mi_csv).c_str(), bins > 0 ? bins : 8, &json), "mi");
      } else {
        ConfigPtr cfg = load_config(g);
        check(wmfrag_mi_curve(cfg.get(), step, &json), "mi");
      }
      emit(g, take(json));
    } else if (fano->parsed()) {
      int B = 32;
      if (fano_bits) {
        B = *fano_bits;
      } else if (!g.config.empty()) {
        ConfigPtr cfg = load_config(g);
        char* json = nullptr;
        check(wmfrag_config_to_json(cfg.get(), &json), "fano");
        B = watermark_bits(take(json));
      }
      double p = 0.0;
      check(wmfrag_fano(mi_bits, B, &p), "fano");
      char buf[128];
      std::snprintf(buf, sizeof buf, "{\"mi_bits\": %.10g, \"B\": %d, \"success_upper\": %.10g}\n", mi_bits, B, p);
      emit(g, buf);
    } else if (verify->parsed()) {
      unsigned flags = 0;
      if (inject) flags |= WMFRAG_VERIFY_INJECT_GRADIENT_FAULT;
      if (as_json) flags |= WMFRAG_VERIFY_JSON;
      int passed = 0;
      char* report = nullptr;
      check(wmfrag_verify(flags, &passed, &report), "verify");
      const std::string text = take(report);
      if (!g.quiet || !g.out.empty()) emit(g, text);
      return passed ? kExitOk : kExitVerify;
    } else if (plot->parsed()) {
      const std::string out = require_out(g, "plot");
      ensure_parent(out);
      check(wmfrag_plot(plot_csv.c_str(), plot_x.c_str(), plot_y.c_str(), group_by.c_str(), title.c_str(),
                        out.c_str()),
            "plot");
      if (!g.quiet) std::cerr << "wrote " << out << "\n";
    } else if (exportc->parsed()) {
      const std::string out = require_out(g, "export");
      StatePtr state = load_state(export_in);
      ensure_parent(out);
      check(wmfrag_export_png(state.get(), which.c_str(), scale, out.c_str()), "export");
      if (!g.quiet) std::cerr << "wrote " << out << "\n";
    }
  } catch (const CliFailure& f) {
    return f.code;
  }
  return kExitOk;
}
