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


#include "wmfrag/wmfrag.h"

#include "wmfrag/harness.hpp"
#include "wmfrag/infotheory.hpp"
#include "wmfrag/output.hpp"
#include "wmfrag/verify.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <map>
#include <new>
#include <string>

struct wmfrag_config {
  wmfrag::ExperimentConfig cfg;
};

struct wmfrag_state {
  wmfrag::ImageState state;
};

namespace {

thread_local std::string g_last_error;

wmfrag_status status_of(wmfrag::ErrorCode code) {
  switch (code) {
    case wmfrag::ErrorCode::invalid_argument:
      return WMFRAG_E_INVALID_ARGUMENT;
    case wmfrag::ErrorCode::dimension_mismatch:
      return WMFRAG_E_DIMENSION;
    case wmfrag::ErrorCode::out_of_range:
      return WMFRAG_E_RANGE;
    case wmfrag::ErrorCode::capability_missing:
      return WMFRAG_E_CAPABILITY;
    case wmfrag::ErrorCode::io:
      return WMFRAG_E_IO;
    case wmfrag::ErrorCode::parse:
      return WMFRAG_E_PARSE;
  }
  return WMFRAG_E_INTERNAL;
}

// Runs `body`, translating every exception into a status and a last-error string.
template <class F>
wmfrag_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return WMFRAG_OK;
  } catch (const wmfrag::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return WMFRAG_E_PARSE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return WMFRAG_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return WMFRAG_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return WMFRAG_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) wmfrag::fail(wmfrag::ErrorCode::invalid_argument, std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double parse_double(const std::string& text, const char* what) {
  if (text == "nan") return std::nan("");
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::logic_error&) {
  }
  wmfrag::fail(wmfrag::ErrorCode::parse, std::string(what) + ": not a number: '" + text + "'");
}

nlohmann::json per_bit(const std::vector<std::vector<wmfrag::BitObservation>>& by_position, int bins) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& obs : by_position) arr.push_back(wmfrag::mi_plugin(obs, bins).value);
  return arr;
}

}  // namespace

extern "C" {

const char* wmfrag_last_error(void) { return g_last_error.c_str(); }

const char* wmfrag_version(void) { return WMFRAG_VERSION_STRING; }

void wmfrag_string_free(char* s) { std::free(s); }

wmfrag_status wmfrag_config_default(wmfrag_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new wmfrag_config{};
  });
}

wmfrag_status wmfrag_config_load(const char* path, wmfrag_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new wmfrag_config{wmfrag::load_config(path)};
  });
}

wmfrag_status wmfrag_config_from_json(const char* json_text, wmfrag_config** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    *out = new wmfrag_config{wmfrag::parse_config_text(json_text)};
  });
}

wmfrag_status wmfrag_config_set(wmfrag_config* cfg, const char* key, const char* json_value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(json_value, "json_value");
    const nlohmann::json value = nlohmann::json::parse(json_value);
    nlohmann::json doc = wmfrag::to_json(cfg->cfg);
    nlohmann::json* node = &doc;
    std::string rest = key;
    for (auto dot = rest.find('.'); dot != std::string::npos; dot = rest.find('.')) {
      const std::string head = rest.substr(0, dot);
      nlohmann::json& child = (*node)[head];
      if (child.is_null()) child = nlohmann::json::object();
      wmfrag::require(child.is_object(), wmfrag::ErrorCode::invalid_argument,
                      std::string("config key '") + key + "': '" + head + "' is not a section");
      node = &child;
      rest = rest.substr(dot + 1);
    }
    (*node)[rest] = value;
    cfg->cfg = wmfrag::parse_config(doc);
  });
}

wmfrag_status wmfrag_config_to_json(const wmfrag_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup_string(wmfrag::to_json(cfg->cfg).dump(2) + "\n");
  });
}

void wmfrag_config_free(wmfrag_config* cfg) { delete cfg; }

wmfrag_status wmfrag_embed(const wmfrag_config* cfg, uint64_t trial_id, wmfrag_state** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = new wmfrag_state{wmfrag::embed_state(cfg->cfg, trial_id)};
  });
}

wmfrag_status wmfrag_state_load(const char* path, wmfrag_state** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const std::string text = wmfrag::read_file(path);
    *out = new wmfrag_state{wmfrag::state_from_json(nlohmann::json::parse(text))};
  });
}

wmfrag_status wmfrag_state_save(const wmfrag_state* state, const char* path) {
  return guarded([&] {
    need(state, "state");
    need(path, "path");
    wmfrag::atomic_write(path, wmfrag::state_to_json(state->state).dump() + "\n");
  });
}

wmfrag_status wmfrag_state_config(const wmfrag_state* state, wmfrag_config** out) {
  return guarded([&] {
    need(state, "state");
    need(out, "out");
    *out = new wmfrag_config{state->state.config};
  });
}

wmfrag_status wmfrag_attack(const wmfrag_state* in, const wmfrag_config* attack_cfg, wmfrag_state** out) {
  return guarded([&] {
    need(in, "in");
    need(attack_cfg, "attack_cfg");
    need(out, "out");
    *out = new wmfrag_state{wmfrag::attack_state(in->state, attack_cfg->cfg.attack)};
  });
}

wmfrag_status wmfrag_decode(const wmfrag_state* state, char** report_json) {
  return guarded([&] {
    need(state, "state");
    need(report_json, "report_json");
    const wmfrag::DecodeReport r = wmfrag::decode_state(state->state);
    const nlohmann::json j = {{"message", state->state.message.to_hex()},
                              {"decoded", r.decoded.to_hex()},
                              {"bit_acc", r.bit_acc},
                              {"success", r.success},
                              {"psnr_db", number_or_null(r.psnr_db)},
                              {"history", state->state.history}};
    *report_json = dup_string(j.dump(2) + "\n");
  });
}

void wmfrag_state_free(wmfrag_state* state) { delete state; }

wmfrag_status wmfrag_sweep(const wmfrag_config* cfg, const char* csv_path, int threads) {
  return guarded([&] {
    need(cfg, "cfg");
    need(csv_path, "csv_path");
    wmfrag::require(threads >= 1, wmfrag::ErrorCode::invalid_argument, "sweep: threads must be >= 1");
    wmfrag::run_sweep_to_files(cfg->cfg, csv_path, threads);
  });
}

wmfrag_status wmfrag_mi_curve(const wmfrag_config* cfg, int step, char** out_json) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out_json, "out_json");
    wmfrag::require(step >= 1, wmfrag::ErrorCode::invalid_argument, "mi: step must be >= 1");
    cfg->cfg.validate();
    const wmfrag::Experiment exp(cfg->cfg);
    const int T = exp.schedule.steps();
    const int B = exp.key.bits();
    std::vector<int> ts = {1};
    for (int t = step; t <= T; t += step) {
      if (t != 1) ts.push_back(t);
    }
    if (ts.back() != T) ts.push_back(T);
    nlohmann::json arr = nlohmann::json::array();
    for (int t : ts) {
      const wmfrag::ChannelSpec ch = wmfrag::carrier_channel(exp.key, exp.schedule, exp.prior, t);
      const double mi = wmfrag::mi_message_state_analytic(exp.key, exp.schedule, exp.prior, t).value;
      arr.push_back({{"t", t},
                     {"alpha_bar", exp.schedule.alpha_bar(t)},
                     {"snr", ch.snr()},
                     {"mi_bits", mi},
                     {"fano_success", wmfrag::fano_success_upper(std::min(mi, static_cast<double>(B)), B)}});
    }
    *out_json = dup_string(arr.dump(2) + "\n");
  });
}

wmfrag_status wmfrag_mi_from_bits(const char* bits_csv_path, int bins, char** out_json) {
  return guarded([&] {
    need(bits_csv_path, "bits_csv_path");
    need(out_json, "out_json");
    wmfrag::require(bins >= 2, wmfrag::ErrorCode::invalid_argument, "mi: bins must be >= 2");
    const wmfrag::CsvTable table = wmfrag::parse_csv(wmfrag::read_file(bits_csv_path));
    const std::size_t c_point = table.column("point");
    const std::size_t c_trial = table.column("trial_id");
    const std::size_t c_bit = table.column("bit");
    const std::size_t c_truth = table.column("truth");
    const std::size_t c_out = table.column("soft_out");
    const std::size_t c_state = table.column("soft_state");

    struct PointData {
      std::vector<std::vector<wmfrag::BitObservation>> out, state;
      std::map<std::string, bool> trials;
      bool has_state = true;
    };
    std::map<long, PointData> points;
    for (const auto& row : table.rows) {
      PointData& p = points[std::stol(row[c_point])];
      const auto bit = static_cast<std::size_t>(std::stoul(row[c_bit]));
      if (p.out.size() <= bit) {
        p.out.resize(bit + 1);
        p.state.resize(bit + 1);
      }
      const auto truth = static_cast<std::uint8_t>(std::stoi(row[c_truth]));
      p.out[bit].push_back({truth, parse_double(row[c_out], "soft_out")});
      const double st = parse_double(row[c_state], "soft_state");
      if (std::isnan(st)) {
        p.has_state = false;
      } else {
        p.state[bit].push_back({truth, st});
      }
      p.trials[row[c_trial]] = true;
    }
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [index, p] : points) {
      const wmfrag::MIEstimate out = wmfrag::mi_plugin_total(p.out, bins);
      nlohmann::json j = {{"point", index},
                          {"trials", p.trials.size()},
                          {"mi_output", out.value},
                          {"mi_output_se", out.stderr_bits},
                          {"mi_output_per_bit", per_bit(p.out, bins)}};
      if (p.has_state) {
        const wmfrag::MIEstimate st = wmfrag::mi_plugin_total(p.state, bins);
        j["mi_state"] = st.value;
        j["mi_state_se"] = st.stderr_bits;
        j["mi_state_per_bit"] = per_bit(p.state, bins);
        // The bound only binds where X_t is the sole input to the reverse
        // chain; the summary JSON records which points qualify.
        j["dpi_excess"] = out.value - st.value;
        j["dpi_slack"] = 3.0 * std::hypot(out.stderr_bits, st.stderr_bits);
      }
      arr.push_back(std::move(j));
    }
    *out_json = dup_string(arr.dump(2) + "\n");
  });
}

wmfrag_status wmfrag_fano(double mi_bits, int bit_count, double* success_upper) {
  return guarded([&] {
    need(success_upper, "success_upper");
    *success_upper = wmfrag::fano_success_upper(mi_bits, bit_count);
  });
}

wmfrag_status wmfrag_verify(unsigned flags, int* passed, char** report) {
  return guarded([&] {
    need(passed, "passed");
    wmfrag::VerifyOptions opts;
    opts.inject_gradient_fault = (flags & WMFRAG_VERIFY_INJECT_GRADIENT_FAULT) != 0;
    const wmfrag::VerifyReport r = wmfrag::run_verify(opts);
    *passed = r.pass() ? 1 : 0;
    if (report != nullptr) {
      *report = dup_string((flags & WMFRAG_VERIFY_JSON) != 0 ? wmfrag::report_json(r).dump(2) + "\n"
                                                             : wmfrag::format_report(r));
    }
  });
}

wmfrag_status wmfrag_plot(const char* csv_path, const char* x, const char* y, const char* group_by,
                          const char* title, const char* svg_path) {
  return guarded([&] {
    need(csv_path, "csv_path");
    need(x, "x");
    need(y, "y");
    need(svg_path, "svg_path");
    const wmfrag::CsvTable table = wmfrag::parse_csv(wmfrag::read_file(csv_path));
    wmfrag::PlotOptions opts;
    if (title != nullptr) opts.title = title;
    wmfrag::atomic_write(svg_path, wmfrag::plot_svg(table, x, y, group_by ? group_by : "", opts));
  });
}

wmfrag_status wmfrag_export_png(const wmfrag_state* state, const char* which, int scale, const char* png_path) {
  return guarded([&] {
    need(state, "state");
    need(png_path, "png_path");
    const std::string w = which ? which : "current";
    wmfrag::require(w == "current" || w == "watermarked", wmfrag::ErrorCode::invalid_argument,
                    "export: which must be 'current' or 'watermarked', got '" + w + "'");
    wmfrag::require(scale >= 1 && scale <= 64, wmfrag::ErrorCode::invalid_argument, "export: scale must be in [1,64]");
    const wmfrag::Experiment exp(state->state.config);
    wmfrag::require(exp.render_map.has_value(), wmfrag::ErrorCode::capability_missing,
                    "export: latent dimension " + std::to_string(exp.config.prior.d) + " is not a perfect square");
    const wmfrag::ImageVec& img = w == "current" ? state->state.current : state->state.watermarked;
    wmfrag::atomic_write(png_path, wmfrag::encode_png(wmfrag::render(img, *exp.render_map), scale));
  });
}

}  // extern "C"
