/*
 * Copyright 2026 The wmfrag Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef WMFRAG_H
#define WMFRAG_H

#include <stdint.h>

#if defined(_WIN32)
#define WMFRAG_API __declspec(dllexport)
#else
#define WMFRAG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wmfrag_status {
  WMFRAG_OK = 0,
  WMFRAG_E_INVALID_ARGUMENT = 1,
  WMFRAG_E_DIMENSION = 2,
  WMFRAG_E_RANGE = 3,
  WMFRAG_E_CAPABILITY = 4,
  WMFRAG_E_IO = 5,
  WMFRAG_E_PARSE = 6,
  WMFRAG_E_INTERNAL = 7
} wmfrag_status;

typedef struct wmfrag_config wmfrag_config;
typedef struct wmfrag_state wmfrag_state;

/* Message for the most recent failure on the calling thread. Valid until the
 * next call on that thread. */
WMFRAG_API const char* wmfrag_last_error(void);
WMFRAG_API const char* wmfrag_version(void);

/* Every char** output is heap memory owned by the caller. */
WMFRAG_API void wmfrag_string_free(char* s);

WMFRAG_API wmfrag_status wmfrag_config_default(wmfrag_config** out);
WMFRAG_API wmfrag_status wmfrag_config_load(const char* path, wmfrag_config** out);
WMFRAG_API wmfrag_status wmfrag_config_from_json(const char* json_text, wmfrag_config** out);
/* Override one field. `key` is dotted ("attack.gamma", "trials"), `json_value`
 * is a JSON literal ("0.5", "\"guided\"", "[100,500]"). The config is
 * revalidated and left unchanged on failure. */
WMFRAG_API wmfrag_status wmfrag_config_set(wmfrag_config* cfg, const char* key, const char* json_value);
WMFRAG_API wmfrag_status wmfrag_config_to_json(const wmfrag_config* cfg, char** out);
WMFRAG_API void wmfrag_config_free(wmfrag_config* cfg);

/* Single-image workflow. */
WMFRAG_API wmfrag_status wmfrag_embed(const wmfrag_config* cfg, uint64_t trial_id, wmfrag_state** out);
WMFRAG_API wmfrag_status wmfrag_state_load(const char* path, wmfrag_state** out);
WMFRAG_API wmfrag_status wmfrag_state_save(const wmfrag_state* state, const char* path);
/* Copy of the config stored in the state, for building attack overrides. */
WMFRAG_API wmfrag_status wmfrag_state_config(const wmfrag_state* state, wmfrag_config** out);
/* Applies the `attack` section of `attack_cfg` to the current image. */
WMFRAG_API wmfrag_status wmfrag_attack(const wmfrag_state* in, const wmfrag_config* attack_cfg, wmfrag_state** out);
/* JSON object: message, decoded, bit_acc, success, psnr_db, history. */
WMFRAG_API wmfrag_status wmfrag_decode(const wmfrag_state* state, char** report_json);
WMFRAG_API void wmfrag_state_free(wmfrag_state* state);

/* Runs the sweep and writes csv_path plus <stem>.bits.csv and <stem>.summary.json. */
WMFRAG_API wmfrag_status wmfrag_sweep(const wmfrag_config* cfg, const char* csv_path, int threads);

/* Analytic I(M; X_t) for t = step, 2 step, ..., T (and t = 1). JSON array of
 * {t, alpha_bar, snr, mi_bits, fano_success}. Exact for K = 1 only. */
WMFRAG_API wmfrag_status wmfrag_mi_curve(const wmfrag_config* cfg, int step, char** out_json);
/* Plug-in estimates per sweep point from a companion .bits.csv. JSON array of
 * {point, trials, mi_output, mi_output_se, mi_output_per_bit, and for
 * diffusion points mi_state, mi_state_se, mi_state_per_bit, dpi_excess,
 * dpi_slack}. */
WMFRAG_API wmfrag_status wmfrag_mi_from_bits(const char* bits_csv_path, int bins, char** out_json);
WMFRAG_API wmfrag_status wmfrag_fano(double mi_bits, int bit_count, double* success_upper);

#define WMFRAG_VERIFY_INJECT_GRADIENT_FAULT 1u
#define WMFRAG_VERIFY_JSON 2u
/* *passed is 1 when every check holds. The report is text or JSON per flags. */
WMFRAG_API wmfrag_status wmfrag_verify(unsigned flags, int* passed, char** report);

WMFRAG_API wmfrag_status wmfrag_plot(const char* csv_path, const char* x, const char* y, const char* group_by,
                                     const char* title, const char* svg_path);
/* which: "watermarked" or "current". Needs a square latent dimension. */
WMFRAG_API wmfrag_status wmfrag_export_png(const wmfrag_state* state, const char* which, int scale,
                                           const char* png_path);

#ifdef __cplusplus
}
#endif

#endif /* WMFRAG_H */
