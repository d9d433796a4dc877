// Copyright 2026 The captune Authors
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

/* Stable C interface to captune. Every function returns a ct_status; on
 * failure ct_last_error() describes the problem for the calling thread.
 * Strings returned through char** are owned by the caller and released with
 * ct_string_free. */

#ifndef CAPTUNE_CAPTUNE_H_
#define CAPTUNE_CAPTUNE_H_

#include <stddef.h>

#if defined(CAPTUNE_BUILDING_LIBRARY)
#define CT_API __attribute__((visibility("default")))
#else
#define CT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ct_status {
  CT_OK = 0,
  CT_ERR_SHAPE = 1,
  CT_ERR_DEGENERATE_VECTOR = 2,
  CT_ERR_CONTRACT = 3,
  CT_ERR_NUMERIC = 4,
  CT_ERR_CONFIGURATION = 5,
  CT_ERR_RANK = 6,
  CT_ERR_PARAMETER = 7,
  CT_ERR_DATA = 8,
  CT_ERR_PARSE = 9,
  CT_ERR_INTEGRITY = 10,
  CT_ERR_IO = 11,
  CT_ERR_USAGE = 12,
  CT_ERR_INTERNAL = 13,
  CT_ERR_NULL_ARGUMENT = 14
} ct_status;

typedef enum ct_direction {
  CT_IMAGE_TO_TEXT = 0,
  CT_TEXT_TO_IMAGE = 1,
  CT_SYMMETRIC = 2
} ct_direction;

CT_API const char* ct_version(void);
/* Category name such as "configuration" or "io"; "ok" for CT_OK. */
CT_API const char* ct_status_name(ct_status status);
/* Message of the most recent failure on this thread, "" if none. */
CT_API const char* ct_last_error(void);
/* Stage that failed in the most recent ct_run_stage/ct_run_pipeline call. */
CT_API const char* ct_last_stage(void);
CT_API void ct_string_free(char* s);

/* ---- configuration ---- */
typedef struct ct_config ct_config;

CT_API ct_status ct_config_new(ct_config** out);
/* Defaults < preset < config file < overrides. preset, config_path and
 * env_seed may be NULL. keys/values hold n_overrides pairs. */
CT_API ct_status ct_config_resolve(const char* preset, const char* config_path,
                                   const char* const* keys, const char* const* values,
                                   size_t n_overrides, const char* env_seed,
                                   ct_config** out);
CT_API void ct_config_free(ct_config* cfg);
CT_API ct_status ct_config_set(ct_config* cfg, const char* key, const char* value);
CT_API ct_status ct_config_get(const ct_config* cfg, const char* key, char** out);
CT_API ct_status ct_config_canonical(const ct_config* cfg, char** out);
CT_API ct_status ct_config_hash(const ct_config* cfg, char** out);
/* Newline-separated list of accepted keys. */
CT_API ct_status ct_config_keys(char** out);

/* ---- stages ---- */
/* Newline-separated stage names. */
CT_API ct_status ct_stage_names(char** out);
/* Runs one stage. Argument use per stage:
 *   gen-toy    out
 *   filter     in, model, out
 *   augment    in, out
 *   translate  in, out
 *   select     in, model, out
 *   train      in, model (optional starting point), out
 *   eval       in, model, out
 *   report     in (run directory)
 *   pipeline   out (run directory)
 * Unused arguments may be NULL. summary receives one line per stage run. */
CT_API ct_status ct_run_stage(const ct_config* cfg, const char* stage, const char* in,
                              const char* model, const char* out, char** summary);

typedef void (*ct_stage_callback)(const char* stage, const char* summary, void* user);
CT_API ct_status ct_run_pipeline(const ct_config* cfg, const char* run_dir,
                                 ct_stage_callback on_stage, void* user);

/* ---- models ---- */
typedef struct ct_model ct_model;

CT_API ct_status ct_model_load(const char* path, ct_model** out);
CT_API void ct_model_free(ct_model* model);
CT_API ct_status ct_model_dims(const ct_model* model, size_t* d_image, size_t* d_embed);
/* Unit-norm embedding written to out[0..d_embed). */
CT_API ct_status ct_model_embed_text(const ct_model* model, const char* text, double* out,
                                     size_t out_len);
CT_API ct_status ct_model_embed_image(const ct_model* model, const double* feature,
                                      size_t feature_len, double* out, size_t out_len);

/* ---- numerics ---- */
CT_API ct_status ct_energy_report(double elapsed_s, double power_w, double intensity,
                                  double* energy_kwh, double* emissions_kg);
/* Summed InfoNCE over row-major batch x dim matrices x (images) and y (texts). */
CT_API ct_status ct_info_nce(const double* x, const double* y, size_t batch, size_t dim,
                             double tau, ct_direction direction, double* out);
/* recall@1, @5, @10 and their mean for 1-based ranks. */
CT_API ct_status ct_recall_report(const size_t* ranks, size_t n, double out[4]);

#ifdef __cplusplus
}
#endif

#endif /* CAPTUNE_CAPTUNE_H_ */
