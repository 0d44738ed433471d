// SPDX-License-Identifier: Apache-2.0
//
// mimo-jscc: deep joint source-channel coded image transmission over MIMO
// Copyright (C) 2026 mimo-jscc developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

/* C interface to the mimo-jscc library. All objects are opaque handles; every fallible call
 * returns an mjscc_status and leaves a thread-local message for mjscc_last_error(). */
#ifndef MJSCC_H
#define MJSCC_H

#include <stddef.h>
#include <stdint.h>

#if defined(MJSCC_BUILDING_LIBRARY)
#define MJSCC_API __attribute__((visibility("default")))
#else
#define MJSCC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mjscc_status
{
    MJSCC_OK = 0,
    MJSCC_ERR_INVALID_ARGUMENT = 1,
    MJSCC_ERR_IO = 2,
    MJSCC_ERR_FORMAT = 3,
    MJSCC_ERR_RANK_DEFICIENT = 4,
    MJSCC_ERR_NON_FINITE = 5,
    MJSCC_ERR_BUFFER_TOO_SMALL = 6,
    MJSCC_ERR_INTERNAL = 7
} mjscc_status;

typedef struct mjscc_config mjscc_config;
typedef struct mjscc_pipeline mjscc_pipeline;

typedef void (*mjscc_log_fn)(const char *message, void *user);

MJSCC_API const char *mjscc_version(void);
MJSCC_API const char *mjscc_status_name(mjscc_status status);
/* Message of the last failed call on this thread; "" after a success. */
MJSCC_API const char *mjscc_last_error(void);

/* ---- configuration ---- */
MJSCC_API mjscc_status mjscc_config_default(mjscc_config **out);
MJSCC_API mjscc_status mjscc_config_load(const char *path, mjscc_config **out);
MJSCC_API mjscc_status mjscc_config_parse(const char *text, mjscc_config **out);
MJSCC_API void mjscc_config_free(mjscc_config *config);
MJSCC_API mjscc_status mjscc_config_set_seeds(mjscc_config *config, const uint64_t *seeds, size_t count);
MJSCC_API size_t mjscc_config_seed_count(const mjscc_config *config);
MJSCC_API mjscc_status mjscc_config_seeds(const mjscc_config *config, uint64_t *out, size_t capacity);
/* 12 hex digits plus terminator: buf must hold at least 13 bytes. */
MJSCC_API mjscc_status mjscc_config_hash(const mjscc_config *config, char *buf, size_t size);
/* Canonical text. *needed receives the size including the terminator; buf = NULL with size 0 only
 * queries it. */
MJSCC_API mjscc_status mjscc_config_serialize(const mjscc_config *config, char *buf, size_t size, size_t *needed);

/* ---- pipeline stages ----
 * Artifacts are cached under <out_dir>/artifacts/<config hash>/. Each stage replaces the
 * pipeline's summary text and appends to its list of broken invariants. */
MJSCC_API mjscc_status mjscc_pipeline_create(const mjscc_config *config, const char *out_dir, mjscc_log_fn log,
                                             void *user, mjscc_pipeline **out);
MJSCC_API void mjscc_pipeline_free(mjscc_pipeline *pipeline);

MJSCC_API mjscc_status mjscc_fit_quantizer(mjscc_pipeline *pipeline);
MJSCC_API mjscc_status mjscc_train_codec(mjscc_pipeline *pipeline);
MJSCC_API mjscc_status mjscc_label(mjscc_pipeline *pipeline);
MJSCC_API mjscc_status mjscc_train_evaluator(mjscc_pipeline *pipeline);
MJSCC_API mjscc_status mjscc_calibrate(mjscc_pipeline *pipeline);
/* Runs figure 4, 5 or 6 for every configured seed and writes <out_dir>/fig<figure>.csv. */
MJSCC_API mjscc_status mjscc_sweep(mjscc_pipeline *pipeline, int figure);
/* Aggregates every fig*.csv under out_dir into <out_dir>/report.csv. Needs no pipeline. */
MJSCC_API mjscc_status mjscc_report(const char *out_dir, char *summary, size_t size, size_t *needed,
                                    size_t *violations);
/* Re-runs one seed of one figure from the config archived under the hash and writes the rows. */
MJSCC_API mjscc_status mjscc_regenerate(const char *out_dir, const char *config_hash, int figure, uint64_t seed,
                                        const char *csv_path);

MJSCC_API const char *mjscc_pipeline_summary(const mjscc_pipeline *pipeline);
MJSCC_API size_t mjscc_pipeline_violation_count(const mjscc_pipeline *pipeline);
MJSCC_API const char *mjscc_pipeline_violation(const mjscc_pipeline *pipeline, size_t index);

/* ---- metrics ---- */
/* Pixels in [0,1]; PSNR on the 255 scale, capped at 60 dB. */
MJSCC_API mjscc_status mjscc_psnr(const double *reference, const double *reconstruction, size_t n, double *out_db);
MJSCC_API mjscc_status mjscc_success_ratio(const double *psnr_db, size_t n, double threshold_db, double *out);

#ifdef __cplusplus
}
#endif

#endif
