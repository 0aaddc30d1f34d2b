// include/bargein/bargein.h

// Copyright 2026  The bargein Authors

// See ../../COPYING for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef BARGEIN_BARGEIN_H_
#define BARGEIN_BARGEIN_H_

#include <stddef.h>

#if defined(_WIN32)
#define BG_API __declspec(dllexport)
#else
#define BG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bg_status {
  BG_OK = 0,
  BG_ERR_ARGUMENT = 1,   /* null pointer, bad index, short buffer */
  BG_ERR_CONFIG = 2,     /* unknown or missing key, invalid value */
  BG_ERR_VALIDATION = 3, /* malformed input data */
  BG_ERR_IO = 4,
  BG_ERR_NUMERIC = 5,
  BG_ERR_RUNTIME = 6
} bg_status;

/* Barge-in labels. */
enum { BG_TRUE_BARGE_IN = 0, BG_FALSE_BARGE_IN = 1 };

typedef struct bg_config bg_config;
typedef struct bg_model bg_model;

BG_API const char *bg_version(void);
BG_API const char *bg_status_name(bg_status status);

/* Message of the last failed call on this thread; "" when none. */
BG_API const char *bg_last_error(void);

/* Progress messages on stderr; on by default. */
BG_API void bg_set_verbose(int verbose);

/* Subcommands and the keys each one reads. */
BG_API size_t bg_command_count(void);
BG_API const char *bg_command_name(size_t index);
BG_API const char *bg_command_help(size_t index);
BG_API size_t bg_key_count(void);
/* default_value is NULL for required keys. */
BG_API bg_status bg_key_info(size_t index, const char **name, const char **default_value,
                             const char **help);
/* 1 when key `index` applies to `command`, 0 otherwise. */
BG_API int bg_key_applies(size_t index, const char *command);

BG_API bg_status bg_config_create(bg_config **out);
BG_API void bg_config_destroy(bg_config *config);
/* Flat "key = value" file; later loads and sets override earlier values. */
BG_API bg_status bg_config_load(bg_config *config, const char *path);
BG_API bg_status bg_config_set(bg_config *config, const char *key, const char *value);
/* Effective value (explicit or default) copied into buf, NUL terminated. */
BG_API bg_status bg_config_get(const bg_config *config, const char *key, char *buf,
                               size_t buf_len);

/* Runs a subcommand into a fresh run directory. out_dir may be NULL, in
 * which case the directory is chosen under $BARGEIN_RUN_ROOT (or ./runs).
 * The chosen path is copied into run_dir when it is not NULL. */
BG_API bg_status bg_run(const char *command, const bg_config *config, const char *out_dir,
                        char *run_dir, size_t run_dir_len);

/* Any classifier checkpoint (fusion or baseline). */
BG_API bg_status bg_model_load(const char *path, bg_model **out);
BG_API void bg_model_destroy(bg_model *model);
BG_API const char *bg_model_name(const bg_model *model);
BG_API const char *bg_model_inputs(const bg_model *model);
/* Classifies one turn. prompt and context may be NULL when the model does
 * not use them; context is a label name such as "intent_0". */
BG_API bg_status bg_model_classify(const bg_model *model, const float *samples,
                                   size_t num_samples, int sample_rate, const char *prompt,
                                   const char *context, int *label);

/* Macro recall over both classes and true-class F1, both in [0, 100]. */
BG_API bg_status bg_metrics(const int *predictions, const int *truths, size_t n,
                            double *avg_recall, double *f1);

#ifdef __cplusplus
}
#endif

#endif /* BARGEIN_BARGEIN_H_ */
