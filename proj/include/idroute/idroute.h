/* Copyright 2026 The idroute Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the idroute library. Every function returns an idr_status;
 * on failure idr_last_error() describes the most recent error on the
 * calling thread. Handles are opaque and owned by the caller until freed.
 */
#ifndef IDROUTE_IDROUTE_H_
#define IDROUTE_IDROUTE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(IDR_BUILDING_LIBRARY)
#define IDR_API __attribute__((visibility("default")))
#else
#define IDR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values 1..25 mirror the library's error categories. */
typedef enum idr_status {
  IDR_OK = 0,
  IDR_ERR_DIMENSION = 1,
  IDR_ERR_DEGENERATE = 2,
  IDR_ERR_ALL_BLOCKED = 3,
  IDR_ERR_CHANNEL_PARITY = 4,
  IDR_ERR_RANK = 5,
  IDR_ERR_DETERMINISM = 6,
  IDR_ERR_NON_FINITE = 7,
  IDR_ERR_ARITY = 8,
  IDR_ERR_PROJECTION_SPACE = 9,
  IDR_ERR_PARAMETER = 10,
  IDR_ERR_MASK_CONSISTENCY = 11,
  IDR_ERR_CHUNKING = 12,
  IDR_ERR_ORDERING = 13,
  IDR_ERR_TEACHER_FORCING = 14,
  IDR_ERR_SCHEDULE = 15,
  IDR_ERR_STEP = 16,
  IDR_ERR_CONTRACT = 17,
  IDR_ERR_GENERATION = 18,
  IDR_ERR_LAYOUT = 19,
  IDR_ERR_FORMAT = 20,
  IDR_ERR_CORRUPTION = 21,
  IDR_ERR_SCHEMA = 22,
  IDR_ERR_EVALUATION = 23,
  IDR_ERR_CONFIG = 24,
  IDR_ERR_IO = 25,
  IDR_ERR_INVALID_ARGUMENT = 100, /* null handle or pointer */
  IDR_ERR_INTERNAL = 101
} idr_status;

IDR_API const char* idr_version(void);
IDR_API const char* idr_status_string(idr_status status);
/* Message of the last failed call on this thread; "" if none. */
IDR_API const char* idr_last_error(void);

/* ---- synthetic data ---------------------------------------------------- */

typedef struct idr_gen_options {
  uint64_t subjects;
  uint64_t videos_per_subject;
  uint64_t frames;
  uint64_t tokens_per_frame;
  uint64_t components;
  uint64_t channels;
  double noise;
  uint64_t seed;
} idr_gen_options;

IDR_API void idr_gen_options_default(idr_gen_options* options);
/* Generates a dataset and writes it to `path`. */
IDR_API idr_status idr_generate_dataset(const idr_gen_options* options, const char* path);

/* ---- configuration ----------------------------------------------------- */

typedef struct idr_config idr_config;

/* profile: "desk" or "paper". */
IDR_API idr_status idr_config_create(const char* profile, idr_config** out);
IDR_API idr_status idr_config_load(const char* path, idr_config** out);
IDR_API idr_status idr_config_set(idr_config* config, const char* key, const char* value);
/* Copies the `key = value` text form into buf (NUL-terminated if it fits);
 * *needed receives the length including the terminator. */
IDR_API idr_status idr_config_to_text(const idr_config* config, char* buf, size_t capacity, size_t* needed);
IDR_API void idr_config_free(idr_config* config);

/* ---- training ---------------------------------------------------------- */

typedef struct idr_trainer idr_trainer;

typedef struct idr_step_losses {
  double l_diff;
  double l_route;
  double l_consistency;
  double l_total;
  uint64_t timestep;
  int used_null;
} idr_step_losses;

typedef void (*idr_progress_fn)(uint64_t step, const idr_step_losses* losses, void* user);

IDR_API idr_status idr_trainer_create(const idr_config* config, const char* data_path, idr_trainer** out);
/* Resumes from a checkpoint. `mode` may be NULL to keep the stored mode; a
 * different mode keeps the weights but restarts the optimizer. A nonzero
 * `steps` replaces the stored step target. */
IDR_API idr_status idr_trainer_resume(const char* checkpoint_path, const char* data_path, const char* mode,
                                      uint64_t steps, idr_trainer** out);
IDR_API idr_status idr_trainer_step(idr_trainer* trainer, idr_step_losses* out);
/* Trains to the step target, writing metrics.csv and checkpoint.lvck under
 * out_dir. `progress` may be NULL. */
IDR_API idr_status idr_trainer_train(idr_trainer* trainer, const char* out_dir, idr_progress_fn progress,
                                     void* user);
IDR_API idr_status idr_trainer_save(const idr_trainer* trainer, const char* path);
IDR_API uint64_t idr_trainer_steps_done(const idr_trainer* trainer);
IDR_API void idr_trainer_free(idr_trainer* trainer);

/* ---- inference and evaluation ------------------------------------------ */

typedef struct idr_model idr_model;

typedef struct idr_sample_options {
  uint64_t seed;
  uint64_t steps;        /* DDIM steps; 0 uses the config value */
  double cfg_scale;
  uint64_t chunks;       /* 0 uses the config value */
  int apply_tam;
  uint64_t subject_seed; /* identity to condition on */
} idr_sample_options;

typedef struct idr_metrics {
  double routing_accuracy;
  double mean_route_loss;
  double mean_diff_loss;
  double temporal_deviation_before;
  double temporal_deviation_after;
  uint64_t samples;
} idr_metrics;

IDR_API void idr_sample_options_default(idr_sample_options* options);
IDR_API idr_status idr_model_load(const char* checkpoint_path, idr_model** out);
/* Samples one video and writes it as a one-record dataset file. */
IDR_API idr_status idr_model_sample(const idr_model* model, const idr_sample_options* options, const char* out_path);
/* `report_path` may be NULL; otherwise a CSV header and row are written. */
IDR_API idr_status idr_model_evaluate(const idr_model* model, const char* data_path, const char* report_path,
                                      idr_metrics* out);
IDR_API void idr_model_free(idr_model* model);

/* ---- gradient checks --------------------------------------------------- */

typedef struct idr_gradcheck_entry {
  const char* module;
  const char* check;
  double max_error;
  uint64_t coordinates;
  int passed;
} idr_gradcheck_entry;

typedef void (*idr_gradcheck_fn)(const idr_gradcheck_entry* entry, void* user);

/* module: all, kernel, router, tam or denoiser. `eps` is the central
 * difference step. *all_passed is 1 when every check is within 1e-5. */
IDR_API idr_status idr_gradcheck(const char* module, double eps, idr_gradcheck_fn report, void* user,
                                 int* all_passed);

#ifdef __cplusplus
}
#endif

#endif /* IDROUTE_IDROUTE_H_ */
