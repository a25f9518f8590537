/* Copyright 2026 The mosseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

/* C interface of libmosseg: semi-supervised mask propagation with a
 * three-tier attention memory.
 *
 * Conventions
 *   - Every fallible call returns mosseg_status; MOSSEG_OK is 0.
 *   - On failure mosseg_last_error() describes the problem. The string is
 *     thread-local and valid until the next failing call on that thread.
 *   - Handles are opaque. Objects returned through an out-pointer are owned
 *     by the caller and released with the matching *_destroy (NULL is a
 *     no-op). Borrowed pointers are documented as such.
 *   - Frame positions are 0-based indices into a loaded sequence. Frame
 *     numbers are the decimal file names on disk. */

#ifndef MOSSEG_MOSSEG_H_
#define MOSSEG_MOSSEG_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MOSSEG_API __declspec(dllexport)
#else
#define MOSSEG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mosseg_status {
  MOSSEG_OK = 0,
  MOSSEG_ERR_INVALID_ARGUMENT = 1,
  MOSSEG_ERR_INVALID_STATE = 2,
  MOSSEG_ERR_NOT_FOUND = 3,
  MOSSEG_ERR_IO = 4,
  MOSSEG_ERR_FORMAT = 5,
  MOSSEG_ERR_INTERNAL = 6
} mosseg_status;

typedef enum mosseg_direction {
  MOSSEG_FORWARD = 0,
  MOSSEG_BACKWARD = 1,
  MOSSEG_BOTH = 2
} mosseg_direction;

typedef enum mosseg_report_format {
  MOSSEG_REPORT_TABLE = 0,  /* per-frame table with mean(std) footer */
  MOSSEG_REPORT_RECORD = 1  /* one key=value line */
} mosseg_report_format;

typedef struct mosseg_buffer mosseg_buffer;
typedef struct mosseg_config mosseg_config;
typedef struct mosseg_sequence mosseg_sequence;
typedef struct mosseg_mask mosseg_mask;
typedef struct mosseg_result mosseg_result;
typedef struct mosseg_session mosseg_session;
typedef struct mosseg_report mosseg_report;

MOSSEG_API const char* mosseg_version(void);
MOSSEG_API const char* mosseg_last_error(void);
/* Stable machine-readable name, e.g. "invalid_argument". */
MOSSEG_API const char* mosseg_status_name(mosseg_status status);

/* ---- buffers ---------------------------------------------------------- */

MOSSEG_API const uint8_t* mosseg_buffer_data(const mosseg_buffer* buffer);
MOSSEG_API size_t mosseg_buffer_size(const mosseg_buffer* buffer);
MOSSEG_API void mosseg_buffer_destroy(mosseg_buffer* buffer);

/* ---- configuration ---------------------------------------------------- */

MOSSEG_API mosseg_status mosseg_config_create(mosseg_config** out);
/* key=value file; adapter paths resolve against the file's directory. */
MOSSEG_API mosseg_status mosseg_config_load(const char* path, mosseg_config** out);
MOSSEG_API mosseg_status mosseg_config_parse(const char* text, mosseg_config** out);
MOSSEG_API mosseg_status mosseg_config_clone(const mosseg_config* cfg, mosseg_config** out);
/* Sets one key and revalidates; on failure cfg is unchanged. */
MOSSEG_API mosseg_status mosseg_config_set(mosseg_config* cfg, const char* key,
                                           const char* value);
MOSSEG_API mosseg_status mosseg_config_format(const mosseg_config* cfg, mosseg_buffer** out);
MOSSEG_API mosseg_direction mosseg_config_direction(const mosseg_config* cfg);
MOSSEG_API void mosseg_config_destroy(mosseg_config* cfg);

/* ---- masks ------------------------------------------------------------ */

/* labels: height * width row-major object ids (0 = background). */
MOSSEG_API mosseg_status mosseg_mask_create(int height, int width, const uint8_t* labels,
                                            mosseg_mask** out);
MOSSEG_API mosseg_status mosseg_mask_decode_png(const uint8_t* data, size_t size,
                                                mosseg_mask** out);
MOSSEG_API mosseg_status mosseg_mask_encode_png(const mosseg_mask* mask, mosseg_buffer** out);
MOSSEG_API mosseg_status mosseg_mask_read(const char* path, mosseg_mask** out);
MOSSEG_API mosseg_status mosseg_mask_write(const mosseg_mask* mask, const char* path);
MOSSEG_API int mosseg_mask_height(const mosseg_mask* mask);
MOSSEG_API int mosseg_mask_width(const mosseg_mask* mask);
/* Borrowed; valid while the mask lives. */
MOSSEG_API const uint8_t* mosseg_mask_labels(const mosseg_mask* mask);
MOSSEG_API int mosseg_mask_equal(const mosseg_mask* a, const mosseg_mask* b);
MOSSEG_API void mosseg_mask_destroy(mosseg_mask* mask);

/* ---- sequences -------------------------------------------------------- */

/* Loads <dir>/frames, <dir>/masks and <dir>/gt at the configured resolution. */
MOSSEG_API mosseg_status mosseg_sequence_load(const char* dir, const mosseg_config* cfg,
                                              mosseg_sequence** out);
MOSSEG_API int mosseg_sequence_frame_count(const mosseg_sequence* seq);
/* Dimensions on disk. */
MOSSEG_API int mosseg_sequence_height(const mosseg_sequence* seq);
MOSSEG_API int mosseg_sequence_width(const mosseg_sequence* seq);
MOSSEG_API int mosseg_sequence_frame_number(const mosseg_sequence* seq, int position);
/* -1 when the number is not part of the sequence. */
MOSSEG_API int mosseg_sequence_position(const mosseg_sequence* seq, int frame_number);
MOSSEG_API int mosseg_sequence_has_annotation(const mosseg_sequence* seq, int position);
MOSSEG_API int mosseg_sequence_has_ground_truth(const mosseg_sequence* seq);
/* Replaces (or adds) the annotation at a position; dims must match. */
MOSSEG_API mosseg_status mosseg_sequence_set_annotation(mosseg_sequence* seq, int position,
                                                        const mosseg_mask* mask);
MOSSEG_API void mosseg_sequence_destroy(mosseg_sequence* seq);

/* ---- propagation ------------------------------------------------------ */

/* Called once per emitted frame, in emission order, from the calling thread.
 * mask is borrowed for the duration of the call. */
typedef void (*mosseg_frame_callback)(void* user, int position, const mosseg_mask* mask);

/* Propagates the annotation at annotated_position in the configured
 * direction(s). Output masks are at the sequence's on-disk resolution. */
MOSSEG_API mosseg_status mosseg_propagate(const mosseg_sequence* seq, int annotated_position,
                                          const mosseg_config* cfg,
                                          mosseg_frame_callback on_frame, void* user,
                                          mosseg_result** out);
MOSSEG_API int mosseg_result_frame_count(const mosseg_result* result);
/* Borrowed; NULL for frames the run did not cover. */
MOSSEG_API const mosseg_mask* mosseg_result_mask(const mosseg_result* result, int position);
MOSSEG_API int mosseg_result_event_count(const mosseg_result* result);
MOSSEG_API mosseg_status mosseg_result_event(const mosseg_result* result, int index,
                                             int* position, int* prototypes);
/* Masks, consolidation.log, run.cfg and run.info. */
MOSSEG_API mosseg_status mosseg_result_write(const mosseg_result* result,
                                             const mosseg_sequence* seq,
                                             const mosseg_config* cfg, const char* dir);
MOSSEG_API void mosseg_result_destroy(mosseg_result* result);

/* ---- step-wise sessions ----------------------------------------------- */

/* step is +1 (forward) or -1 (backward). */
MOSSEG_API mosseg_status mosseg_session_create(const mosseg_sequence* seq,
                                               int annotated_position, int step,
                                               const mosseg_config* cfg,
                                               mosseg_session** out);
/* Position the next mosseg_session_step will consume. */
MOSSEG_API int mosseg_session_next_position(const mosseg_session* session);
/* Consumes the next frame of seq; *out is at the working resolution. */
MOSSEG_API mosseg_status mosseg_session_step(mosseg_session* session,
                                             const mosseg_sequence* seq, mosseg_mask** out);
MOSSEG_API mosseg_status mosseg_session_save(const mosseg_session* session, const char* path);
MOSSEG_API mosseg_status mosseg_session_load(const char* path, mosseg_session** out);
MOSSEG_API void mosseg_session_destroy(mosseg_session* session);

/* ---- evaluation ------------------------------------------------------- */

/* gt_dir: mask directory or sequence folder with gt/. Uses the config's
 * metric tolerance when cfg is non-NULL and sets one. */
MOSSEG_API mosseg_status mosseg_evaluate_dirs(const char* pred_dir, const char* gt_dir,
                                              const mosseg_config* cfg, int include_annotated,
                                              mosseg_report** out);
/* Scores a result against the sequence's ground truth, excluding the
 * annotated frame. */
MOSSEG_API mosseg_status mosseg_evaluate_result(const mosseg_result* result,
                                                const mosseg_sequence* seq,
                                                const mosseg_config* cfg, mosseg_report** out);
MOSSEG_API int mosseg_report_frame_count(const mosseg_report* report);
MOSSEG_API mosseg_status mosseg_report_frame(const mosseg_report* report, int index,
                                             int* frame_number, double* j, double* f,
                                             double* jf);
MOSSEG_API mosseg_status mosseg_report_summary(const mosseg_report* report, double* j_mean,
                                               double* j_std, double* f_mean, double* f_std,
                                               double* jf_mean, double* jf_std);
MOSSEG_API mosseg_status mosseg_report_render(const mosseg_report* report,
                                              mosseg_report_format format,
                                              mosseg_buffer** out);
MOSSEG_API void mosseg_report_destroy(mosseg_report* report);

/* ---- synthetic data and acceptance suite ------------------------------ */

/* Generates the corpus described by a synth spec file. split != 0 lays the
 * sequences out as train/val/test in a 3:1:1 ratio. */
MOSSEG_API mosseg_status mosseg_synth(const char* spec_path, const char* out_dir, int split);

typedef void (*mosseg_bench_callback)(void* user, const char* criterion, int passed,
                                      const char* detail);

/* Runs the acceptance suite. cli_path (optional) is an executable used for
 * the end-to-end pipeline criterion; scratch_dir (optional) holds its files.
 * *failed receives the number of failing criteria. */
MOSSEG_API mosseg_status mosseg_bench_run(const char* cli_path, const char* scratch_dir,
                                          mosseg_bench_callback on_result, void* user,
                                          int* failed);

/* ---- annotation service ---------------------------------------------- */

/* Runs the HTTP service on host:port with sequences persisted under
 * data_dir. Blocks until SIGINT or SIGTERM. max_upload_mb bounds request
 * bodies (0 = 256). */
MOSSEG_API mosseg_status mosseg_serve(const char* host, int port, const char* data_dir,
                                      size_t max_upload_mb);

#ifdef __cplusplus
}
#endif

#endif /* MOSSEG_MOSSEG_H_ */
