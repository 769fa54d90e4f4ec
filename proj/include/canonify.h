/* canonify - unsupervised real-to-canonical image correction.
 *
 * C interface to the canonify core: dataset generation, distortion
 * simulation, generator training, single-image correction, classifier-based
 * evaluation and the self-verification battery. All functions return a
 * canonify_status; canonify_last_error() describes the most recent failure
 * on the calling thread.
 */
#ifndef CANONIFY_H
#define CANONIFY_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CANONIFY_API __declspec(dllexport)
#else
#define CANONIFY_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum canonify_status {
    CANONIFY_OK = 0,
    CANONIFY_ERROR = 1,       /* runtime failure (I/O, corrupt file, ...) */
    CANONIFY_INVALID_ARG = 2  /* bad arguments, unknown keys, bad config */
} canonify_status;

CANONIFY_API const char* canonify_version(void);

/* Message for the last failing call on this thread; empty string if none. */
CANONIFY_API const char* canonify_last_error(void);

/* Worker threads for internal parallel loops. 0 restores the hardware
 * default. Results are bitwise independent of this setting. */
CANONIFY_API void canonify_set_threads(int threads);

/* ---- run configuration ------------------------------------------------- */

typedef struct canonify_config canonify_config;

CANONIFY_API canonify_config* canonify_config_new(void);
CANONIFY_API void canonify_config_free(canonify_config* cfg);

/* Merges an INI-style file ([section] / key = value) into cfg. */
CANONIFY_API canonify_status canonify_config_load(canonify_config* cfg, const char* path);

/* Sets one dotted key, e.g. canonify_config_set(cfg, "train.steps", "500"). */
CANONIFY_API canonify_status canonify_config_set(canonify_config* cfg, const char* key,
                                                 const char* value);
CANONIFY_API canonify_status canonify_config_get(const canonify_config* cfg, const char* key,
                                                 char* buf, size_t buflen);

/* ---- pipeline operations ------------------------------------------------ */

/* Renders the configured dataset to out_dir: one subdirectory per class plus
 * a labels.csv manifest. */
CANONIFY_API canonify_status canonify_dataset_generate(const canonify_config* cfg,
                                                       const char* out_dir);

/* Applies the configured distortions to up to `count` PNGs from in_dir,
 * writing distorted PNGs and a draws.json sidecar recording every draw. */
CANONIFY_API canonify_status canonify_distort_dir(const canonify_config* cfg, const char* in_dir,
                                                  const char* out_dir, int count, uint64_t seed);

/* Trains the generator (and discriminator when train.lambda > 0), writing a
 * checkpoint and a metrics CSV. resume_ckpt may be NULL; metrics_csv may be
 * NULL to skip the metrics file. */
CANONIFY_API canonify_status canonify_train(const canonify_config* cfg, const char* resume_ckpt,
                                            const char* out_ckpt, const char* metrics_csv);

/* Trains the evaluation classifier on canonical images. */
CANONIFY_API canonify_status canonify_train_classifier(const canonify_config* cfg,
                                                       const char* out_ckpt);

/* ---- correction --------------------------------------------------------- */

typedef struct canonify_generator canonify_generator;

CANONIFY_API canonify_status canonify_generator_open(const char* ckpt_path,
                                                     canonify_generator** out);
CANONIFY_API void canonify_generator_close(canonify_generator* gen);

/* Corrects one PNG. triptych_png may be NULL; when given, an
 * input | intermediate | corrected strip is written there. */
CANONIFY_API canonify_status canonify_generator_correct(canonify_generator* gen,
                                                        const char* in_png, const char* out_png,
                                                        const char* triptych_png);

/* ---- evaluation ---------------------------------------------------------- */

/* Top-1 accuracy on canonical / distorted / corrected validation splits.
 * generator_ckpt may be NULL to skip the corrected column (reported as -1).
 * Writes the CSV report to report_csv when non-NULL; prints a table into
 * summary when non-NULL. */
CANONIFY_API canonify_status canonify_eval(const canonify_config* cfg,
                                           const char* classifier_ckpt,
                                           const char* generator_ckpt, const char* report_csv,
                                           char* summary, size_t summary_len);

/* ---- verification -------------------------------------------------------- */

/* Runs the invariant battery (gradient checks, sampler exactness, oracle
 * equivalences, color round trips). Properties whose names contain filter
 * are run; NULL or "" runs everything. Each property reports one line
 * through the callback (or stdout when NULL). Returns the failure count in
 * *failures. */
typedef void (*canonify_line_fn)(const char* line, void* user);
CANONIFY_API canonify_status canonify_verify(const char* filter, canonify_line_fn line_cb,
                                             void* user, int* failures);

/* Reports every property name through the callback without running anything. */
CANONIFY_API canonify_status canonify_verify_names(canonify_line_fn line_cb, void* user);

#ifdef __cplusplus
}
#endif

#endif /* CANONIFY_H */
