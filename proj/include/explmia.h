/* C API for the explmia shared library: explanation-leakage membership
 * inference auditing on small self-trained classifiers.
 *
 * All functions return EXPLMIA_OK on success. On failure the thread-local
 * error message is available via explmia_last_error(). Handles are opaque
 * and must be released with their matching _free call. */

#ifndef EXPLMIA_H
#define EXPLMIA_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define EXPLMIA_OK 0
#define EXPLMIA_ERR_CONFIG 2
#define EXPLMIA_ERR_RUNTIME 3

typedef struct explmia_config_s* explmia_config;

const char* explmia_version(void);

/* Last error message for the calling thread; empty string if none. */
const char* explmia_last_error(void);

/* Load an experiment config from a key = value file. */
int explmia_config_load(const char* path, explmia_config* out);

/* Config with built-in defaults, for override-only use. */
int explmia_config_default(explmia_config* out);

/* Apply a single key = value override. */
int explmia_config_set(explmia_config cfg, const char* key, const char* value);

void explmia_config_free(explmia_config cfg);

/* Generate the configured dataset and write it as CSV. */
int explmia_gen_data(explmia_config cfg, const char* out_csv);

/* Train one model on half of the configured dataset and report accuracy on
 * both halves. Any output pointer may be NULL. */
int explmia_train_eval(explmia_config cfg, double* train_accuracy, double* test_accuracy);

/* Run the full shadow-model attack experiment into the configured output
 * directory (matrices, per-run ROC files, report.json, MANIFEST). */
int explmia_attack(explmia_config cfg);

/* Recompute attacks and the report from the matrices persisted in run_dir,
 * writing results into out_dir. */
int explmia_replay(const char* run_dir, const char* out_dir);

/* Run the attack across the privacy grid epsilon in {0.5, 1, 2, 8, inf},
 * one subdirectory per setting. */
int explmia_dp_sweep(explmia_config cfg);

/* Human-readable summary of a persisted report.json. The returned buffer is
 * owned by the library and valid until the next call on the same thread. */
int explmia_report_text(const char* report_json_path, const char** out_text);

/* Privacy accounting for the Poisson-subsampled Gaussian mechanism. */
int explmia_account_epsilon(double sigma, double q, int steps, double delta, double* out_epsilon);
int explmia_calibrate_sigma(double target_epsilon, double q, int steps, double delta,
                            double* out_sigma);

#ifdef __cplusplus
}
#endif

#endif /* EXPLMIA_H */
