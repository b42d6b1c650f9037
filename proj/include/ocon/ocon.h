/*
 * ocon.h - C interface to the OCON/ACON face verification library.
 *
 * Every object is an opaque handle created by a *_create/_train/_load call
 * and released with the matching *_free. Functions return an ocon_status;
 * on failure ocon_last_error() describes the problem for the calling thread.
 * Strings returned through char** are heap-allocated and must be released
 * with ocon_string_free().
 */
#ifndef OCON_OCON_H
#define OCON_OCON_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef OCON_BUILDING_LIBRARY
#    define OCON_API __declspec(dllexport)
#  else
#    define OCON_API __declspec(dllimport)
#  endif
#else
#  define OCON_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ocon_status {
  OCON_OK = 0,
  OCON_ERR_INVALID_ARGUMENT = 1,
  OCON_ERR_INVALID_CONFIG = 2,
  OCON_ERR_UNSUPPORTED_FORMAT = 3,
  OCON_ERR_TRUNCATED_IMAGE = 4,
  OCON_ERR_UNSUPPORTED_DEPTH = 5,
  OCON_ERR_FILE = 6,
  OCON_ERR_MANIFEST_SYNTAX = 7,
  OCON_ERR_NOT_SYMMETRIC = 8,
  OCON_ERR_NO_CONVERGENCE = 9,
  OCON_ERR_DIMENSION_MISMATCH = 10,
  OCON_ERR_INSUFFICIENT_DATA = 11,
  OCON_ERR_DIVERGED = 12,
  OCON_ERR_EMPTY_CLASS = 13,
  OCON_ERR_NO_COUNTEREXAMPLES = 14,
  OCON_ERR_INSUFFICIENT_CLASSES = 15,
  OCON_ERR_STORE = 16,
  OCON_ERR_CHECKSUM_MISMATCH = 17,
  OCON_ERR_WEIGHTS_UNAVAILABLE = 18,
  OCON_ERR_UNKNOWN_CLASS = 19,
  OCON_ERR_PROTOCOL = 20,
  OCON_ERR_PARSE = 21,
  /* Some classes failed; the returned handle is valid and holds the rest. */
  OCON_ERR_PARTIAL = 22,
  OCON_ERR_INTERNAL = 23
} ocon_status;

enum { OCON_ROLE_TRAIN = 0, OCON_ROLE_TEST = 1 };
enum { OCON_MODE_OCON = 0, OCON_MODE_ACON = 1 };
enum { OCON_ALLOC_ROUND_ROBIN = 0, OCON_ALLOC_LARGEST_FIRST = 1 };
enum { OCON_FORMAT_TABLE = 0, OCON_FORMAT_CSV = 1 };

OCON_API const char* ocon_status_name(ocon_status status);
OCON_API const char* ocon_last_error(void);
OCON_API void ocon_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

typedef struct ocon_dataset ocon_dataset;

OCON_API ocon_status ocon_dataset_synthesize(int classes, int train_per_class, int test_per_class,
                                             size_t side, uint64_t seed, ocon_dataset** out);
/* downsample: integer block-average factor, 1 keeps full resolution. */
OCON_API ocon_status ocon_dataset_load(const char* manifest_path, size_t downsample, ocon_dataset** out);
/* Writes one PGM per sample and manifest.tsv into dir. */
OCON_API ocon_status ocon_dataset_write(const ocon_dataset* dataset, const char* dir);
OCON_API size_t ocon_dataset_count(const ocon_dataset* dataset, int role);
/* Distinct training class ids, ascending. Returns the total count; writes at
 * most capacity ids. */
OCON_API size_t ocon_dataset_class_ids(const ocon_dataset* dataset, int* ids, size_t capacity);
OCON_API void ocon_dataset_free(ocon_dataset* dataset);

/* ---- eigenspace -------------------------------------------------------- */

typedef struct ocon_eigenspace ocon_eigenspace;

/* PCA over the dataset's training images; components defaults to 40 when 0. */
OCON_API ocon_status ocon_eigenspace_compute(const ocon_dataset* dataset, size_t components,
                                             ocon_eigenspace** out);
OCON_API ocon_status ocon_eigenspace_save(const ocon_eigenspace* space, const char* path);
OCON_API ocon_status ocon_eigenspace_load(const char* path, ocon_eigenspace** out);
OCON_API size_t ocon_eigenspace_dim(const ocon_eigenspace* space);
OCON_API size_t ocon_eigenspace_components(const ocon_eigenspace* space);
OCON_API ocon_status ocon_eigenspace_project(const ocon_eigenspace* space, const double* v, size_t len,
                                             double* coeffs, size_t coeffs_len);
OCON_API void ocon_eigenspace_free(ocon_eigenspace* space);

/* ---- training ---------------------------------------------------------- */

typedef struct ocon_train_options {
  double learning_rate;
  double momentum;
  double goal;
  uint64_t max_epochs;
  uint64_t seed;
  size_t hidden;
  size_t workers;        /* OCON only */
  int allocation;        /* OCON_ALLOC_*, OCON only */
  size_t max_negatives;  /* 0 keeps every negative; OCON only */
} ocon_train_options;

/* Library defaults: goal 1e-6, 700000 epochs, lr 0.05, momentum 0.9,
 * hidden 20 (OCON) or 60 (ACON), one worker, round robin. */
OCON_API void ocon_train_options_init(ocon_train_options* options, int mode);

typedef struct ocon_ensemble ocon_ensemble;
typedef struct ocon_acon ocon_acon;

/* One subnet per training class on a worker pool. Returns OCON_ERR_PARTIAL
 * with a valid *out when some classes failed. */
OCON_API ocon_status ocon_ensemble_train(const ocon_dataset* dataset, const ocon_eigenspace* space,
                                         const ocon_train_options* options, ocon_ensemble** out);
OCON_API size_t ocon_ensemble_size(const ocon_ensemble* ensemble);
OCON_API size_t ocon_ensemble_class_ids(const ocon_ensemble* ensemble, int* ids, size_t capacity);
OCON_API size_t ocon_ensemble_failure_count(const ocon_ensemble* ensemble);
/* *message stays valid for the ensemble's lifetime. */
OCON_API ocon_status ocon_ensemble_failure(const ocon_ensemble* ensemble, size_t index, int* class_id,
                                           const char** message);
/* Summed dispatch wait over summed compute time for the training run. */
OCON_API double ocon_ensemble_overhead_ratio(const ocon_ensemble* ensemble);
OCON_API double ocon_ensemble_wall_seconds(const ocon_ensemble* ensemble);
/* Writes class_<id>.wts to every root. Succeeds while at least one replica
 * per class was written; replica failures are described in *warnings when
 * warnings is non-null (set to NULL when there are none). */
OCON_API ocon_status ocon_ensemble_persist(const ocon_ensemble* ensemble, const char* const* roots,
                                           size_t n_roots, char** warnings);
/* Loads each class from the first valid replica. Classes without a valid
 * replica are recorded as failures and OCON_ERR_PARTIAL is returned. */
OCON_API ocon_status ocon_ensemble_load(const int* class_ids, size_t n_classes, const char* const* roots,
                                        size_t n_roots, ocon_ensemble** out);
OCON_API ocon_status ocon_ensemble_trace_csv(const ocon_ensemble* ensemble, int class_id, char** out);
OCON_API ocon_status ocon_ensemble_training_summary(const ocon_ensemble* ensemble, int format, char** out);
/* scores receives one value per subnet in ascending class order. */
OCON_API ocon_status ocon_ensemble_classify(const ocon_ensemble* ensemble, const double* features, size_t len,
                                            int* class_id, double* scores, size_t scores_len);
OCON_API void ocon_ensemble_free(ocon_ensemble* ensemble);

OCON_API ocon_status ocon_acon_train(const ocon_dataset* dataset, const ocon_eigenspace* space,
                                     const ocon_train_options* options, ocon_acon** out);
OCON_API ocon_status ocon_acon_persist(const ocon_acon* model, const char* const* roots, size_t n_roots,
                                       char** warnings);
OCON_API ocon_status ocon_acon_load(const char* const* roots, size_t n_roots, ocon_acon** out);
OCON_API ocon_status ocon_acon_trace_csv(const ocon_acon* model, char** out);
OCON_API ocon_status ocon_acon_training_summary(const ocon_acon* model, int format, char** out);
OCON_API ocon_status ocon_acon_classify(const ocon_acon* model, const double* features, size_t len,
                                        int* class_id, double* scores, size_t scores_len);
OCON_API void ocon_acon_free(ocon_acon* model);

/* ---- evaluation -------------------------------------------------------- */

typedef struct ocon_protocol {
  size_t n_pos;      /* positives per class, default 10 */
  size_t n_neg;      /* negatives per class, default 10 */
  uint64_t seed;     /* negative selection seed, default 1 */
  double threshold;  /* OCON accept threshold, default 0.5 */
  int role;          /* which split to evaluate, default OCON_ROLE_TEST */
} ocon_protocol;

OCON_API void ocon_protocol_init(ocon_protocol* protocol);

typedef struct ocon_report ocon_report;

/* Evaluates every training class of the dataset. Classes whose subnet is
 * missing are marked errored and OCON_ERR_PARTIAL is returned with a valid
 * report. */
OCON_API ocon_status ocon_evaluate_ocon(const ocon_ensemble* ensemble, const ocon_dataset* dataset,
                                        const ocon_eigenspace* space, const ocon_protocol* protocol,
                                        ocon_report** out);
OCON_API ocon_status ocon_evaluate_acon(const ocon_acon* model, const ocon_dataset* dataset,
                                        const ocon_eigenspace* space, const ocon_protocol* protocol,
                                        ocon_report** out);
OCON_API ocon_status ocon_report_render(const ocon_report* report, int format, char** out);
OCON_API double ocon_report_average(const ocon_report* report);
OCON_API size_t ocon_report_error_count(const ocon_report* report);
OCON_API void ocon_report_free(ocon_report* report);

#ifdef __cplusplus
}
#endif

#endif /* OCON_OCON_H */
