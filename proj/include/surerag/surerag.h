#ifndef SURERAG_H
#define SURERAG_H

/*
 * C interface to the selective-verification toolkit. Objects are opaque
 * handles; every fallible call returns an sr_status, and the message of the
 * most recent failure on the calling thread is available from
 * sr_last_error().
 *
 * Label codes: 0 Supported, 1 Refuted, 2 Insufficient.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SURERAG_BUILDING_LIBRARY)
#    define SURERAG_API __declspec(dllexport)
#  else
#    define SURERAG_API __declspec(dllimport)
#  endif
#else
#  define SURERAG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sr_status {
    SR_OK = 0,
    SR_INVALID_ARGUMENT = 1,
    SR_PARSE = 2,
    SR_INVARIANT = 3,
    SR_IO = 4,
    SR_MISSING_PAIR = 5,
    SR_STAGE = 6,
    SR_INTERNAL = 7
} sr_status;

enum { SR_SUPPORTED = 0, SR_REFUTED = 1, SR_INSUFFICIENT = 2 };

typedef struct sr_config sr_config;
typedef struct sr_examples sr_examples;
typedef struct sr_model sr_model;

typedef struct sr_decision {
    double pi[3];
    int label;
    double u;
    double s;
    int answer; /* 1 answer, 0 abstain */
} sr_decision;

SURERAG_API const char* sr_version(void);
SURERAG_API const char* sr_status_string(sr_status status);
/* Empty string when the last call on this thread succeeded. */
SURERAG_API const char* sr_last_error(void);

/* Run configuration: defaults, or a flat "key = value" file. */
SURERAG_API sr_status sr_config_create(sr_config** out);
SURERAG_API sr_status sr_config_load(const char* path, sr_config** out);
SURERAG_API sr_status sr_config_set(sr_config* config, const char* key, const char* value);
/* Copies the value into buf (NUL-terminated, truncated to cap); *needed
 * receives the size required including the terminator. */
SURERAG_API sr_status sr_config_get(const sr_config* config, const char* key, char* buf, size_t cap,
                                    size_t* needed);
SURERAG_API sr_status sr_config_write(const sr_config* config, const char* path);
SURERAG_API void sr_config_destroy(sr_config* config);

/* stage: build, score, features, train, calibrate, tune, evaluate, diagnose */
SURERAG_API sr_status sr_run_stage(const sr_config* config, const char* stage);
SURERAG_API sr_status sr_run_pipeline(const sr_config* config);
SURERAG_API sr_status sr_run_multi_seed(const sr_config* config);

/* Writes n scripted source questions to a source file. */
SURERAG_API sr_status sr_write_synthetic_sources(const char* path, size_t n, uint64_t seed);

SURERAG_API sr_status sr_examples_read(const char* path, sr_examples** out);
SURERAG_API size_t sr_examples_count(const sr_examples* examples);
SURERAG_API sr_status sr_examples_prefix_not_rate(const sr_examples* examples, double* out);
SURERAG_API void sr_examples_destroy(sr_examples* examples);

SURERAG_API sr_status sr_model_load(const char* path, sr_model** out);
SURERAG_API size_t sr_model_feature_count(const sr_model* model);
/* Copies the name of feature i into buf like sr_config_get. */
SURERAG_API sr_status sr_model_feature_name(const sr_model* model, size_t i, char* buf, size_t cap, size_t* needed);
/* features holds sr_model_feature_count values in the model's order. */
SURERAG_API sr_status sr_model_predict(const sr_model* model, const double* features, size_t n, int calibrated,
                                       double pi_out[3]);
SURERAG_API sr_status sr_model_decide(const sr_model* model, const double* features, size_t n, int calibrated,
                                      sr_decision* out);
SURERAG_API void sr_model_destroy(sr_model* model);

/* Answer iff argmax(pi) is Supported and pi[0] - beta * u >= tau. */
SURERAG_API sr_status sr_decide(const double pi[3], double u, double beta, double tau, sr_decision* out);

SURERAG_API sr_status sr_surrogate_distribution(const char* claim, const char* passage, double sharpness,
                                                double out[3]);
/* safe[i] is nonzero for a safe example. */
SURERAG_API sr_status sr_aurc(const double* scores, const int* safe, size_t n, double* out);
SURERAG_API sr_status sr_binary_ece(const double* p_safe, const int* safe, size_t n, int bins, double* out);
SURERAG_API sr_status sr_macro_f1(const int* gold, const int* pred, size_t n, double* macro, double per_class[3]);
SURERAG_API sr_status sr_artifact_ratio(double best_shortcut_macro, double model_macro, double* out);

#ifdef __cplusplus
}
#endif

#endif
