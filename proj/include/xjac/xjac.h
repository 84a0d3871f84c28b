/* Copyright 2026 The xjac Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to libxjac: pairwise attributions for dot-product bi-encoders.
 *
 * Every fallible call returns an xjac_status. On failure a message is kept
 * per thread and can be read with xjac_last_error() until the next call on
 * that thread. Strings returned through char** out-parameters are owned by
 * the caller and released with xjac_string_free().
 */
#ifndef XJAC_XJAC_H_
#define XJAC_XJAC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(XJAC_BUILDING_LIBRARY)
#    define XJAC_API __declspec(dllexport)
#  else
#    define XJAC_API __declspec(dllimport)
#  endif
#else
#  define XJAC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum xjac_status {
    XJAC_OK = 0,
    XJAC_ERR_USAGE = 1,    /* invalid argument or option combination */
    XJAC_ERR_DATA = 2,     /* unreadable or malformed input */
    XJAC_ERR_NUMERIC = 3,  /* non-finite values, undefined quantities */
    XJAC_ERR_INTERNAL = 4
} xjac_status;

typedef enum xjac_mode { XJAC_MODE_DOT = 0, XJAC_MODE_COSINE = 1 } xjac_mode;
typedef enum xjac_scheme { XJAC_SCHEME_MIDPOINT = 0, XJAC_SCHEME_LEFT = 1, XJAC_SCHEME_TRAPEZOID = 2 } xjac_scheme;
typedef enum xjac_objective { XJAC_OBJECTIVE_DOT = 0, XJAC_OBJECTIVE_COSINE = 1 } xjac_objective;

typedef struct xjac_model xjac_model;
typedef struct xjac_dataset xjac_dataset;
typedef struct xjac_attribution xjac_attribution;

XJAC_API const char* xjac_version(void);
XJAC_API const char* xjac_last_error(void);
XJAC_API void xjac_string_free(char* s);

/* ---- files ---- */

/* Writes through a temporary sibling file and renames it over `path`. */
XJAC_API xjac_status xjac_write_text(const char* path, const char* text);

/* Writes "<primary_output>.manifest.json". config_json may be NULL. */
XJAC_API xjac_status xjac_write_manifest(const char* primary_output, const char* command, const char* config_json,
                                         uint64_t seed, const char* started_at, const char* const* inputs,
                                         size_t n_inputs, const char* const* outputs, size_t n_outputs);

/* UTC, e.g. "2026-01-31T12:00:00Z". */
XJAC_API xjac_status xjac_timestamp(char** out);

/* ---- datasets ---- */

/* TSV of text_a, text_b, score in [0, 1]; optional header line. */
XJAC_API xjac_status xjac_dataset_load(const char* path, xjac_dataset** out);
XJAC_API size_t xjac_dataset_size(const xjac_dataset* data);
/* Borrowed pointers, valid until the dataset is freed. */
XJAC_API xjac_status xjac_dataset_pair(const xjac_dataset* data, size_t index, const char** text_a,
                                       const char** text_b, double* label);
XJAC_API void xjac_dataset_free(xjac_dataset* data);

/* Template-generated scored pairs and a matching POS tag file. */
XJAC_API xjac_status xjac_synthetic_write(size_t pairs, uint64_t seed, const char* data_path, const char* tags_path);

/* ---- models ---- */

/* New model; the vocabulary is built from both text columns of `corpus`.
 * config_json may be NULL or "" for the defaults. */
XJAC_API xjac_status xjac_model_create(const char* config_json, const xjac_dataset* corpus, int min_count,
                                       uint64_t seed, xjac_model** out);
XJAC_API xjac_status xjac_model_load(const char* path, xjac_model** out);
XJAC_API xjac_status xjac_model_save(const xjac_model* model, const char* path);
/* {"config":{...}, "vocab_size":V} */
XJAC_API xjac_status xjac_model_info(const xjac_model* model, char** json);
XJAC_API int xjac_model_layers(const xjac_model* model);
XJAC_API void xjac_model_free(xjac_model* model);

XJAC_API xjac_status xjac_score(const xjac_model* model, const char* text_a, const char* text_b, xjac_mode mode,
                                double* out);

/* ---- training ---- */

typedef struct xjac_train_options {
    int epochs;
    int batch_size;
    double learning_rate;
    double weight_decay;
    double warmup_fraction;
    xjac_objective objective;
    uint64_t seed;
} xjac_train_options;

XJAC_API void xjac_train_options_init(xjac_train_options* options);

/* loss_csv ("epoch,mean_loss") and final_loss may be NULL. */
XJAC_API xjac_status xjac_train(xjac_model* model, const xjac_dataset* data, const xjac_train_options* options,
                                char** loss_csv, double* final_loss);

/* Spearman correlation of model scores against the labels. */
XJAC_API xjac_status xjac_evaluate(const xjac_model* model, const xjac_dataset* data, xjac_mode mode,
                                   double* spearman);

/* ---- attribution ---- */

typedef struct xjac_attribute_options {
    int layer;       /* 0 = input embeddings, L = output representations */
    int steps;       /* N >= 1 */
    xjac_scheme scheme;
    int batch;       /* interpolation nodes per work item */
    int threads;     /* 0: hardware concurrency, capped by XJAC_THREADS */
} xjac_attribute_options;

XJAC_API void xjac_attribute_options_init(xjac_attribute_options* options);

XJAC_API xjac_status xjac_attribute(const xjac_model* model, const char* text_a, const char* text_b,
                                    const xjac_attribute_options* options, xjac_attribution** out);
XJAC_API void xjac_attribution_summary(const xjac_attribution* attribution, double* score, double* attribution_sum,
                                       double* error);
XJAC_API void xjac_attribution_shape(const xjac_attribution* attribution, size_t* rows, size_t* cols);
/* Copies the row-major token-token matrix; capacity is in doubles. */
XJAC_API xjac_status xjac_attribution_matrix(const xjac_attribution* attribution, double* buffer, size_t capacity);
XJAC_API xjac_status xjac_attribution_to_json(const xjac_attribution* attribution, char** out);
XJAC_API xjac_status xjac_attribution_to_svg(const xjac_attribution* attribution, char** out);
XJAC_API void xjac_attribution_free(xjac_attribution* attribution);

/* CSV rows layer,N,mean_abs_error,std_error,mean_rel_error,pairs over the
 * first max_pairs pairs of `data` (0: all). */
XJAC_API xjac_status xjac_sweep(const xjac_model* model, const xjac_dataset* data, const int* layers,
                                size_t n_layers, const int* steps, size_t n_steps,
                                const xjac_attribute_options* options, size_t max_pairs, char** csv);

/* ---- analysis over attribution JSON files (a file or a directory) ---- */

/* layer < 0: one histogram per layer present. */
XJAC_API xjac_status xjac_analyze_histogram(const char* attributions, int layer, int bins, char** csv);
XJAC_API xjac_status xjac_analyze_curve(const char* attributions, int grid, char** csv);
XJAC_API xjac_status xjac_analyze_pos(const char* attributions, const char* tags_path, const double* fractions,
                                      size_t n_fractions, char** csv);
/* relations: comma-separated, e.g. "NN-NN,NN-VBZ". CSV rows index,fraction. */
XJAC_API xjac_status xjac_analyze_pos_restricted(const char* attributions, const char* tags_path,
                                                 const char* relations, char** csv);

#ifdef __cplusplus
}
#endif

#endif /* XJAC_XJAC_H_ */
