/* Copyright 2026 The xjac Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Exercises the public C interface only, compiled as C. */

#include <xjac/xjac.h>

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static int failures = 0;

#define EXPECT(cond)                                                        \
    do {                                                                    \
        if (!(cond)) {                                                      \
            fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
            ++failures;                                                     \
        }                                                                   \
    } while (0)

#define EXPECT_OK(call)                                                                       \
    do {                                                                                      \
        xjac_status s_ = (call);                                                              \
        if (s_ != XJAC_OK) {                                                                  \
            fprintf(stderr, "%s:%d: %s -> %d (%s)\n", __FILE__, __LINE__, #call, (int)s_, xjac_last_error()); \
            ++failures;                                                                       \
        }                                                                                     \
    } while (0)

static char* join(const char* dir, const char* name) {
    size_t n = strlen(dir) + strlen(name) + 2;
    char* out = (char*)malloc(n);
    snprintf(out, n, "%s/%s", dir, name);
    return out;
}

int main(int argc, char** argv) {
    if (argc != 2) {
        fprintf(stderr, "usage: %s <scratch dir>\n", argv[0]);
        return 2;
    }
    const char* dir = argv[1];
    char* data_path = join(dir, "capi_data.tsv");
    char* tags_path = join(dir, "capi_tags.conll");
    char* model_path = join(dir, "capi_model.json");
    char* attr_path = join(dir, "capi_attr.json");

    EXPECT(strlen(xjac_version()) > 0);

    /* data */
    EXPECT_OK(xjac_synthetic_write(120, 3, data_path, tags_path));
    xjac_dataset* data = NULL;
    EXPECT_OK(xjac_dataset_load(data_path, &data));
    EXPECT(xjac_dataset_size(data) == 120);
    const char* a = NULL;
    const char* b = NULL;
    double label = -1.0;
    EXPECT_OK(xjac_dataset_pair(data, 0, &a, &b, &label));
    EXPECT(a && b && label >= 0.0 && label <= 1.0);
    EXPECT(xjac_dataset_pair(data, 120, &a, &b, &label) == XJAC_ERR_USAGE);

    xjac_dataset* missing = NULL;
    EXPECT(xjac_dataset_load("/nonexistent/file.tsv", &missing) == XJAC_ERR_DATA);
    EXPECT(missing == NULL);
    EXPECT(strlen(xjac_last_error()) > 0);

    /* model */
    const char* config = "{\"architecture\":\"transformer\",\"dim\":16,\"layers\":2,\"heads\":2,"
                         "\"embed_dim\":16,\"ff_width\":32,\"max_len\":16}";
    xjac_model* model = NULL;
    EXPECT_OK(xjac_model_create(config, data, 1, 7, &model));
    EXPECT(xjac_model_layers(model) == 2);
    char* info = NULL;
    EXPECT_OK(xjac_model_info(model, &info));
    EXPECT(info && strstr(info, "vocab_size") != NULL);
    xjac_string_free(info);

    xjac_model* bad = NULL;
    EXPECT(xjac_model_create("{\"dim\":-3}", data, 1, 7, &bad) == XJAC_ERR_USAGE);
    EXPECT(xjac_model_create("{not json", data, 1, 7, &bad) != XJAC_OK);

    double s = 0.0;
    EXPECT_OK(xjac_score(model, a, b, XJAC_MODE_DOT, &s));
    EXPECT(isfinite(s));

    /* training */
    xjac_train_options topt;
    xjac_train_options_init(&topt);
    EXPECT(topt.epochs == 5 && topt.batch_size == 16);
    topt.epochs = 1;
    topt.learning_rate = 2e-3;
    char* loss_csv = NULL;
    double final_loss = -1.0;
    EXPECT_OK(xjac_train(model, data, &topt, &loss_csv, &final_loss));
    EXPECT(loss_csv && strncmp(loss_csv, "epoch,mean_loss\n", 16) == 0);
    EXPECT(final_loss >= 0.0);
    xjac_string_free(loss_csv);

    topt.objective = XJAC_OBJECTIVE_COSINE;
    EXPECT(xjac_train(model, data, &topt, NULL, NULL) == XJAC_ERR_USAGE);
    EXPECT(strstr(xjac_last_error(), "shifted") != NULL);

    double rho = 0.0;
    EXPECT_OK(xjac_evaluate(model, data, XJAC_MODE_DOT, &rho));
    EXPECT(rho >= -1.0 && rho <= 1.0);

    /* save / load round trip keeps scores bit-identical */
    EXPECT_OK(xjac_model_save(model, model_path));
    xjac_model* loaded = NULL;
    EXPECT_OK(xjac_model_load(model_path, &loaded));
    double s1 = 0.0, s2 = 1.0;
    EXPECT_OK(xjac_score(model, a, b, XJAC_MODE_DOT, &s1));
    EXPECT_OK(xjac_score(loaded, a, b, XJAC_MODE_DOT, &s2));
    EXPECT(s1 == s2);

    /* attribution */
    xjac_attribute_options aopt;
    xjac_attribute_options_init(&aopt);
    EXPECT(aopt.steps == 100);
    aopt.layer = 2;
    aopt.steps = 1;
    xjac_attribution* attr = NULL;
    EXPECT_OK(xjac_attribute(model, a, b, &aopt, &attr));
    double score = 0.0, sum = 0.0, err = 1.0;
    xjac_attribution_summary(attr, &score, &sum, &err);
    EXPECT(err <= 1e-10);
    size_t rows = 0, cols = 0;
    xjac_attribution_shape(attr, &rows, &cols);
    EXPECT(rows > 0 && cols > 0);
    double* cells = (double*)malloc(rows * cols * sizeof(double));
    EXPECT(xjac_attribution_matrix(attr, cells, rows * cols - 1) == XJAC_ERR_USAGE);
    EXPECT_OK(xjac_attribution_matrix(attr, cells, rows * cols));
    double total = 0.0;
    for (size_t i = 0; i < rows * cols; ++i) total += cells[i];
    EXPECT(fabs(total - sum) <= 1e-12 * (1.0 + fabs(sum)));
    free(cells);

    char* json = NULL;
    EXPECT_OK(xjac_attribution_to_json(attr, &json));
    EXPECT_OK(xjac_write_text(attr_path, json));
    xjac_string_free(json);
    char* svg = NULL;
    EXPECT_OK(xjac_attribution_to_svg(attr, &svg));
    EXPECT(svg && strstr(svg, "<svg") == svg);
    xjac_string_free(svg);
    xjac_attribution_free(attr);

    aopt.layer = 9;
    attr = NULL;
    EXPECT(xjac_attribute(model, a, b, &aopt, &attr) == XJAC_ERR_USAGE);
    EXPECT(attr == NULL);

    /* sweep */
    const int layers[] = {2};
    const int steps[] = {1, 4};
    aopt.layer = 0;
    char* sweep = NULL;
    EXPECT_OK(xjac_sweep(model, data, layers, 1, steps, 2, &aopt, 3, &sweep));
    EXPECT(sweep && strncmp(sweep, "layer,N,", 8) == 0);
    xjac_string_free(sweep);

    /* analysis */
    char* csv = NULL;
    EXPECT_OK(xjac_analyze_histogram(attr_path, -1, 5, &csv));
    EXPECT(csv && strncmp(csv, "layer,bin_lo", 12) == 0);
    xjac_string_free(csv);
    EXPECT_OK(xjac_analyze_curve(attr_path, 10, &csv));
    EXPECT(csv && strncmp(csv, "percent,mean", 12) == 0);
    xjac_string_free(csv);
    const double fractions[] = {0.5, 1.0};
    EXPECT_OK(xjac_analyze_pos(attr_path, tags_path, fractions, 2, &csv));
    EXPECT(csv && strncmp(csv, "fraction,rank", 13) == 0);
    xjac_string_free(csv);
    EXPECT_OK(xjac_analyze_pos_restricted(attr_path, tags_path, "NN-NN", &csv));
    EXPECT(csv && strncmp(csv, "index,fraction", 14) == 0);
    xjac_string_free(csv);
    EXPECT(xjac_analyze_curve("/nonexistent", 10, &csv) == XJAC_ERR_DATA);

    /* manifests */
    const char* inputs[] = {data_path};
    const char* outputs[] = {attr_path};
    char* ts = NULL;
    EXPECT_OK(xjac_timestamp(&ts));
    EXPECT_OK(xjac_write_manifest(attr_path, "capi", NULL, 7, ts, inputs, 1, outputs, 1));
    xjac_string_free(ts);

    /* null arguments are usage errors, not crashes */
    EXPECT(xjac_score(NULL, a, b, XJAC_MODE_DOT, &s) == XJAC_ERR_USAGE);
    EXPECT(xjac_dataset_load(NULL, &missing) == XJAC_ERR_USAGE);

    xjac_model_free(loaded);
    xjac_model_free(model);
    xjac_dataset_free(data);
    xjac_model_free(NULL);
    xjac_dataset_free(NULL);
    xjac_attribution_free(NULL);
    xjac_string_free(NULL);
    free(data_path);
    free(tags_path);
    free(model_path);
    free(attr_path);

    if (failures) {
        fprintf(stderr, "%d C API check(s) failed\n", failures);
        return 1;
    }
    printf("C API checks passed\n");
    return 0;
}
