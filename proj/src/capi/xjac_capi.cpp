// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#include "xjac/xjac.h"

#include "core/analysis.hpp"
#include "core/attribution.hpp"
#include "core/checkpoint.hpp"
#include "core/errors.hpp"
#include "core/io.hpp"
#include "core/svg.hpp"
#include "core/synthetic.hpp"
#include "core/trainer.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <set>
#include <sstream>
#include <string>

struct xjac_model {
    xjac::Model model;
};

struct xjac_dataset {
    std::vector<xjac::Pair> pairs;
};

struct xjac_attribution {
    xjac::AttributionOutput output;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
xjac_status guarded(Fn&& fn) {
    g_last_error.clear();
    try {
        fn();
        return XJAC_OK;
    } catch (const xjac::UsageError& e) {
        g_last_error = e.what();
        return XJAC_ERR_USAGE;
    } catch (const xjac::DataError& e) {
        g_last_error = e.what();
        return XJAC_ERR_DATA;
    } catch (const xjac::NumericalError& e) {
        g_last_error = e.what();
        return XJAC_ERR_NUMERIC;
    } catch (const nlohmann::json::exception& e) {
        g_last_error = e.what();
        return XJAC_ERR_DATA;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return XJAC_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return XJAC_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return XJAC_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (p == nullptr) throw xjac::UsageError(std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void emit(char** out, const std::string& s) {
    if (out != nullptr) *out = dup_string(s);
}

xjac::Scheme to_scheme(xjac_scheme s) {
    switch (s) {
        case XJAC_SCHEME_MIDPOINT: return xjac::Scheme::Midpoint;
        case XJAC_SCHEME_LEFT: return xjac::Scheme::Left;
        case XJAC_SCHEME_TRAPEZOID: return xjac::Scheme::Trapezoid;
    }
    throw xjac::UsageError("unknown integration scheme");
}

xjac::SimilarityMode to_mode(xjac_mode m) {
    switch (m) {
        case XJAC_MODE_DOT: return xjac::SimilarityMode::Dot;
        case XJAC_MODE_COSINE: return xjac::SimilarityMode::Cosine;
    }
    throw xjac::UsageError("unknown similarity mode");
}

xjac::AttributeOptions to_options(const xjac_attribute_options& o) {
    xjac::AttributeOptions opts;
    opts.layer = o.layer;
    opts.steps = o.steps;
    opts.scheme = to_scheme(o.scheme);
    opts.engine.batch = o.batch;
    opts.engine.threads = o.threads;
    return opts;
}

std::vector<xjac::WordAttribution> word_attributions(const char* attributions, const char* tags_path) {
    require(attributions, "attributions");
    if (tags_path == nullptr || *tags_path == '\0') throw xjac::UsageError("a tags file is required");
    const auto outputs = xjac::load_attributions(attributions);
    const xjac::TagLookup tags(xjac::parse_tags(xjac::read_file(tags_path)));
    std::vector<xjac::WordAttribution> words;
    for (const auto& o : outputs) words.push_back(xjac::word_attribution(o, tags));
    return words;
}

}  // namespace

extern "C" {

const char* xjac_version(void) { return XJAC_VERSION_STRING; }

const char* xjac_last_error(void) { return g_last_error.c_str(); }

void xjac_string_free(char* s) { std::free(s); }

xjac_status xjac_write_text(const char* path, const char* text) {
    return guarded([&] {
        require(path, "path");
        require(text, "text");
        xjac::write_file_atomic(path, text);
    });
}

xjac_status xjac_write_manifest(const char* primary_output, const char* command, const char* config_json,
                                uint64_t seed, const char* started_at, const char* const* inputs, size_t n_inputs,
                                const char* const* outputs, size_t n_outputs) {
    return guarded([&] {
        require(primary_output, "primary_output");
        require(command, "command");
        xjac::RunManifest m;
        m.command = command;
        if (config_json != nullptr && *config_json != '\0') m.config = nlohmann::ordered_json::parse(config_json);
        m.seed = seed;
        m.started_at = started_at != nullptr ? started_at : "";
        m.finished_at = xjac::utc_timestamp();
        for (size_t i = 0; i < n_inputs; ++i) m.inputs.emplace_back(inputs[i]);
        for (size_t i = 0; i < n_outputs; ++i) m.outputs.emplace_back(outputs[i]);
        xjac::write_manifest(m, primary_output);
    });
}

xjac_status xjac_timestamp(char** out) {
    return guarded([&] {
        require(out, "out");
        emit(out, xjac::utc_timestamp());
    });
}

xjac_status xjac_dataset_load(const char* path, xjac_dataset** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new xjac_dataset{xjac::load_dataset(path)};
    });
}

size_t xjac_dataset_size(const xjac_dataset* data) { return data != nullptr ? data->pairs.size() : 0; }

xjac_status xjac_dataset_pair(const xjac_dataset* data, size_t index, const char** text_a, const char** text_b,
                              double* label) {
    return guarded([&] {
        require(data, "data");
        if (index >= data->pairs.size()) throw xjac::UsageError("pair index out of range");
        const auto& p = data->pairs[index];
        if (text_a != nullptr) *text_a = p.text_a.c_str();
        if (text_b != nullptr) *text_b = p.text_b.c_str();
        if (label != nullptr) *label = p.label;
    });
}

void xjac_dataset_free(xjac_dataset* data) { delete data; }

xjac_status xjac_synthetic_write(size_t pairs, uint64_t seed, const char* data_path, const char* tags_path) {
    return guarded([&] {
        require(data_path, "data_path");
        if (pairs == 0) throw xjac::UsageError("pair count must be positive");
        const auto corpus = xjac::make_synthetic_corpus(pairs, seed);
        xjac::write_file_atomic(data_path, xjac::format_dataset(corpus.pairs));
        if (tags_path != nullptr && *tags_path != '\0') xjac::write_file_atomic(tags_path, corpus.tags);
    });
}

xjac_status xjac_model_create(const char* config_json, const xjac_dataset* corpus, int min_count, uint64_t seed,
                              xjac_model** out) {
    return guarded([&] {
        require(corpus, "corpus");
        require(out, "out");
        xjac::EncoderConfig config;
        if (config_json != nullptr && *config_json != '\0')
            config = xjac::config_from_json(nlohmann::json::parse(config_json));
        std::vector<std::string> texts;
        for (const auto& p : corpus->pairs) {
            texts.push_back(p.text_a);
            texts.push_back(p.text_b);
        }
        auto vocab = xjac::build_vocab(texts, min_count);
        auto params = xjac::init_params(config, vocab.size(), seed);
        *out = new xjac_model{xjac::Model(config, std::move(vocab), std::move(params))};
    });
}

xjac_status xjac_model_load(const char* path, xjac_model** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new xjac_model{xjac::load_checkpoint(path)};
    });
}

xjac_status xjac_model_save(const xjac_model* model, const char* path) {
    return guarded([&] {
        require(model, "model");
        require(path, "path");
        xjac::save_checkpoint(model->model, path);
    });
}

xjac_status xjac_model_info(const xjac_model* model, char** json) {
    return guarded([&] {
        require(model, "model");
        require(json, "json");
        nlohmann::ordered_json j;
        j["config"] = xjac::config_to_json(model->model.config());
        j["vocab_size"] = model->model.vocab().size();
        emit(json, j.dump());
    });
}

int xjac_model_layers(const xjac_model* model) { return model != nullptr ? model->model.config().layers : -1; }

void xjac_model_free(xjac_model* model) { delete model; }

xjac_status xjac_score(const xjac_model* model, const char* text_a, const char* text_b, xjac_mode mode,
                       double* out) {
    return guarded([&] {
        require(model, "model");
        require(text_a, "text_a");
        require(text_b, "text_b");
        require(out, "out");
        const auto& m = model->model;
        *out = m.score(m.tokenize(text_a), m.tokenize(text_b), to_mode(mode));
    });
}

void xjac_train_options_init(xjac_train_options* options) {
    if (options == nullptr) return;
    const xjac::TrainConfig d;
    options->epochs = d.epochs;
    options->batch_size = d.batch_size;
    options->learning_rate = d.learning_rate;
    options->weight_decay = d.weight_decay;
    options->warmup_fraction = d.warmup_fraction;
    options->objective = XJAC_OBJECTIVE_DOT;
    options->seed = d.seed;
}

xjac_status xjac_train(xjac_model* model, const xjac_dataset* data, const xjac_train_options* options,
                       char** loss_csv, double* final_loss) {
    return guarded([&] {
        require(model, "model");
        require(data, "data");
        require(options, "options");
        xjac::TrainConfig cfg;
        cfg.epochs = options->epochs;
        cfg.batch_size = options->batch_size;
        cfg.learning_rate = options->learning_rate;
        cfg.weight_decay = options->weight_decay;
        cfg.warmup_fraction = options->warmup_fraction;
        switch (options->objective) {
            case XJAC_OBJECTIVE_DOT: cfg.objective = xjac::Objective::DotShifted; break;
            case XJAC_OBJECTIVE_COSINE: cfg.objective = xjac::Objective::Cosine; break;
            default: throw xjac::UsageError("unknown objective");
        }
        cfg.seed = options->seed;
        const auto result = xjac::train(model->model, data->pairs, cfg);
        emit(loss_csv, xjac::loss_trace_csv(result));
        if (final_loss != nullptr) *final_loss = result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back();
    });
}

xjac_status xjac_evaluate(const xjac_model* model, const xjac_dataset* data, xjac_mode mode, double* spearman) {
    return guarded([&] {
        require(model, "model");
        require(data, "data");
        require(spearman, "spearman");
        *spearman = xjac::evaluate(model->model, data->pairs, to_mode(mode));
    });
}

void xjac_attribute_options_init(xjac_attribute_options* options) {
    if (options == nullptr) return;
    const xjac::AttributeOptions d;
    options->layer = d.layer;
    options->steps = d.steps;
    options->scheme = XJAC_SCHEME_MIDPOINT;
    options->batch = d.engine.batch;
    options->threads = d.engine.threads;
}

xjac_status xjac_attribute(const xjac_model* model, const char* text_a, const char* text_b,
                           const xjac_attribute_options* options, xjac_attribution** out) {
    return guarded([&] {
        require(model, "model");
        require(text_a, "text_a");
        require(text_b, "text_b");
        require(options, "options");
        require(out, "out");
        const auto& m = model->model;
        *out = new xjac_attribution{xjac::attribute(m, m.tokenize(text_a), m.tokenize(text_b), to_options(*options))};
    });
}

void xjac_attribution_summary(const xjac_attribution* a, double* score, double* attribution_sum, double* error) {
    if (a == nullptr) return;
    if (score != nullptr) *score = a->output.score;
    if (attribution_sum != nullptr) *attribution_sum = a->output.attribution_sum;
    if (error != nullptr) *error = a->output.error;
}

void xjac_attribution_shape(const xjac_attribution* a, size_t* rows, size_t* cols) {
    if (rows != nullptr) *rows = a != nullptr ? static_cast<size_t>(a->output.token_matrix.rows()) : 0;
    if (cols != nullptr) *cols = a != nullptr ? static_cast<size_t>(a->output.token_matrix.cols()) : 0;
}

xjac_status xjac_attribution_matrix(const xjac_attribution* a, double* buffer, size_t capacity) {
    return guarded([&] {
        require(a, "attribution");
        require(buffer, "buffer");
        const auto& m = a->output.token_matrix;
        if (capacity < static_cast<size_t>(m.size())) throw xjac::UsageError("buffer too small for the matrix");
        std::memcpy(buffer, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
    });
}

xjac_status xjac_attribution_to_json(const xjac_attribution* a, char** out) {
    return guarded([&] {
        require(a, "attribution");
        require(out, "out");
        emit(out, xjac::attribution_to_string(a->output));
    });
}

xjac_status xjac_attribution_to_svg(const xjac_attribution* a, char** out) {
    return guarded([&] {
        require(a, "attribution");
        require(out, "out");
        emit(out, xjac::render_heatmap_svg(a->output));
    });
}

void xjac_attribution_free(xjac_attribution* a) { delete a; }

xjac_status xjac_sweep(const xjac_model* model, const xjac_dataset* data, const int* layers, size_t n_layers,
                       const int* steps, size_t n_steps, const xjac_attribute_options* options, size_t max_pairs,
                       char** csv) {
    return guarded([&] {
        require(model, "model");
        require(data, "data");
        require(options, "options");
        require(csv, "csv");
        if (n_layers == 0 || n_steps == 0) throw xjac::UsageError("sweep needs at least one layer and one step count");
        require(layers, "layers");
        require(steps, "steps");
        const auto& m = model->model;
        std::vector<std::pair<xjac::TokenSequence, xjac::TokenSequence>> pairs;
        const size_t n = max_pairs == 0 ? data->pairs.size() : std::min(max_pairs, data->pairs.size());
        for (size_t i = 0; i < n; ++i) pairs.emplace_back(m.tokenize(data->pairs[i].text_a), m.tokenize(data->pairs[i].text_b));
        const auto opts = to_options(*options);
        const auto rows = xjac::convergence_sweep(m, pairs, std::vector<int>(layers, layers + n_layers),
                                                  std::vector<int>(steps, steps + n_steps), opts.scheme, opts.engine);
        emit(csv, xjac::sweep_csv(rows));
    });
}

xjac_status xjac_analyze_histogram(const char* attributions, int layer, int bins, char** csv) {
    return guarded([&] {
        require(attributions, "attributions");
        require(csv, "csv");
        const auto outputs = xjac::load_attributions(attributions);
        std::set<int> layers;
        if (layer >= 0) {
            layers.insert(layer);
        } else {
            for (const auto& o : outputs) layers.insert(o.layer);
        }
        std::string text;
        for (int l : layers) {
            const auto body = xjac::histogram_csv(xjac::attribution_histogram(outputs, l, bins));
            text += text.empty() ? body : body.substr(body.find('\n') + 1);
        }
        emit(csv, text);
    });
}

xjac_status xjac_analyze_curve(const char* attributions, int grid, char** csv) {
    return guarded([&] {
        require(attributions, "attributions");
        require(csv, "csv");
        const auto outputs = xjac::load_attributions(attributions);
        emit(csv, xjac::curve_csv(xjac::cumulative_prediction_curve(outputs, grid)));
    });
}

xjac_status xjac_analyze_pos(const char* attributions, const char* tags_path, const double* fractions,
                             size_t n_fractions, char** csv) {
    return guarded([&] {
        require(csv, "csv");
        if (n_fractions == 0) throw xjac::UsageError("at least one top fraction is required");
        require(fractions, "fractions");
        const auto words = word_attributions(attributions, tags_path);
        emit(csv, xjac::shares_csv(xjac::pos_relation_shares(words, {fractions, n_fractions})));
    });
}

xjac_status xjac_analyze_pos_restricted(const char* attributions, const char* tags_path, const char* relations,
                                        char** csv) {
    return guarded([&] {
        require(relations, "relations");
        require(csv, "csv");
        std::set<std::string> set;
        std::istringstream in(relations);
        std::string item;
        while (std::getline(in, item, ',')) {
            if (item.empty()) continue;
            const auto dash = item.find('-');
            if (dash == std::string::npos || dash == 0 || dash + 1 == item.size() ||
                item.find('-', dash + 1) != std::string::npos)
                throw xjac::UsageError("relation '" + item + "' is not of the form TAG-TAG");
            set.insert(xjac::relation_name(item.substr(0, dash), item.substr(dash + 1)));
        }
        const auto words = word_attributions(attributions, tags_path);
        std::string text = "index,fraction\n";
        for (size_t i = 0; i < words.size(); ++i)
            text += std::to_string(i) + "," + xjac::format_double(xjac::pos_restricted_prediction(words[i], set)) + "\n";
        emit(csv, text);
    });
}

}  // extern "C"
