// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0
//
// xjac: train small bi-encoders, attribute their scores to token pairs,
// and summarise the attributions.

#include "xjac/xjac.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

/// Carries a status out of a command so main() can turn it into an exit code.
struct Failure {
    xjac_status status;
    std::string message;
};

void check(xjac_status s) {
    if (s != XJAC_OK) throw Failure{s, xjac_last_error()};
}

void usage_error(const std::string& message) { throw Failure{XJAC_ERR_USAGE, message}; }

struct ModelDeleter {
    void operator()(xjac_model* m) const { xjac_model_free(m); }
};
struct DatasetDeleter {
    void operator()(xjac_dataset* d) const { xjac_dataset_free(d); }
};
struct AttributionDeleter {
    void operator()(xjac_attribution* a) const { xjac_attribution_free(a); }
};
using ModelPtr = std::unique_ptr<xjac_model, ModelDeleter>;
using DatasetPtr = std::unique_ptr<xjac_dataset, DatasetDeleter>;
using AttributionPtr = std::unique_ptr<xjac_attribution, AttributionDeleter>;

/// Takes ownership of a library string.
std::string take(char* s) {
    std::string out = s != nullptr ? s : "";
    xjac_string_free(s);
    return out;
}

std::string now() {
    char* ts = nullptr;
    check(xjac_timestamp(&ts));
    return take(ts);
}

ModelPtr load_model(const std::string& path) {
    xjac_model* m = nullptr;
    check(xjac_model_load(path.c_str(), &m));
    return ModelPtr(m);
}

DatasetPtr load_data(const std::string& path) {
    xjac_dataset* d = nullptr;
    check(xjac_dataset_load(path.c_str(), &d));
    return DatasetPtr(d);
}

void write_text(const std::string& path, const std::string& text) { check(xjac_write_text(path.c_str(), text.c_str())); }

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure{XJAC_ERR_DATA, "cannot read '" + path + "'"};
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void manifest(const std::string& primary, const std::string& command, const ordered_json& config, uint64_t seed,
              const std::string& started, const std::vector<std::string>& inputs,
              const std::vector<std::string>& outputs) {
    std::vector<const char*> in, out;
    for (const auto& s : inputs) in.push_back(s.c_str());
    for (const auto& s : outputs) out.push_back(s.c_str());
    const std::string cfg = config.dump();
    check(xjac_write_manifest(primary.c_str(), command.c_str(), cfg.c_str(), seed, started.c_str(), in.data(),
                              in.size(), out.data(), out.size()));
}

xjac_scheme parse_scheme(const std::string& s) {
    if (s == "midpoint") return XJAC_SCHEME_MIDPOINT;
    if (s == "left") return XJAC_SCHEME_LEFT;
    if (s == "trapezoid") return XJAC_SCHEME_TRAPEZOID;
    usage_error("unknown scheme '" + s + "'");
    return XJAC_SCHEME_MIDPOINT;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---- synth ----

struct SynthArgs {
    std::size_t pairs = 200;
    uint64_t seed = 0;
    std::string out;
    std::string tags;
};

void run_synth(const SynthArgs& a) {
    const std::string started = now();
    check(xjac_synthetic_write(a.pairs, a.seed, a.out.c_str(), a.tags.c_str()));
    std::vector<std::string> outputs{a.out};
    if (!a.tags.empty()) outputs.push_back(a.tags);
    ordered_json cfg;
    cfg["pairs"] = a.pairs;
    manifest(a.out, "synth", cfg, a.seed, started, {}, outputs);
    std::cout << "wrote " << a.pairs << " pairs to " << a.out << "\n";
}

// ---- train ----

struct TrainArgs {
    std::string data;
    std::string eval;
    std::string config;
    std::string model;
    std::string objective = "dot";
    std::string out;
    uint64_t seed = 0;
    int epochs = 0;
    int batch = 0;
    double lr = 0.0;
    int min_count = 1;
};

void print_spearman(const xjac_model* model, const xjac_dataset* data, const char* label) {
    for (auto [mode, name] : {std::pair{XJAC_MODE_COSINE, "cosine"}, std::pair{XJAC_MODE_DOT, "dot"}}) {
        double rho = 0.0;
        if (xjac_evaluate(model, data, mode, &rho) == XJAC_OK)
            std::cout << label << " spearman (" << name << "): " << fmt(rho) << "\n";
        else
            std::cout << label << " spearman (" << name << "): undefined (" << xjac_last_error() << ")\n";
    }
}

void run_train(const TrainArgs& a) {
    const std::string started = now();
    xjac_train_options opts;
    xjac_train_options_init(&opts);
    if (a.objective == "dot") {
        opts.objective = XJAC_OBJECTIVE_DOT;
    } else if (a.objective == "cosine") {
        opts.objective = XJAC_OBJECTIVE_COSINE;
    } else {
        usage_error("unknown objective '" + a.objective + "'");
    }
    opts.seed = a.seed;
    if (a.epochs > 0) opts.epochs = a.epochs;
    if (a.batch > 0) opts.batch_size = a.batch;
    if (a.lr > 0.0) opts.learning_rate = a.lr;

    auto data = load_data(a.data);
    std::vector<std::string> inputs{a.data};
    ModelPtr model;
    if (!a.model.empty()) {
        model = load_model(a.model);
        inputs.push_back(a.model);
    } else {
        std::string config_text;
        if (!a.config.empty()) {
            config_text = read_text(a.config);
            inputs.push_back(a.config);
        }
        xjac_model* m = nullptr;
        check(xjac_model_create(config_text.c_str(), data.get(), a.min_count, a.seed, &m));
        model.reset(m);
    }

    char* loss_csv = nullptr;
    double final_loss = 0.0;
    check(xjac_train(model.get(), data.get(), &opts, &loss_csv, &final_loss));
    const std::string losses = take(loss_csv);

    check(xjac_model_save(model.get(), a.out.c_str()));
    const std::string loss_path = a.out + ".loss.csv";
    write_text(loss_path, losses);

    ordered_json cfg;
    cfg["model"] = ordered_json::parse(take([&] {
        char* info = nullptr;
        check(xjac_model_info(model.get(), &info));
        return info;
    }()));
    cfg["objective"] = a.objective;
    cfg["epochs"] = opts.epochs;
    cfg["batch_size"] = opts.batch_size;
    cfg["learning_rate"] = opts.learning_rate;
    cfg["weight_decay"] = opts.weight_decay;
    cfg["warmup_fraction"] = opts.warmup_fraction;
    cfg["min_count"] = a.min_count;
    manifest(a.out, "train", cfg, a.seed, started, inputs, {a.out, loss_path});

    std::cout << "final train loss: " << fmt(final_loss) << "\n";
    if (!a.eval.empty()) {
        auto eval = load_data(a.eval);
        print_spearman(model.get(), eval.get(), "eval");
    } else {
        print_spearman(model.get(), data.get(), "train");
    }
}

// ---- eval ----

struct EvalArgs {
    std::string model;
    std::string data;
};

void run_eval(const EvalArgs& a) {
    auto model = load_model(a.model);
    auto data = load_data(a.data);
    print_spearman(model.get(), data.get(), "eval");
}

// ---- attribute ----

struct AttributeArgs {
    std::string model;
    std::string text_a;
    std::string text_b;
    std::string data;
    std::size_t limit = 0;
    int layer = -1;
    int steps = 100;
    std::string scheme = "midpoint";
    int batch = 16;
    std::string out;
    std::string svg;
};

ordered_json attribute_config(const AttributeArgs& a, const xjac_attribute_options& o) {
    ordered_json cfg;
    cfg["layer"] = o.layer;
    cfg["steps"] = o.steps;
    cfg["scheme"] = a.scheme;
    cfg["batch"] = o.batch;
    return cfg;
}

void run_attribute(const AttributeArgs& a) {
    const std::string started = now();
    auto model = load_model(a.model);
    xjac_attribute_options opts;
    xjac_attribute_options_init(&opts);
    opts.layer = a.layer >= 0 ? a.layer : std::max(0, xjac_model_layers(model.get()) - 1);
    opts.steps = a.steps;
    opts.scheme = parse_scheme(a.scheme);
    opts.batch = a.batch;
    auto cfg = attribute_config(a, opts);

    if (!a.data.empty()) {
        if (!a.text_a.empty() || !a.text_b.empty()) usage_error("give either two texts or --data, not both");
        if (!a.svg.empty()) usage_error("--svg applies to a single pair");
        auto data = load_data(a.data);
        std::error_code ec;
        fs::create_directories(a.out, ec);
        if (ec) throw Failure{XJAC_ERR_DATA, "cannot create directory '" + a.out + "': " + ec.message()};
        const std::size_t total = xjac_dataset_size(data.get());
        const std::size_t n = a.limit == 0 ? total : std::min(a.limit, total);
        std::vector<std::string> outputs;
        double error_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const char* ta = nullptr;
            const char* tb = nullptr;
            check(xjac_dataset_pair(data.get(), i, &ta, &tb, nullptr));
            xjac_attribution* raw = nullptr;
            check(xjac_attribute(model.get(), ta, tb, &opts, &raw));
            AttributionPtr attr(raw);
            char* json = nullptr;
            check(xjac_attribution_to_json(attr.get(), &json));
            char name[32];
            std::snprintf(name, sizeof name, "pair_%05zu.json", i);
            const std::string path = (fs::path(a.out) / name).string();
            write_text(path, take(json));
            outputs.push_back(path);
            double error = 0.0;
            xjac_attribution_summary(attr.get(), nullptr, nullptr, &error);
            error_sum += error;
        }
        cfg["pairs"] = n;
        manifest((fs::path(a.out) / "run").string(), "attribute", cfg, 0, started, {a.model, a.data}, outputs);
        std::cout << "wrote " << n << " attributions to " << a.out << ", mean error "
                  << fmt(n ? error_sum / static_cast<double>(n) : 0.0) << "\n";
        return;
    }

    if (a.text_a.empty() || a.text_b.empty()) usage_error("attribute needs TEXT_A and TEXT_B, or --data");
    xjac_attribution* raw = nullptr;
    check(xjac_attribute(model.get(), a.text_a.c_str(), a.text_b.c_str(), &opts, &raw));
    AttributionPtr attr(raw);
    char* json = nullptr;
    check(xjac_attribution_to_json(attr.get(), &json));
    write_text(a.out, take(json));
    std::vector<std::string> outputs{a.out};
    if (!a.svg.empty()) {
        char* svg = nullptr;
        check(xjac_attribution_to_svg(attr.get(), &svg));
        write_text(a.svg, take(svg));
        outputs.push_back(a.svg);
    }
    cfg["text_a"] = a.text_a;
    cfg["text_b"] = a.text_b;
    manifest(a.out, "attribute", cfg, 0, started, {a.model}, outputs);
    double score = 0.0, sum = 0.0, error = 0.0;
    xjac_attribution_summary(attr.get(), &score, &sum, &error);
    std::cout << "score " << fmt(score) << ", attribution sum " << fmt(sum) << ", error " << fmt(error) << "\n";
}

// ---- sweep ----

struct SweepArgs {
    std::string model;
    std::string data;
    std::vector<int> layers;
    std::vector<int> steps{10, 50, 100, 500, 1000};
    std::string scheme = "midpoint";
    int batch = 16;
    std::size_t pairs = 0;
    std::string out;
};

void run_sweep(SweepArgs a) {
    const std::string started = now();
    auto model = load_model(a.model);
    auto data = load_data(a.data);
    if (a.layers.empty())
        for (int l = 1; l <= xjac_model_layers(model.get()); ++l) a.layers.push_back(l);
    xjac_attribute_options opts;
    xjac_attribute_options_init(&opts);
    opts.scheme = parse_scheme(a.scheme);
    opts.batch = a.batch;
    char* csv = nullptr;
    check(xjac_sweep(model.get(), data.get(), a.layers.data(), a.layers.size(), a.steps.data(), a.steps.size(),
                     &opts, a.pairs, &csv));
    const std::string text = take(csv);
    write_text(a.out, text);
    ordered_json cfg;
    cfg["layers"] = a.layers;
    cfg["steps"] = a.steps;
    cfg["scheme"] = a.scheme;
    cfg["batch"] = a.batch;
    cfg["pairs"] = a.pairs;
    manifest(a.out, "sweep", cfg, 0, started, {a.model, a.data}, {a.out});
    std::cout << text;
}

// ---- analyze ----

struct AnalyzeArgs {
    std::string input;
    std::string out;
    std::string tags;
    int layer = -1;
    int bins = 50;
    int grid = 100;
    std::vector<double> fractions{0.1, 0.25, 0.5};
    std::string relations;
};

void run_analyze(const std::string& kind, const AnalyzeArgs& a) {
    const std::string started = now();
    ordered_json cfg;
    std::vector<std::string> inputs{a.input};
    std::vector<std::string> outputs{a.out};
    char* csv = nullptr;
    if (kind == "hist") {
        cfg["layer"] = a.layer;
        cfg["bins"] = a.bins;
        check(xjac_analyze_histogram(a.input.c_str(), a.layer, a.bins, &csv));
        write_text(a.out, take(csv));
    } else if (kind == "curve") {
        cfg["grid"] = a.grid;
        check(xjac_analyze_curve(a.input.c_str(), a.grid, &csv));
        write_text(a.out, take(csv));
    } else {
        if (a.tags.empty()) usage_error("analyze pos needs --tags");
        inputs.push_back(a.tags);
        cfg["fractions"] = a.fractions;
        check(xjac_analyze_pos(a.input.c_str(), a.tags.c_str(), a.fractions.data(), a.fractions.size(), &csv));
        write_text(a.out, take(csv));
        if (!a.relations.empty()) {
            cfg["relations"] = a.relations;
            const std::string restricted = a.out + ".restricted.csv";
            check(xjac_analyze_pos_restricted(a.input.c_str(), a.tags.c_str(), a.relations.c_str(), &csv));
            write_text(restricted, take(csv));
            outputs.push_back(restricted);
        }
    }
    manifest(a.out, "analyze " + kind, cfg, 0, started, inputs, outputs);
    std::cout << "wrote " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"xjac: integrated-Jacobian attributions for bi-encoders"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(xjac_version()));

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic scored-pair corpus");
    c_synth->add_option("--pairs", synth.pairs, "Number of pairs")->check(CLI::PositiveNumber);
    c_synth->add_option("--seed", synth.seed, "Random seed");
    c_synth->add_option("--out", synth.out, "Output TSV")->required();
    c_synth->add_option("--tags", synth.tags, "Output POS tag file");

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Train a bi-encoder on scored pairs");
    c_train->add_option("--data", train.data, "Training TSV")->required();
    c_train->add_option("--eval", train.eval, "Evaluation TSV");
    c_train->add_option("--config", train.config, "Encoder config JSON");
    c_train->add_option("--model", train.model, "Continue from this checkpoint");
    c_train->add_option("--objective", train.objective, "dot or cosine")->check(CLI::IsMember({"dot", "cosine"}));
    c_train->add_option("--seed", train.seed, "Random seed");
    c_train->add_option("--epochs", train.epochs, "Epochs");
    c_train->add_option("--batch", train.batch, "Batch size");
    c_train->add_option("--lr", train.lr, "Learning rate");
    c_train->add_option("--min-count", train.min_count, "Minimum token frequency");
    c_train->add_option("--out", train.out, "Output checkpoint")->required();

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("eval", "Spearman correlation of a model on scored pairs");
    c_eval->add_option("--model", eval.model, "Checkpoint")->required();
    c_eval->add_option("--data", eval.data, "TSV")->required();

    AttributeArgs attr;
    auto* c_attr = app.add_subcommand("attribute", "Attribute a score to token pairs");
    c_attr->add_option("--model", attr.model, "Checkpoint")->required();
    c_attr->add_option("text_a", attr.text_a, "First text");
    c_attr->add_option("text_b", attr.text_b, "Second text");
    c_attr->add_option("--layer", attr.layer, "Representation layer (default: L - 1)");
    c_attr->add_option("--steps", attr.steps, "Integration steps N");
    c_attr->add_option("--scheme", attr.scheme, "midpoint, left or trapezoid");
    c_attr->add_option("--batch", attr.batch, "Interpolation nodes per work item");
    c_attr->add_option("--out", attr.out, "Output JSON")->required();
    c_attr->add_option("--svg", attr.svg, "Heatmap SVG");
    c_attr->add_option("--data", attr.data, "Attribute every pair of this TSV into the --out directory");
    c_attr->add_option("--limit", attr.limit, "With --data: only the first pairs");

    SweepArgs sweep;
    auto* c_sweep = app.add_subcommand("sweep", "Attribution error by layer and step count");
    c_sweep->add_option("--model", sweep.model, "Checkpoint")->required();
    c_sweep->add_option("--data", sweep.data, "TSV of pairs")->required();
    c_sweep->add_option("--layers", sweep.layers, "Layers (default: 1..L)")->delimiter(',');
    c_sweep->add_option("--steps", sweep.steps, "Step counts")->delimiter(',');
    c_sweep->add_option("--scheme", sweep.scheme, "midpoint, left or trapezoid");
    c_sweep->add_option("--batch", sweep.batch, "Interpolation nodes per work item");
    c_sweep->add_option("--pairs", sweep.pairs, "Use only the first pairs (0: all)");
    c_sweep->add_option("--out", sweep.out, "Output CSV")->required();

    AnalyzeArgs analyze;
    auto* c_analyze = app.add_subcommand("analyze", "Summaries of attribution outputs");
    c_analyze->require_subcommand(1);
    std::string analyze_kind;
    for (const char* kind : {"hist", "curve", "pos"}) {
        auto* sub = c_analyze->add_subcommand(kind, std::string("Write the ") + kind + " CSV");
        sub->add_option("input", analyze.input, "Attribution JSON file or directory")->required();
        sub->add_option("--out", analyze.out, "Output CSV")->required();
        sub->callback([&analyze_kind, kind] { analyze_kind = kind; });
        if (std::string(kind) == "hist") {
            sub->add_option("--layer", analyze.layer, "Layer (default: every layer present)");
            sub->add_option("--bins", analyze.bins, "Number of bins");
        } else if (std::string(kind) == "curve") {
            sub->add_option("--grid", analyze.grid, "Grid steps between 0 and 100%");
        } else {
            sub->add_option("--tags", analyze.tags, "POS tag file");
            sub->add_option("--fractions", analyze.fractions, "Top fractions")->delimiter(',');
            sub->add_option("--relations", analyze.relations, "Relations for restricted predictions, e.g. NN-NN");
        }
    }

    int code = 0;
    try {
        app.parse(argc, argv);
        if (*c_synth) run_synth(synth);
        if (*c_train) run_train(train);
        if (*c_eval) run_eval(eval);
        if (*c_attr) run_attribute(attr);
        if (*c_sweep) run_sweep(sweep);
        if (*c_analyze) run_analyze(analyze_kind, analyze);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return XJAC_ERR_USAGE;
    } catch (const Failure& f) {
        std::cerr << "xjac: " << f.message << "\n";
        code = static_cast<int>(f.status);
    }
    return code;
}
