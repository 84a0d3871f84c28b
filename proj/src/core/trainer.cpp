// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/trainer.hpp"

#include "core/checkpoint.hpp"
#include "core/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace xjac {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

bool parse_double(const std::string& s, double& out) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    if (b == e) return false;
    const auto res = std::from_chars(s.data() + b, s.data() + e, out);
    return res.ec == std::errc() && res.ptr == s.data() + e;
}

struct AdamState {
    ModelParams m, v;
};

// Weight matrices and embedding tables decay; biases and norm gains do not.
bool decays(const std::string& name) {
    const std::string leaf = name.substr(name.rfind('.') + 1);
    return leaf != "bias" && leaf != "gain" && leaf != "bq" && leaf != "bk" && leaf != "bv" && leaf != "bo";
}

}  // namespace

std::vector<Pair> parse_dataset(const std::string& contents) {
    std::vector<Pair> pairs;
    std::istringstream in(contents);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto cols = split_tabs(line);
        if (cols.size() != 3)
            throw DataError("line " + std::to_string(line_no) + ": expected 3 tab-separated columns, got " +
                            std::to_string(cols.size()));
        double label = 0.0;
        if (!parse_double(cols[2], label)) {
            if (pairs.empty() && line_no == 1) continue;  // header
            throw DataError("line " + std::to_string(line_no) + ": score '" + cols[2] + "' is not a number");
        }
        if (!std::isfinite(label) || label < 0.0 || label > 1.0)
            throw DataError("line " + std::to_string(line_no) + ": score " + cols[2] + " outside [0, 1]");
        if (split_words(cols[0], false).empty() || split_words(cols[1], false).empty())
            throw DataError("line " + std::to_string(line_no) + ": empty text");
        pairs.push_back({cols[0], cols[1], label});
    }
    if (pairs.empty()) throw DataError("dataset contains no pairs");
    return pairs;
}

std::vector<Pair> load_dataset(const std::string& path) { return parse_dataset(read_file(path)); }

std::string format_dataset(const std::vector<Pair>& pairs) {
    std::ostringstream out;
    out << "text_a\ttext_b\tscore\n";
    for (const auto& p : pairs) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, p.label);
        out << p.text_a << '\t' << p.text_b << '\t' << std::string(buf, res.ptr) << '\n';
    }
    return out.str();
}

std::string to_string(Objective o) { return o == Objective::DotShifted ? "dot" : "cosine"; }

Objective parse_objective(const std::string& s) {
    if (s == "dot") return Objective::DotShifted;
    if (s == "cosine") return Objective::Cosine;
    throw UsageError("unknown objective '" + s + "' (expected dot or cosine)");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw UsageError("epochs must be positive");
    if (batch_size < 1) throw UsageError("batch size must be positive");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw UsageError("learning rate must be >= 0");
    if (!(weight_decay >= 0.0)) throw UsageError("weight decay must be >= 0");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw UsageError("warmup fraction must be in [0, 1)");
}

TrainResult train(Model& model, const std::vector<Pair>& data, const TrainConfig& config,
                  const StepCallback& on_step) {
    config.validate();
    if (data.empty()) throw UsageError("training data is empty");
    const bool shifted = model.config().shifted;
    if (config.objective == Objective::Cosine && shifted)
        throw UsageError(
            "cosine objective on shifted embeddings is undefined: the reference maps to the zero vector; "
            "use a model configured with \"shifted\": false");

    std::vector<TokenSequence> seq_a, seq_b;
    for (const auto& p : data) {
        seq_a.push_back(model.tokenize(p.text_a));
        seq_b.push_back(model.tokenize(p.text_b));
    }

    const auto arch = model.config().architecture;
    const auto vocab_size = model.vocab().size();
    AdamState adam{zero_params(model.config(), vocab_size), zero_params(model.config(), vocab_size)};
    std::vector<std::string> names;
    for_each_tensor(adam.m, arch, [&](const std::string& name, Mat&) { names.push_back(name); });

    const int batches_per_epoch = static_cast<int>((data.size() + config.batch_size - 1) / config.batch_size);
    const int total_steps = batches_per_epoch * config.epochs;
    const int warmup_steps = static_cast<int>(std::floor(config.warmup_fraction * total_steps));

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    int step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (int batch = 0; batch < batches_per_epoch; ++batch) {
            const std::size_t begin = static_cast<std::size_t>(batch) * config.batch_size;
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            const auto count = static_cast<double>(end - begin);

            ModelParams grads = zero_params(model.config(), vocab_size);
            // Reference traces are shared by all sequences of one length.
            std::map<std::size_t, Model::Trace> ref_traces;
            std::map<std::size_t, Vec> ref_cotangents;
            auto ref_trace = [&](std::size_t len) -> const Model::Trace& {
                auto it = ref_traces.find(len);
                if (it == ref_traces.end()) {
                    TokenSequence ref;
                    ref.ids.assign(len, kPadId);
                    it = ref_traces.emplace(len, model.forward_trace(ref)).first;
                    ref_cotangents.emplace(len, Vec::Zero(model.config().embed_dim));
                }
                return it->second;
            };

            double batch_loss = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                const std::size_t idx = order[i];
                const Model::Trace ta = model.forward_trace(seq_a[idx]);
                const Model::Trace tb = model.forward_trace(seq_b[idx]);
                Vec ea = ta.embedding, eb = tb.embedding;
                if (shifted) {
                    ea -= ref_trace(seq_a[idx].size()).embedding;
                    eb -= ref_trace(seq_b[idx].size()).embedding;
                }
                double pred = 0.0;
                Vec da, db;
                const double label = data[idx].label;
                if (config.objective == Objective::DotShifted) {
                    pred = ea.dot(eb);
                    const double g = 2.0 * (pred - label) / count;
                    da = g * eb;
                    db = g * ea;
                } else {
                    const double na = ea.norm(), nb = eb.norm();
                    if (na == 0.0 || nb == 0.0)
                        throw NumericalError("zero-norm embedding in cosine objective (epoch " +
                                             std::to_string(epoch + 1) + ", batch " + std::to_string(batch + 1) + ")");
                    pred = ea.dot(eb) / (na * nb);
                    const double g = 2.0 * (pred - label) / count;
                    da = g * (eb / (na * nb) - pred * ea / (na * na));
                    db = g * (ea / (na * nb) - pred * eb / (nb * nb));
                }
                const double loss = (pred - label) * (pred - label);
                if (!std::isfinite(loss))
                    throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                         std::to_string(batch + 1));
                batch_loss += loss;
                model.backward_trace(ta, da, grads);
                model.backward_trace(tb, db, grads);
                if (shifted) {
                    ref_cotangents[seq_a[idx].size()] -= da;
                    ref_cotangents[seq_b[idx].size()] -= db;
                }
            }
            for (const auto& [len, cot] : ref_cotangents) model.backward_trace(ref_traces.at(len), cot, grads);
            epoch_loss += batch_loss;

            const double lr = warmup_steps > 0 && step < warmup_steps
                                  ? config.learning_rate * static_cast<double>(step + 1) / warmup_steps
                                  : config.learning_rate;
            const double bc1 = 1.0 - std::pow(config.beta1, step + 1);
            const double bc2 = 1.0 - std::pow(config.beta2, step + 1);

            std::vector<Mat*> gp, mp, vp;
            for_each_tensor(grads, arch, [&](const std::string&, Mat& t) { gp.push_back(&t); });
            for_each_tensor(adam.m, arch, [&](const std::string&, Mat& t) { mp.push_back(&t); });
            for_each_tensor(adam.v, arch, [&](const std::string&, Mat& t) { vp.push_back(&t); });
            std::size_t ti = 0;
            for_each_tensor(model.mutable_params(), arch, [&](const std::string&, Mat& p) {
                const Mat& g = *gp[ti];
                Mat& m = *mp[ti];
                Mat& v = *vp[ti];
                if (decays(names[ti])) p *= 1.0 - lr * config.weight_decay;
                m = config.beta1 * m + (1.0 - config.beta1) * g;
                v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
                p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config.adam_eps);
                ++ti;
            });
            if (on_step) on_step(step, model);
            ++step;
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(data.size()));
    }
    return result;
}

double spearman(std::span<const double> predictions, std::span<const double> labels) {
    if (predictions.size() != labels.size()) throw UsageError("spearman: length mismatch");
    if (predictions.size() < 2) throw UsageError("spearman: need at least two points");
    auto ranks = [](std::span<const double> x) {
        std::vector<std::size_t> idx(x.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
        std::vector<double> r(x.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rp = ranks(predictions);
    const auto rl = ranks(labels);
    const auto n = static_cast<double>(rp.size());
    const double mp = std::accumulate(rp.begin(), rp.end(), 0.0) / n;
    const double ml = std::accumulate(rl.begin(), rl.end(), 0.0) / n;
    double cov = 0.0, vp = 0.0, vl = 0.0;
    for (std::size_t i = 0; i < rp.size(); ++i) {
        cov += (rp[i] - mp) * (rl[i] - ml);
        vp += (rp[i] - mp) * (rp[i] - mp);
        vl += (rl[i] - ml) * (rl[i] - ml);
    }
    if (vp == 0.0 || vl == 0.0) throw NumericalError("spearman: constant input has zero rank variance");
    return std::clamp(cov / std::sqrt(vp * vl), -1.0, 1.0);
}

std::vector<double> predict(const Model& model, const std::vector<Pair>& data, SimilarityMode mode) {
    if (data.empty()) throw UsageError("evaluation data is empty");
    std::vector<double> out;
    out.reserve(data.size());
    for (const auto& p : data) out.push_back(model.score(model.tokenize(p.text_a), model.tokenize(p.text_b), mode));
    return out;
}

double evaluate(const Model& model, const std::vector<Pair>& data, SimilarityMode mode) {
    const auto preds = predict(model, data, mode);
    std::vector<double> labels;
    for (const auto& p : data) labels.push_back(p.label);
    return spearman(preds, labels);
}

std::string loss_trace_csv(const TrainResult& result) {
    std::ostringstream out;
    out << "epoch,mean_loss\n";
    for (std::size_t i = 0; i < result.epoch_loss.size(); ++i) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, result.epoch_loss[i]);
        out << (i + 1) << ',' << std::string(buf, res.ptr) << '\n';
    }
    return out.str();
}

}  // namespace xjac
