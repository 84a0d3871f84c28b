// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/attribution.hpp"

#include "core/errors.hpp"
#include "core/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace xjac {

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::Midpoint: return "midpoint";
        case Scheme::Left: return "left";
        case Scheme::Trapezoid: return "trapezoid";
    }
    return "?";
}

Scheme parse_scheme(const std::string& s) {
    if (s == "midpoint") return Scheme::Midpoint;
    if (s == "left") return Scheme::Left;
    if (s == "trapezoid") return Scheme::Trapezoid;
    throw UsageError("unknown scheme '" + s + "' (expected midpoint, left or trapezoid)");
}

void PathSpec::validate() const {
    if (steps < 1) throw UsageError("step count must be at least 1");
    if (reference.rows() != input.rows() || reference.cols() != input.cols())
        throw UsageError("path reference and input shapes differ");
}

double PathSpec::alpha(int n) const {
    const auto big_n = static_cast<double>(steps);
    switch (scheme) {
        case Scheme::Midpoint: return (n - 0.5) / big_n;
        case Scheme::Left:
        case Scheme::Trapezoid: return (n - 1) / big_n;
    }
    return 0.0;
}

double PathSpec::weight(int n) const {
    const double w = 1.0 / static_cast<double>(steps);
    if (scheme == Scheme::Trapezoid && (n == 1 || n == steps + 1)) return 0.5 * w;
    return w;
}

Mat interpolation_point(const PathSpec& path, int n) {
    path.validate();
    if (n < 1 || n > path.node_count())
        throw UsageError("node index " + std::to_string(n) + " outside 1.." + std::to_string(path.node_count()));
    if (path.scheme != Scheme::Midpoint && n == 1) return path.reference;
    return path.reference + path.alpha(n) * (path.input - path.reference);
}

namespace {

// Sum of w_n * term(x_n) over all path nodes with a fixed reduction order:
// in-order within batches of `batch` nodes, then batch sums in order. Work
// proceeds in waves of `threads` batches so memory stays bounded.
template <class Term>
Mat path_sum(const PathSpec& path, const EngineOptions& options, Eigen::Index rows, Eigen::Index cols, Term&& term) {
    path.validate();
    if (options.batch < 1) throw UsageError("batch size must be at least 1");
    const int nodes = path.node_count();
    const int batch = options.batch;
    const int num_batches = (nodes + batch - 1) / batch;
    const int threads = resolve_threads(options.threads);

    Mat total = Mat::Zero(rows, cols);
    std::vector<Mat> partial(static_cast<std::size_t>(std::min(threads, num_batches)));
    for (int wave = 0; wave < num_batches; wave += static_cast<int>(partial.size())) {
        const int in_wave = std::min(static_cast<int>(partial.size()), num_batches - wave);
        parallel_for(static_cast<std::size_t>(in_wave), threads, [&](std::size_t slot) {
            const int b = wave + static_cast<int>(slot);
            Mat acc = Mat::Zero(rows, cols);
            for (int n = b * batch + 1; n <= std::min(nodes, (b + 1) * batch); ++n)
                acc += path.weight(n) * term(interpolation_point(path, n));
            partial[slot] = std::move(acc);
        });
        for (int slot = 0; slot < in_wave; ++slot) total += partial[static_cast<std::size_t>(slot)];
    }
    return total;
}

void check_same_shape(const Mat& x, const Mat& y, const char* what) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) throw UsageError(std::string(what) + ": shape mismatch");
}

// Column block sums: (K x S*D) -> (K x S).
Mat token_columns(const Mat& m, Eigen::Index dim) {
    const Eigen::Index s = m.cols() / dim;
    Mat out(m.rows(), s);
    for (Eigen::Index t = 0; t < s; ++t) out.col(t) = m.middleCols(t * dim, dim).rowwise().sum();
    return out;
}

}  // namespace

IntegratedJacobian integrated_jacobian(const Tail& tail, const PathSpec& path, const EngineOptions& options,
                                       int layer) {
    Mat values = path_sum(path, options, tail.output_dim(), path.input.size(),
                          [&](const Mat& x) { return tail.jacobian(x); });
    if (!values.allFinite()) throw NumericalError("non-finite integrated Jacobian");
    return {std::move(values), layer, path.steps, path.scheme};
}

Mat attribution_matrix(const Mat& ja, const Mat& jb, const Mat& a, const Mat& r_a, const Mat& b, const Mat& r_b) {
    check_same_shape(a, r_a, "attribution_matrix(a, r_a)");
    check_same_shape(b, r_b, "attribution_matrix(b, r_b)");
    if (ja.rows() != jb.rows() || ja.cols() != a.size() || jb.cols() != b.size())
        throw UsageError("attribution_matrix: Jacobian shapes inconsistent with inputs");
    const Vec da = flatten(a) - flatten(r_a);
    const Vec db = flatten(b) - flatten(r_b);
    Mat full = ja.transpose() * jb;
    full.array().colwise() *= da.array();
    full.array().rowwise() *= db.transpose().array();
    return full;
}

Mat reduce_token_token(const Mat& full, Eigen::Index dim) {
    if (dim < 1 || full.rows() % dim != 0 || full.cols() % dim != 0)
        throw UsageError("matrix dimensions are not divisible by the embedding width");
    const Eigen::Index sa = full.rows() / dim;
    const Eigen::Index sb = full.cols() / dim;
    Mat out(sa, sb);
    for (Eigen::Index s = 0; s < sa; ++s) {
        for (Eigen::Index t = 0; t < sb; ++t) {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < dim; ++i)
                for (Eigen::Index j = 0; j < dim; ++j) acc += full(s * dim + i, t * dim + j);
            out(s, t) = acc;
        }
    }
    return out;
}

double matrix_total(const Mat& m) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) acc += m(r, c);
    return acc;
}

double blockwise_total(const Mat& full, Eigen::Index dim) { return matrix_total(reduce_token_token(full, dim)); }

AttributionOutput attribute_representations(const Tail& tail, const Mat& a, const Mat& r_a, const Mat& b,
                                            const Mat& r_b, const AttributeOptions& options) {
    check_same_shape(a, r_a, "attribute(a, r_a)");
    check_same_shape(b, r_b, "attribute(b, r_b)");
    if (a.cols() != b.cols()) throw UsageError("attribute: representation widths differ");
    const Eigen::Index dim = a.cols();

    AttributionOutput out;
    out.layer = options.layer;
    out.steps = options.steps;
    out.scheme = options.scheme;

    const Vec ea = tail.evaluate(a) - tail.evaluate(r_a);
    const Vec eb = tail.evaluate(b) - tail.evaluate(r_b);
    out.score = ea.dot(eb);

    const Mat ja = integrated_jacobian(tail, {r_a, a, options.steps, options.scheme}, options.engine).values;
    const Mat jb = integrated_jacobian(tail, {r_b, b, options.steps, options.scheme}, options.engine).values;

    if (options.full_matrix) {
        Mat full = attribution_matrix(ja, jb, a, r_a, b, r_b);
        out.token_matrix = reduce_token_token(full, dim);
        out.full_matrix = std::move(full);
    } else {
        // Sum (a - r_a)-scaled Jacobian columns per token first, then one
        // small product; avoids the (S_a*D) x (S_b*D) matrix.
        Mat ua = ja;
        ua.array().rowwise() *= (flatten(a) - flatten(r_a)).transpose().array();
        Mat ub = jb;
        ub.array().rowwise() *= (flatten(b) - flatten(r_b)).transpose().array();
        out.token_matrix = token_columns(ua, dim).transpose() * token_columns(ub, dim);
    }
    if (!out.token_matrix.allFinite()) throw NumericalError("non-finite attribution matrix");
    out.attribution_sum = matrix_total(out.token_matrix);
    out.error = std::abs(out.score - out.attribution_sum);
    return out;
}

AttributionOutput attribute(const Model& model, const TokenSequence& a, const TokenSequence& b,
                            const AttributeOptions& options) {
    if (!model.config().shifted)
        throw UsageError("model scores unshifted embeddings; attributions require an adjusted (shifted) model");
    if (options.steps < 1) throw UsageError("step count must be at least 1");
    const EncoderTail tail(model, options.layer);
    const Representation ra = model.encode_prefix(a, options.layer);
    const Representation rb = model.encode_prefix(b, options.layer);
    const Representation refa = model.encode_prefix(reference_for(a), options.layer);
    const Representation refb = model.encode_prefix(reference_for(b), options.layer);
    AttributionOutput out = attribute_representations(tail, ra.values, refa.values, rb.values, refb.values, options);
    out.tokens_a = a.words;
    out.tokens_b = b.words;
    return out;
}

DecompositionResult decomposition_check(const Tail& tail, const Mat& a, const Mat& r_a, const Mat& b,
                                        const Mat& r_b, const AttributeOptions& options) {
    AttributeOptions opts = options;
    opts.full_matrix = false;
    const AttributionOutput attr = attribute_representations(tail, a, r_a, b, r_b, opts);
    const Vec ea = tail.evaluate(a), era = tail.evaluate(r_a);
    const Vec eb = tail.evaluate(b), erb = tail.evaluate(r_b);
    DecompositionResult res;
    res.score = ea.dot(eb);
    res.four_term = ea.dot(eb) - ea.dot(erb) - era.dot(eb) + era.dot(erb);
    res.attribution_sum = attr.attribution_sum;
    res.residual = res.attribution_sum - res.four_term;
    return res;
}

DecompositionResult decomposition_check(const Model& model, const TokenSequence& a, const TokenSequence& b,
                                        const AttributeOptions& options, const std::optional<Mat>& r_a,
                                        const std::optional<Mat>& r_b) {
    const EncoderTail tail(model, options.layer);
    const Mat xa = model.encode_prefix(a, options.layer).values;
    const Mat xb = model.encode_prefix(b, options.layer).values;
    const Mat ref_a = r_a ? *r_a : model.encode_prefix(reference_for(a), options.layer).values;
    const Mat ref_b = r_b ? *r_b : model.encode_prefix(reference_for(b), options.layer).values;
    return decomposition_check(tail, xa, ref_a, xb, ref_b, options);
}

Vec integrated_gradients_single(const Tail& tail, const Mat& a, const Mat& r_a, const Vec& b_embedding, int steps,
                                Scheme scheme, const EngineOptions& options) {
    check_same_shape(a, r_a, "integrated_gradients_single");
    if (b_embedding.size() != tail.output_dim()) throw UsageError("embedding width does not match the tail");
    const PathSpec path{r_a, a, steps, scheme};
    const Mat grad = path_sum(path, options, a.size(), 1, [&](const Mat& x) -> Mat {
        return tail.vjp(x, b_embedding);
    });
    Vec out = (flatten(a) - flatten(r_a)).array() * grad.col(0).array();
    return out;
}

Vec integrated_gradients_single(const Model& model, const TokenSequence& a, const TokenSequence& b, int layer,
                                int steps, Scheme scheme, const EngineOptions& options) {
    const EncoderTail tail(model, layer);
    const Mat xa = model.encode_prefix(a, layer).values;
    const Mat ref_a = model.encode_prefix(reference_for(a), layer).values;
    return integrated_gradients_single(tail, xa, ref_a, model.encode_shifted(b).values, steps, scheme, options);
}

std::vector<SweepRow> convergence_sweep(const Model& model,
                                        const std::vector<std::pair<TokenSequence, TokenSequence>>& pairs,
                                        const std::vector<int>& layers, const std::vector<int>& steps, Scheme scheme,
                                        const EngineOptions& options) {
    if (pairs.empty() || layers.empty() || steps.empty())
        throw UsageError("convergence sweep needs pairs, layers and step counts");
    std::vector<SweepRow> rows;
    for (int layer : layers) {
        for (int n : steps) {
            AttributeOptions opts;
            opts.layer = layer;
            opts.steps = n;
            opts.scheme = scheme;
            opts.engine = options;
            std::vector<double> abs_err, rel_err;
            for (const auto& [a, b] : pairs) {
                const AttributionOutput out = attribute(model, a, b, opts);
                abs_err.push_back(out.error);
                if (out.score != 0.0) rel_err.push_back(out.error / std::abs(out.score));
            }
            SweepRow row;
            row.layer = layer;
            row.steps = n;
            row.pairs = pairs.size();
            double sum = 0.0;
            for (double e : abs_err) sum += e;
            row.mean_abs_error = sum / static_cast<double>(abs_err.size());
            double var = 0.0;
            for (double e : abs_err) var += (e - row.mean_abs_error) * (e - row.mean_abs_error);
            row.std_abs_error = std::sqrt(var / static_cast<double>(abs_err.size()));
            double rsum = 0.0;
            for (double e : rel_err) rsum += e;
            row.mean_rel_error = rel_err.empty() ? 0.0 : rsum / static_cast<double>(rel_err.size());
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace xjac
