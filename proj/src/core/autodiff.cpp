// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/autodiff.hpp"

#include "core/errors.hpp"

#include <algorithm>
#include <limits>

namespace xjac {

EncoderTail::EncoderTail(const Model& model, int layer) : model_(model), layer_(layer) {
    if (layer < 0 || layer > model.config().layers)
        throw UsageError("layer " + std::to_string(layer) + " out of range 0.." +
                         std::to_string(model.config().layers));
}

// seeds: K x D rows of d(loss)/d(pooled output); returns (K*S) x D stacked
// cotangents of the representation at layer_.
Mat EncoderTail::pull_back(const Mat& rep, const Mat& seeds) const {
    const auto& config = model_.config();
    const auto& params = model_.params();
    if (rep.cols() != config.dim || rep.rows() < 1)
        throw UsageError("representation shape does not match the encoder width");
    const Eigen::Index s = rep.rows();
    const Eigen::Index k = seeds.rows();

    std::vector<BlockCache> caches(static_cast<std::size_t>(config.layers - layer_));
    Mat x = rep;
    for (int l = layer_; l < config.layers; ++l) {
        x = block_forward(config, params.blocks[l], x, &caches[l - layer_]);
        if (!x.allFinite()) throw NumericalError("non-finite activation at layer " + std::to_string(l + 1));
    }

    Mat dx(k * s, config.dim);
    for (Eigen::Index i = 0; i < k; ++i)
        dx.middleRows(i * s, s) = (seeds.row(i) / static_cast<double>(s)).replicate(s, 1);
    for (int l = config.layers - 1; l >= layer_; --l) {
        dx = block_backward(config, params.blocks[l], caches[l - layer_], dx, nullptr);
        if (!dx.allFinite()) throw NumericalError("non-finite derivative at layer " + std::to_string(l + 1));
    }
    return dx;
}

Mat EncoderTail::jacobian(const Mat& rep) const {
    // Seed k is row k of head_weight^T; the stacked block k, read row-major,
    // is row k of the Jacobian.
    const Mat seeds = model_.params().head_weight.transpose();
    Mat stacked = pull_back(rep, seeds);
    const Eigen::Index k = seeds.rows();
    return Eigen::Map<Mat>(stacked.data(), k, rep.size());
}

Vec EncoderTail::vjp(const Mat& rep, const Vec& cotangent) const {
    const Mat seed = (model_.params().head_weight * cotangent).transpose();
    Mat stacked = pull_back(rep, seed);
    return Eigen::Map<Vec>(stacked.data(), stacked.size());
}

Jacobian suffix_jacobian(const Model& model, const Representation& rep) {
    return {EncoderTail(model, rep.layer).jacobian(rep.values), rep.layer};
}

Mat finite_diff_jacobian(const Tail& tail, const Mat& rep, double step) {
    if (!(step > 0.0)) throw UsageError("finite-difference step must be positive");
    const Eigen::Index n = rep.size();
    Mat jac(tail.output_dim(), n);
    Mat probe = rep;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double orig = probe.data()[i];
        probe.data()[i] = orig + step;
        const Vec plus = tail.evaluate(probe);
        probe.data()[i] = orig - step;
        const Vec minus = tail.evaluate(probe);
        probe.data()[i] = orig;
        jac.col(i) = (plus - minus) / (2.0 * step);
    }
    return jac;
}

Jacobian finite_diff_jacobian(const Model& model, const Representation& rep, double step) {
    return {finite_diff_jacobian(EncoderTail(model, rep.layer), rep.values, step), rep.layer};
}

Vec score_gradient(const Model& model, const Representation& rep_a, const Embedding& b_embedding) {
    if (b_embedding.values.size() != model.config().embed_dim)
        throw UsageError("embedding width does not match the model");
    return EncoderTail(model, rep_a.layer).vjp(rep_a.values, b_embedding.values);
}

double max_relative_error(const Mat& x, const Mat& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) throw UsageError("shape mismatch");
    const double scale = std::max(y.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    return (x - y).cwiseAbs().maxCoeff() / scale;
}

}  // namespace xjac
