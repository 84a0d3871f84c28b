// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "core/encoder.hpp"
#include "core/tensor.hpp"

namespace xjac {

/// A differentiable map from an S x D representation to an embedding. The
/// attribution engine only sees tails, so analytic maps can stand in for the
/// encoder in tests.
class Tail {
public:
    virtual ~Tail() = default;

    [[nodiscard]] virtual Eigen::Index output_dim() const = 0;
    [[nodiscard]] virtual Vec evaluate(const Mat& rep) const = 0;
    /// output_dim x (S*D), column index s*D + d.
    [[nodiscard]] virtual Mat jacobian(const Mat& rep) const = 0;
    /// Gradient of rep -> cotangent . evaluate(rep), flattened.
    [[nodiscard]] virtual Vec vjp(const Mat& rep, const Vec& cotangent) const {
        return jacobian(rep).transpose() * cotangent;
    }
};

/// Layers l+1..L of a model, mean pooling and the output head.
class EncoderTail final : public Tail {
public:
    EncoderTail(const Model& model, int layer);

    [[nodiscard]] Eigen::Index output_dim() const override { return model_.config().embed_dim; }
    [[nodiscard]] Vec evaluate(const Mat& rep) const override { return model_.suffix(rep, layer_); }
    /// One reverse sweep carrying all D_emb cotangents at once.
    [[nodiscard]] Mat jacobian(const Mat& rep) const override;
    [[nodiscard]] Vec vjp(const Mat& rep, const Vec& cotangent) const override;

    [[nodiscard]] int layer() const { return layer_; }
    [[nodiscard]] const Model& model() const { return model_; }

private:
    [[nodiscard]] Mat pull_back(const Mat& rep, const Mat& seeds) const;

    const Model& model_;
    int layer_;
};

struct Jacobian {
    Mat values;  // D_emb x (S*D)
    int layer = 0;
};

/// Exact Jacobian of encode_suffix at `rep`.
Jacobian suffix_jacobian(const Model& model, const Representation& rep);

inline constexpr double kDefaultFiniteDiffStep = 1e-4;

/// Central differences, one pair of evaluations per input component.
Mat finite_diff_jacobian(const Tail& tail, const Mat& rep, double step = kDefaultFiniteDiffStep);
Jacobian finite_diff_jacobian(const Model& model, const Representation& rep, double step = kDefaultFiniteDiffStep);

/// Gradient of x -> encode_suffix(x) . b_embedding at rep_a.
Vec score_gradient(const Model& model, const Representation& rep_a, const Embedding& b_embedding);

/// max |x - y| / max(max |y|, tiny). Used to compare Jacobians.
double max_relative_error(const Mat& x, const Mat& y);

}  // namespace xjac
