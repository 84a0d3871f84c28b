// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "core/autodiff.hpp"
#include "core/encoder.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace xjac {

/// Placement of the interpolation nodes along the straight path.
///   midpoint:  N nodes at (n - 1/2) / N, weight 1/N
///   left:      N nodes at (n - 1) / N, weight 1/N
///   trapezoid: N + 1 nodes at (n - 1) / N, weight 1/N with both ends halved
enum class Scheme { Midpoint, Left, Trapezoid };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

struct PathSpec {
    Mat reference;
    Mat input;
    int steps = 1;
    Scheme scheme = Scheme::Midpoint;

    void validate() const;
    /// Number of evaluation nodes (N, or N + 1 for the trapezoid rule).
    [[nodiscard]] int node_count() const { return scheme == Scheme::Trapezoid ? steps + 1 : steps; }
    /// Position alpha of node n, 1-based.
    [[nodiscard]] double alpha(int n) const;
    [[nodiscard]] double weight(int n) const;
};

/// r + alpha_n (x - r). Throws UsageError when n is outside 1..node_count().
Mat interpolation_point(const PathSpec& path, int n);

struct EngineOptions {
    int batch = 16;   // interpolation nodes per work item
    int threads = 0;  // 0: hardware concurrency, capped by XJAC_THREADS
};

struct IntegratedJacobian {
    Mat values;  // D_emb x (S*D)
    int layer = 0;
    int steps = 0;
    Scheme scheme = Scheme::Midpoint;
};

/// Weighted average of the tail Jacobian over the path nodes. Nodes are
/// summed in order within each batch and batch sums are added in batch
/// order, so the result does not depend on the worker count.
IntegratedJacobian integrated_jacobian(const Tail& tail, const PathSpec& path, const EngineOptions& options = {},
                                       int layer = 0);

/// A_ij = (a - r_a)_i (Ja^T Jb)_ij (b - r_b)_j, with (S_a*D) x (S_b*D) shape.
Mat attribution_matrix(const Mat& ja, const Mat& jb, const Mat& a, const Mat& r_a, const Mat& b, const Mat& r_b);

/// Sums D x D blocks into an S_a x S_b matrix. Throws UsageError when the
/// shape is not divisible by D.
Mat reduce_token_token(const Mat& full, Eigen::Index dim);

/// Row-major running sum.
double matrix_total(const Mat& m);
/// Sum of a full matrix accumulated block by block in the order used by
/// reduce_token_token followed by matrix_total; equal to it bit for bit.
double blockwise_total(const Mat& full, Eigen::Index dim);

struct AttributionOutput {
    Mat token_matrix;               // S_a x S_b
    std::optional<Mat> full_matrix;  // (S_a*D) x (S_b*D), on request
    double score = 0.0;
    double attribution_sum = 0.0;
    double error = 0.0;  // |score - attribution_sum|
    int layer = 0;
    int steps = 0;
    Scheme scheme = Scheme::Midpoint;
    std::vector<std::string> tokens_a;
    std::vector<std::string> tokens_b;
};

struct AttributeOptions {
    int layer = 0;
    int steps = 100;
    Scheme scheme = Scheme::Midpoint;
    bool full_matrix = false;
    EngineOptions engine;
};

/// Pairwise attribution of the shifted dot-product score
/// s = (t(a) - t(r_a)) . (t(b) - t(r_b)) for an arbitrary tail t.
AttributionOutput attribute_representations(const Tail& tail, const Mat& a, const Mat& r_a, const Mat& b,
                                            const Mat& r_b, const AttributeOptions& options);

/// Model entry point: pad references, representations at options.layer,
/// shifted tail. Requires a model trained with shifted embeddings.
AttributionOutput attribute(const Model& model, const TokenSequence& a, const TokenSequence& b,
                            const AttributeOptions& options);

struct DecompositionResult {
    double attribution_sum = 0.0;
    /// f(a,b) - f(a,r_b) - f(r_a,b) + f(r_a,r_b) with unshifted dot scoring.
    double four_term = 0.0;
    double residual = 0.0;  // attribution_sum - four_term
    double score = 0.0;     // unshifted f(a,b)
};

DecompositionResult decomposition_check(const Tail& tail, const Mat& a, const Mat& r_a, const Mat& b,
                                        const Mat& r_b, const AttributeOptions& options);

/// Model form; references default to pad sequences encoded to the layer.
DecompositionResult decomposition_check(const Model& model, const TokenSequence& a, const TokenSequence& b,
                                        const AttributeOptions& options, const std::optional<Mat>& r_a = std::nullopt,
                                        const std::optional<Mat>& r_b = std::nullopt);

/// Single-input integrated gradients of x -> (t(x) - t(r_a)) . b_embedding,
/// flattened over a's features. Sums to f(a,b) - f(r_a,b) as N grows.
Vec integrated_gradients_single(const Tail& tail, const Mat& a, const Mat& r_a, const Vec& b_embedding,
                                int steps, Scheme scheme = Scheme::Midpoint, const EngineOptions& options = {});

/// Model form with the shifted embedding of b held fixed.
Vec integrated_gradients_single(const Model& model, const TokenSequence& a, const TokenSequence& b, int layer,
                                int steps, Scheme scheme = Scheme::Midpoint, const EngineOptions& options = {});

struct SweepRow {
    int layer = 0;
    int steps = 0;
    double mean_abs_error = 0.0;
    double std_abs_error = 0.0;  // population standard deviation
    double mean_rel_error = 0.0;  // over pairs with nonzero score
    std::size_t pairs = 0;
};

/// Rows ordered by layer (as given), then steps (as given).
std::vector<SweepRow> convergence_sweep(const Model& model,
                                        const std::vector<std::pair<TokenSequence, TokenSequence>>& pairs,
                                        const std::vector<int>& layers, const std::vector<int>& steps,
                                        Scheme scheme = Scheme::Midpoint, const EngineOptions& options = {});

}  // namespace xjac
