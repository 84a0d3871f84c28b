// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "core/tensor.hpp"
#include "core/vocab.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace xjac {

enum class Architecture { Linear, Mlp, Transformer };
enum class Activation { Identity, Tanh, Gelu };
enum class Pooling { Mean };
enum class SimilarityMode { Dot, Cosine };

std::string to_string(Architecture a);
std::string to_string(Activation a);
std::string to_string(SimilarityMode m);
Architecture parse_architecture(const std::string& s);
Activation parse_activation(const std::string& s);
SimilarityMode parse_similarity(const std::string& s);

struct EncoderConfig {
    Architecture architecture = Architecture::Transformer;
    int dim = 32;        // D
    int layers = 3;      // L
    int heads = 4;       // transformer only
    int embed_dim = 32;  // D_emb
    int ff_width = 64;   // transformer feed-forward hidden width
    int max_len = 32;    // rows of the positional table
    Activation activation = Activation::Gelu;
    Pooling pooling = Pooling::Mean;
    // Adjusted models score shifted embeddings e(c) = e'(c) - e'(pad reference).
    bool shifted = true;
    double layer_norm_eps = 1e-5;

    /// Throws UsageError on inconsistent hyperparameters.
    void validate() const;
    /// Activation actually applied by dense blocks (linear blocks never use one).
    [[nodiscard]] Activation block_activation() const {
        return architecture == Architecture::Linear ? Activation::Identity : activation;
    }
};

/// One encoder block. Dense blocks (linear, mlp) use weight/bias; transformer
/// blocks use the pre-norm attention and feed-forward tensors.
struct BlockParams {
    Mat weight, bias;

    Mat ln1_gain, ln1_bias;
    Mat wq, bq, wk, bk, wv, bv, wo, bo;
    Mat ln2_gain, ln2_bias;
    Mat ff1_weight, ff1_bias, ff2_weight, ff2_bias;
};

struct ModelParams {
    Mat token_embedding;     // V x D
    Mat position_embedding;  // max_len x D
    std::vector<BlockParams> blocks;
    Mat head_weight;  // D x D_emb
    Mat head_bias;    // 1 x D_emb
};

/// Visits every tensor of an architecture in checkpoint order:
/// token_embedding, position_embedding, blocks.<i>.<name> for each block,
/// head.weight, head.bias. Within a dense block: weight, bias. Within a
/// transformer block: ln1.gain, ln1.bias, attn.wq, attn.bq, attn.wk, attn.bk,
/// attn.wv, attn.bv, attn.wo, attn.bo, ln2.gain, ln2.bias, ff1.weight,
/// ff1.bias, ff2.weight, ff2.bias.
template <class Params, class Fn>
void for_each_tensor(Params& p, Architecture arch, Fn&& fn) {
    fn(std::string("token_embedding"), p.token_embedding);
    fn(std::string("position_embedding"), p.position_embedding);
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        auto& b = p.blocks[i];
        const std::string pre = "blocks." + std::to_string(i) + ".";
        if (arch == Architecture::Transformer) {
            fn(pre + "ln1.gain", b.ln1_gain);
            fn(pre + "ln1.bias", b.ln1_bias);
            fn(pre + "attn.wq", b.wq);
            fn(pre + "attn.bq", b.bq);
            fn(pre + "attn.wk", b.wk);
            fn(pre + "attn.bk", b.bk);
            fn(pre + "attn.wv", b.wv);
            fn(pre + "attn.bv", b.bv);
            fn(pre + "attn.wo", b.wo);
            fn(pre + "attn.bo", b.bo);
            fn(pre + "ln2.gain", b.ln2_gain);
            fn(pre + "ln2.bias", b.ln2_bias);
            fn(pre + "ff1.weight", b.ff1_weight);
            fn(pre + "ff1.bias", b.ff1_bias);
            fn(pre + "ff2.weight", b.ff2_weight);
            fn(pre + "ff2.bias", b.ff2_bias);
        } else {
            fn(pre + "weight", b.weight);
            fn(pre + "bias", b.bias);
        }
    }
    fn(std::string("head.weight"), p.head_weight);
    fn(std::string("head.bias"), p.head_bias);
}

/// Parameters with the right shapes, all zero. Used for gradients too.
ModelParams zero_params(const EncoderConfig& config, std::size_t vocab_size);

/// Seeded random initialisation.
ModelParams init_params(const EncoderConfig& config, std::size_t vocab_size, std::uint64_t seed);

/// Activations of one sequence at a hook layer. Layer 0 is the input
/// embedding (token + position); layer l is the output of block l.
struct Representation {
    Mat values;  // S x D
    int layer = 0;

    [[nodiscard]] Eigen::Index length() const { return values.rows(); }
    [[nodiscard]] Eigen::Index width() const { return values.cols(); }
};

struct Embedding {
    Vec values;
    bool shifted = false;
};

/// Per-block forward cache; only the fields of the block's architecture are set.
struct BlockCache {
    Mat input;
    Mat pre_activation;  // dense

    Mat ln1_xhat;
    Vec ln1_rstd;
    Mat h, q, k, v;
    std::vector<Mat> probs;  // per head, S x S
    Mat attn;                // concatenated heads before wo
    Mat x1;
    Mat ln2_xhat;
    Vec ln2_rstd;
    Mat g, z1, u;
};

Mat block_forward(const EncoderConfig& config, const BlockParams& block, const Mat& x, BlockCache* cache);

/// Pulls back a stack of K cotangents, each S x D, stored as (K*S) x D. When
/// `grads` is non-null, K must be 1 and parameter gradients are accumulated.
Mat block_backward(const EncoderConfig& config, const BlockParams& block, const BlockCache& cache,
                   const Mat& dy, BlockParams* grads);

/// Siamese encoder: configuration, vocabulary and immutable parameters.
/// All member functions are pure and safe to call concurrently.
class Model {
public:
    Model(EncoderConfig config, Vocabulary vocab, ModelParams params);

    [[nodiscard]] const EncoderConfig& config() const { return config_; }
    [[nodiscard]] const Vocabulary& vocab() const { return vocab_; }
    [[nodiscard]] const ModelParams& params() const { return params_; }
    ModelParams& mutable_params() { return params_; }

    [[nodiscard]] TokenSequence tokenize(std::string_view text) const { return xjac::tokenize(text, vocab_); }

    /// Embedding lookup plus positions, then blocks 1..layer.
    [[nodiscard]] Representation encode_prefix(const TokenSequence& seq, int layer) const;
    /// Remaining blocks, mean pooling, output projection. Unshifted.
    [[nodiscard]] Embedding encode_suffix(const Representation& rep) const;
    /// Same as encode_suffix on a raw matrix at `layer`.
    [[nodiscard]] Vec suffix(const Mat& values, int layer) const;

    [[nodiscard]] Embedding encode(const TokenSequence& seq) const;
    /// e'(seq) - e'(reference_for(seq)).
    [[nodiscard]] Embedding encode_shifted(const TokenSequence& seq) const;
    /// Shifted or raw according to the model configuration.
    [[nodiscard]] Embedding embed(const TokenSequence& seq) const;

    /// Similarity of two sequences. Cosine throws NumericalError on a zero-norm embedding.
    [[nodiscard]] double score(const TokenSequence& a, const TokenSequence& b, SimilarityMode mode,
                               bool shifted) const;
    [[nodiscard]] double score(const TokenSequence& a, const TokenSequence& b, SimilarityMode mode) const {
        return score(a, b, mode, config_.shifted);
    }

    /// Forward through every block with caches, for training.
    struct Trace {
        std::vector<TokenId> ids;
        std::vector<BlockCache> caches;
        Mat output;  // S x D after the last block
        Vec embedding;
    };
    [[nodiscard]] Trace forward_trace(const TokenSequence& seq) const;
    /// Accumulates parameter gradients of d_embedding . e'(seq) into `grads`.
    void backward_trace(const Trace& trace, const Vec& d_embedding, ModelParams& grads) const;

private:
    [[nodiscard]] Mat embed_tokens(const TokenSequence& seq) const;
    void check_layer(int layer) const;

    EncoderConfig config_;
    Vocabulary vocab_;
    ModelParams params_;
};

double cosine(const Vec& a, const Vec& b);

}  // namespace xjac
