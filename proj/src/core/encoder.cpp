// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/encoder.hpp"

#include "core/errors.hpp"

#include <cmath>
#include <random>

namespace xjac {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double activate(Activation act, double z) {
    switch (act) {
        case Activation::Identity: return z;
        case Activation::Tanh: return std::tanh(z);
        case Activation::Gelu: return 0.5 * z * (1.0 + std::erf(z * kInvSqrt2));
    }
    return z;
}

double activate_grad(Activation act, double z) {
    switch (act) {
        case Activation::Identity: return 1.0;
        case Activation::Tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::Gelu:
            return 0.5 * (1.0 + std::erf(z * kInvSqrt2)) + z * kInvSqrt2Pi * std::exp(-0.5 * z * z);
    }
    return 1.0;
}

Mat apply(Activation act, const Mat& z) {
    if (act == Activation::Identity) return z;
    return z.unaryExpr([act](double v) { return activate(act, v); });
}

Mat apply_grad(Activation act, const Mat& z) {
    return z.unaryExpr([act](double v) { return activate_grad(act, v); });
}

Mat layer_norm(const Mat& x, const Mat& gain, const Mat& bias, double eps, Mat& xhat, Vec& rstd) {
    const auto n = static_cast<double>(x.cols());
    xhat.resize(x.rows(), x.cols());
    rstd.resize(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mean = x.row(r).sum() / n;
        const RowVec centered = x.row(r).array() - mean;
        const double var = centered.squaredNorm() / n;
        rstd[r] = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = centered * rstd[r];
    }
    Mat y = xhat.array().rowwise() * gain.row(0).array();
    y.rowwise() += bias.row(0);
    return y;
}

// dy is a stack of K blocks of S rows; row r uses cached row r % S.
Mat layer_norm_backward(const Mat& dy, const Mat& xhat, const Vec& rstd, const Mat& gain, Mat* dgain,
                        Mat* dbias) {
    const Eigen::Index s = xhat.rows();
    const auto n = static_cast<double>(xhat.cols());
    Mat dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        const Eigen::Index c = r % s;
        const RowVec dxhat = dy.row(r).array() * gain.row(0).array();
        const double m1 = dxhat.sum() / n;
        const double m2 = dxhat.dot(xhat.row(c)) / n;
        dx.row(r) = rstd[c] * (dxhat.array() - m1 - xhat.row(c).array() * m2);
    }
    if (dgain) *dgain += (dy.array() * xhat.array()).colwise().sum().matrix();
    if (dbias) *dbias += dy.colwise().sum();
    return dx;
}

void softmax_rows(Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double mx = m.row(r).maxCoeff();
        m.row(r) = (m.row(r).array() - mx).exp();
        m.row(r) /= m.row(r).sum();
    }
}

Mat affine(const Mat& x, const Mat& w, const Mat& b) {
    Mat y = x * w;
    y.rowwise() += b.row(0);
    return y;
}

Mat normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

Mat dense_forward(const EncoderConfig& config, const BlockParams& b, const Mat& x, BlockCache* cache) {
    Mat z = affine(x, b.weight, b.bias);
    Mat y = apply(config.block_activation(), z);
    if (cache) {
        cache->input = x;
        cache->pre_activation = std::move(z);
    }
    return y;
}

Mat dense_backward(const EncoderConfig& config, const BlockParams& b, const BlockCache& cache, const Mat& dy,
                   BlockParams* grads) {
    const auto k = dy.rows() / cache.input.rows();
    Mat dz = dy;
    if (config.block_activation() != Activation::Identity)
        dz.array() *= apply_grad(config.block_activation(), cache.pre_activation).replicate(k, 1).array();
    if (grads) {
        grads->weight.noalias() += cache.input.transpose() * dz;
        grads->bias += dz.colwise().sum();
    }
    return dz * b.weight.transpose();
}

Mat transformer_forward(const EncoderConfig& config, const BlockParams& b, const Mat& x, BlockCache* cache) {
    const Eigen::Index s = x.rows();
    const int heads = config.heads;
    const int dh = config.dim / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    BlockCache local;
    BlockCache& c = cache ? *cache : local;
    c.input = x;
    c.h = layer_norm(x, b.ln1_gain, b.ln1_bias, config.layer_norm_eps, c.ln1_xhat, c.ln1_rstd);
    c.q = affine(c.h, b.wq, b.bq);
    c.k = affine(c.h, b.wk, b.bk);
    c.v = affine(c.h, b.wv, b.bv);
    c.probs.assign(heads, Mat());
    c.attn.resize(s, config.dim);
    for (int hd = 0; hd < heads; ++hd) {
        const auto qh = c.q.middleCols(hd * dh, dh);
        const auto kh = c.k.middleCols(hd * dh, dh);
        Mat p = (qh * kh.transpose()) * scale;
        softmax_rows(p);
        c.attn.middleCols(hd * dh, dh).noalias() = p * c.v.middleCols(hd * dh, dh);
        c.probs[hd] = std::move(p);
    }
    c.x1 = x + affine(c.attn, b.wo, b.bo);
    c.g = layer_norm(c.x1, b.ln2_gain, b.ln2_bias, config.layer_norm_eps, c.ln2_xhat, c.ln2_rstd);
    c.z1 = affine(c.g, b.ff1_weight, b.ff1_bias);
    c.u = apply(config.activation, c.z1);
    return c.x1 + affine(c.u, b.ff2_weight, b.ff2_bias);
}

Mat transformer_backward(const EncoderConfig& config, const BlockParams& b, const BlockCache& c, const Mat& dy,
                         BlockParams* grads) {
    const Eigen::Index s = c.input.rows();
    const Eigen::Index stack = dy.rows() / s;
    const int heads = config.heads;
    const int dh = config.dim / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    // feed-forward branch
    Mat du = dy * b.ff2_weight.transpose();
    Mat dz1 = du.array() * apply_grad(config.activation, c.z1).replicate(stack, 1).array();
    Mat dg = dz1 * b.ff1_weight.transpose();
    if (grads) {
        grads->ff2_weight.noalias() += c.u.transpose() * dy;
        grads->ff2_bias += dy.colwise().sum();
        grads->ff1_weight.noalias() += c.g.transpose() * dz1;
        grads->ff1_bias += dz1.colwise().sum();
    }
    Mat dx1 = dy + layer_norm_backward(dg, c.ln2_xhat, c.ln2_rstd, b.ln2_gain,
                                       grads ? &grads->ln2_gain : nullptr, grads ? &grads->ln2_bias : nullptr);

    // attention branch
    Mat dattn = dx1 * b.wo.transpose();
    if (grads) {
        grads->wo.noalias() += c.attn.transpose() * dx1;
        grads->bo += dx1.colwise().sum();
    }
    Mat dq(dy.rows(), config.dim), dk(dy.rows(), config.dim), dv(dy.rows(), config.dim);
    for (Eigen::Index blk = 0; blk < stack; ++blk) {
        for (int hd = 0; hd < heads; ++hd) {
            const Mat& p = c.probs[hd];
            const auto doh = dattn.block(blk * s, hd * dh, s, dh);
            const auto vh = c.v.middleCols(hd * dh, dh);
            const Mat dp = doh * vh.transpose();
            dv.block(blk * s, hd * dh, s, dh).noalias() = p.transpose() * doh;
            Mat ds = p.array() * (dp.array().colwise() - (dp.array() * p.array()).rowwise().sum());
            ds *= scale;
            dq.block(blk * s, hd * dh, s, dh).noalias() = ds * c.k.middleCols(hd * dh, dh);
            dk.block(blk * s, hd * dh, s, dh).noalias() = ds.transpose() * c.q.middleCols(hd * dh, dh);
        }
    }
    Mat dh_total = dq * b.wq.transpose();
    dh_total.noalias() += dk * b.wk.transpose();
    dh_total.noalias() += dv * b.wv.transpose();
    if (grads) {
        grads->wq.noalias() += c.h.transpose() * dq;
        grads->bq += dq.colwise().sum();
        grads->wk.noalias() += c.h.transpose() * dk;
        grads->bk += dk.colwise().sum();
        grads->wv.noalias() += c.h.transpose() * dv;
        grads->bv += dv.colwise().sum();
    }
    return dx1 + layer_norm_backward(dh_total, c.ln1_xhat, c.ln1_rstd, b.ln1_gain,
                                     grads ? &grads->ln1_gain : nullptr, grads ? &grads->ln1_bias : nullptr);
}

void check_finite(const Mat& m, int layer) {
    if (!m.allFinite()) throw NumericalError("non-finite activation at layer " + std::to_string(layer));
}

}  // namespace

std::string to_string(Architecture a) {
    switch (a) {
        case Architecture::Linear: return "linear";
        case Architecture::Mlp: return "mlp";
        case Architecture::Transformer: return "transformer";
    }
    return "?";
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Tanh: return "tanh";
        case Activation::Gelu: return "gelu";
    }
    return "?";
}

std::string to_string(SimilarityMode m) { return m == SimilarityMode::Dot ? "dot" : "cosine"; }

Architecture parse_architecture(const std::string& s) {
    if (s == "linear") return Architecture::Linear;
    if (s == "mlp") return Architecture::Mlp;
    if (s == "transformer") return Architecture::Transformer;
    throw UsageError("unknown architecture '" + s + "' (expected linear, mlp or transformer)");
}

Activation parse_activation(const std::string& s) {
    if (s == "identity") return Activation::Identity;
    if (s == "tanh") return Activation::Tanh;
    if (s == "gelu") return Activation::Gelu;
    throw UsageError("unknown activation '" + s + "' (expected identity, tanh or gelu)");
}

SimilarityMode parse_similarity(const std::string& s) {
    if (s == "dot") return SimilarityMode::Dot;
    if (s == "cosine") return SimilarityMode::Cosine;
    throw UsageError("unknown similarity '" + s + "' (expected dot or cosine)");
}

void EncoderConfig::validate() const {
    if (dim < 1) throw UsageError("dim must be positive");
    if (layers < 1) throw UsageError("layers must be at least 1");
    if (embed_dim < 1) throw UsageError("embed_dim must be positive");
    if (max_len < 1) throw UsageError("max_len must be positive");
    if (architecture == Architecture::Transformer) {
        if (heads < 1 || dim % heads != 0) throw UsageError("dim must be divisible by heads");
        if (ff_width < 1) throw UsageError("ff_width must be positive");
    }
    if (!(layer_norm_eps > 0.0)) throw UsageError("layer_norm_eps must be positive");
}

ModelParams zero_params(const EncoderConfig& config, std::size_t vocab_size) {
    config.validate();
    const auto d = config.dim;
    ModelParams p;
    p.token_embedding = Mat::Zero(static_cast<Eigen::Index>(vocab_size), d);
    p.position_embedding = Mat::Zero(config.max_len, d);
    p.blocks.resize(config.layers);
    for (auto& b : p.blocks) {
        if (config.architecture == Architecture::Transformer) {
            b.ln1_gain = Mat::Zero(1, d);
            b.ln1_bias = Mat::Zero(1, d);
            for (Mat* w : {&b.wq, &b.wk, &b.wv, &b.wo}) *w = Mat::Zero(d, d);
            for (Mat* bias : {&b.bq, &b.bk, &b.bv, &b.bo}) *bias = Mat::Zero(1, d);
            b.ln2_gain = Mat::Zero(1, d);
            b.ln2_bias = Mat::Zero(1, d);
            b.ff1_weight = Mat::Zero(d, config.ff_width);
            b.ff1_bias = Mat::Zero(1, config.ff_width);
            b.ff2_weight = Mat::Zero(config.ff_width, d);
            b.ff2_bias = Mat::Zero(1, d);
        } else {
            b.weight = Mat::Zero(d, d);
            b.bias = Mat::Zero(1, d);
        }
    }
    p.head_weight = Mat::Zero(d, config.embed_dim);
    p.head_bias = Mat::Zero(1, config.embed_dim);
    return p;
}

ModelParams init_params(const EncoderConfig& config, std::size_t vocab_size, std::uint64_t seed) {
    ModelParams p = zero_params(config, vocab_size);
    std::mt19937_64 rng(seed);
    const auto d = config.dim;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    p.token_embedding = normal_matrix(p.token_embedding.rows(), d, 1.0, rng);
    p.position_embedding = normal_matrix(config.max_len, d, 0.1, rng);
    for (auto& b : p.blocks) {
        if (config.architecture == Architecture::Transformer) {
            b.ln1_gain.setOnes();
            b.ln2_gain.setOnes();
            for (Mat* w : {&b.wq, &b.wk, &b.wv, &b.wo}) *w = normal_matrix(d, d, inv_sqrt_d, rng);
            b.ff1_weight = normal_matrix(d, config.ff_width, inv_sqrt_d, rng);
            b.ff2_weight = normal_matrix(config.ff_width, d, 1.0 / std::sqrt(static_cast<double>(config.ff_width)), rng);
        } else {
            b.weight = normal_matrix(d, d, inv_sqrt_d, rng);
            if (config.architecture == Architecture::Linear) b.weight += Mat::Identity(d, d);
            b.weight *= config.architecture == Architecture::Linear ? 0.5 : 1.0;
        }
    }
    p.head_weight = normal_matrix(d, config.embed_dim, 0.1 * inv_sqrt_d, rng);
    return p;
}

Mat block_forward(const EncoderConfig& config, const BlockParams& block, const Mat& x, BlockCache* cache) {
    return config.architecture == Architecture::Transformer ? transformer_forward(config, block, x, cache)
                                                            : dense_forward(config, block, x, cache);
}

Mat block_backward(const EncoderConfig& config, const BlockParams& block, const BlockCache& cache, const Mat& dy,
                   BlockParams* grads) {
    if (grads && dy.rows() != cache.input.rows())
        throw UsageError("parameter gradients require a single cotangent");
    return config.architecture == Architecture::Transformer ? transformer_backward(config, block, cache, dy, grads)
                                                            : dense_backward(config, block, cache, dy, grads);
}

Model::Model(EncoderConfig config, Vocabulary vocab, ModelParams params)
    : config_(config), vocab_(std::move(vocab)), params_(std::move(params)) {
    config_.validate();
    ModelParams shapes = zero_params(config_, vocab_.size());
    if (params_.blocks.size() != shapes.blocks.size())
        throw DataError("parameter block count does not match config");
    std::vector<std::pair<Eigen::Index, Eigen::Index>> expected;
    for_each_tensor(shapes, config_.architecture,
                    [&](const std::string&, Mat& m) { expected.emplace_back(m.rows(), m.cols()); });
    std::size_t i = 0;
    for_each_tensor(params_, config_.architecture, [&](const std::string& name, Mat& m) {
        if (m.rows() != expected[i].first || m.cols() != expected[i].second)
            throw DataError("tensor '" + name + "' has a shape inconsistent with the config");
        if (!m.allFinite()) throw DataError("tensor '" + name + "' has non-finite entries");
        ++i;
    });
}

void Model::check_layer(int layer) const {
    if (layer < 0 || layer > config_.layers)
        throw UsageError("layer " + std::to_string(layer) + " out of range 0.." + std::to_string(config_.layers));
}

Mat Model::embed_tokens(const TokenSequence& seq) const {
    const auto s = static_cast<Eigen::Index>(seq.size());
    if (s == 0) throw UsageError("empty token sequence");
    if (s > config_.max_len)
        throw DataError("sequence of length " + std::to_string(s) + " exceeds max_len " +
                        std::to_string(config_.max_len));
    Mat x(s, config_.dim);
    for (Eigen::Index i = 0; i < s; ++i) {
        const auto id = seq.ids[static_cast<std::size_t>(i)];
        if (id >= vocab_.size()) throw DataError("token id " + std::to_string(id) + " outside vocabulary");
        x.row(i) = params_.token_embedding.row(id) + params_.position_embedding.row(i);
    }
    return x;
}

Representation Model::encode_prefix(const TokenSequence& seq, int layer) const {
    check_layer(layer);
    Mat x = embed_tokens(seq);
    for (int l = 0; l < layer; ++l) {
        x = block_forward(config_, params_.blocks[l], x, nullptr);
        check_finite(x, l + 1);
    }
    return {std::move(x), layer};
}

Vec Model::suffix(const Mat& values, int layer) const {
    check_layer(layer);
    if (values.cols() != config_.dim || values.rows() < 1)
        throw UsageError("representation shape does not match the encoder width");
    Mat x = values;
    for (int l = layer; l < config_.layers; ++l) {
        x = block_forward(config_, params_.blocks[l], x, nullptr);
        check_finite(x, l + 1);
    }
    const RowVec pooled = x.colwise().mean();
    Vec e = (pooled * params_.head_weight + params_.head_bias).transpose();
    if (!e.allFinite()) throw NumericalError("non-finite embedding at output head");
    return e;
}

Embedding Model::encode_suffix(const Representation& rep) const { return {suffix(rep.values, rep.layer), false}; }

Embedding Model::encode(const TokenSequence& seq) const { return encode_suffix(encode_prefix(seq, 0)); }

Embedding Model::encode_shifted(const TokenSequence& seq) const {
    Vec e = encode(seq).values - encode(reference_for(seq)).values;
    return {std::move(e), true};
}

Embedding Model::embed(const TokenSequence& seq) const {
    return config_.shifted ? encode_shifted(seq) : encode(seq);
}

double cosine(const Vec& a, const Vec& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw NumericalError("cosine similarity of a zero-norm embedding is undefined");
    return a.dot(b) / (na * nb);
}

double Model::score(const TokenSequence& a, const TokenSequence& b, SimilarityMode mode, bool shifted) const {
    const Vec ea = shifted ? encode_shifted(a).values : encode(a).values;
    const Vec eb = shifted ? encode_shifted(b).values : encode(b).values;
    return mode == SimilarityMode::Dot ? ea.dot(eb) : cosine(ea, eb);
}

Model::Trace Model::forward_trace(const TokenSequence& seq) const {
    Trace t;
    t.ids = seq.ids;
    Mat x = embed_tokens(seq);
    t.caches.resize(static_cast<std::size_t>(config_.layers));
    for (int l = 0; l < config_.layers; ++l) {
        x = block_forward(config_, params_.blocks[l], x, &t.caches[l]);
        check_finite(x, l + 1);
    }
    t.output = x;
    t.embedding = (x.colwise().mean() * params_.head_weight + params_.head_bias).transpose();
    return t;
}

void Model::backward_trace(const Trace& trace, const Vec& d_embedding, ModelParams& grads) const {
    const auto s = trace.output.rows();
    const RowVec pooled = trace.output.colwise().mean();
    grads.head_weight.noalias() += pooled.transpose() * d_embedding.transpose();
    grads.head_bias += d_embedding.transpose();
    const RowVec dpooled = (params_.head_weight * d_embedding).transpose() / static_cast<double>(s);
    Mat dx = dpooled.replicate(s, 1);
    for (int l = config_.layers - 1; l >= 0; --l)
        dx = block_backward(config_, params_.blocks[l], trace.caches[l], dx, &grads.blocks[l]);
    for (Eigen::Index i = 0; i < s; ++i) {
        grads.token_embedding.row(trace.ids[static_cast<std::size_t>(i)]) += dx.row(i);
        grads.position_embedding.row(i) += dx.row(i);
    }
}

}  // namespace xjac
