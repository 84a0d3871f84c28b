// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

// Shared test helpers: analytic tails with closed-form Jacobians, small
// seeded models and random inputs.

#pragma once

#include "core/autodiff.hpp"
#include "core/encoder.hpp"
#include "core/vocab.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace xjac::testing {

/// e(x) = flatten(x); Jacobian is the identity.
class IdentityTail final : public Tail {
public:
    IdentityTail(Eigen::Index rows, Eigen::Index cols) : n_(rows * cols) {}
    [[nodiscard]] Eigen::Index output_dim() const override { return n_; }
    [[nodiscard]] Vec evaluate(const Mat& rep) const override { return flatten(rep); }
    [[nodiscard]] Mat jacobian(const Mat&) const override { return Mat::Identity(n_, n_); }

private:
    Eigen::Index n_;
};

/// e(x) = W flatten(x) + c.
class AffineTail final : public Tail {
public:
    AffineTail(Mat w, Vec c) : w_(std::move(w)), c_(std::move(c)) {}
    [[nodiscard]] Eigen::Index output_dim() const override { return w_.rows(); }
    [[nodiscard]] Vec evaluate(const Mat& rep) const override { return w_ * flatten(rep) + c_; }
    [[nodiscard]] Mat jacobian(const Mat&) const override { return w_; }

private:
    Mat w_;
    Vec c_;
};

/// e_k(x) = x_k^p elementwise; Jacobian diag(p x^(p-1)).
class PowerTail final : public Tail {
public:
    PowerTail(Eigen::Index rows, Eigen::Index cols, int power) : n_(rows * cols), p_(power) {}
    [[nodiscard]] Eigen::Index output_dim() const override { return n_; }
    [[nodiscard]] Vec evaluate(const Mat& rep) const override {
        return flatten(rep).unaryExpr([this](double v) { return std::pow(v, p_); });
    }
    [[nodiscard]] Mat jacobian(const Mat& rep) const override {
        Vec d = flatten(rep).unaryExpr([this](double v) { return p_ * std::pow(v, p_ - 1); });
        return Mat(d.asDiagonal());
    }

private:
    Eigen::Index n_;
    int p_;
};

inline Mat random_mat(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

inline Vocabulary word_vocab(int words) {
    Vocabulary v;
    for (int i = 0; i < words; ++i) v.add("w" + std::to_string(i));
    return v;
}

struct ModelSpec {
    Architecture arch = Architecture::Transformer;
    int dim = 8;
    int layers = 2;
    int heads = 2;
    int embed_dim = 6;
    int ff_width = 12;
    int max_len = 12;
    int words = 10;
    bool shifted = true;
    Activation activation = Activation::Gelu;
    std::uint64_t seed = 1;
};

inline Model make_model(const ModelSpec& s) {
    EncoderConfig c;
    c.architecture = s.arch;
    c.dim = s.dim;
    c.layers = s.layers;
    c.heads = s.arch == Architecture::Transformer ? s.heads : 1;
    c.embed_dim = s.embed_dim;
    c.ff_width = s.ff_width;
    c.max_len = s.max_len;
    c.shifted = s.shifted;
    c.activation = s.activation;
    Vocabulary v = word_vocab(s.words);
    ModelParams p = init_params(c, v.size(), s.seed);
    return Model(c, std::move(v), std::move(p));
}

/// Random sequence of non-reserved tokens.
inline TokenSequence random_sequence(const Model& m, std::size_t length, std::mt19937_64& rng) {
    std::uniform_int_distribution<TokenId> pick(2, static_cast<TokenId>(m.vocab().size() - 1));
    std::string text;
    for (std::size_t i = 0; i < length; ++i) {
        if (i) text += ' ';
        text += m.vocab().token(pick(rng));
    }
    return m.tokenize(text);
}

}  // namespace xjac::testing
