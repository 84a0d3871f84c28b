// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/errors.hpp"
#include "core/synthetic.hpp"
#include "core/trainer.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace xjac;
using namespace xjac::testing;

namespace {

// Average ranks by counting, O(n^2).
std::vector<double> brute_ranks(const std::vector<double>& x) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        int less = 0, equal = 0;
        for (double y : x) {
            less += y < x[i];
            equal += y == x[i];
        }
        r[i] = 1.0 + less + 0.5 * (equal - 1);
    }
    return r;
}

double brute_spearman(const std::vector<double>& p, const std::vector<double>& l) {
    const auto rp = brute_ranks(p), rl = brute_ranks(l);
    const double n = static_cast<double>(p.size());
    double mp = 0, ml = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        mp += rp[i] / n;
        ml += rl[i] / n;
    }
    double c = 0, vp = 0, vl = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        c += (rp[i] - mp) * (rl[i] - ml);
        vp += (rp[i] - mp) * (rp[i] - mp);
        vl += (rl[i] - ml) * (rl[i] - ml);
    }
    return c / std::sqrt(vp * vl);
}

// Pairs sharing a keyword are labelled 1, disjoint pairs 0.
std::vector<Pair> separable_pairs(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> word(0, 9);
    std::vector<Pair> out;
    for (int i = 0; i < n; ++i) {
        const int k = word(rng);
        if (i % 2 == 0) {
            out.push_back({"w" + std::to_string(k) + " w" + std::to_string(word(rng)),
                           "w" + std::to_string(k), 1.0});
        } else {
            const int j = (k + 1 + word(rng) % 9) % 10;
            out.push_back({"w" + std::to_string(k), "w" + std::to_string(j), 0.0});
        }
    }
    return out;
}

bool same_params(const Model& x, const Model& y) {
    ModelParams a = x.params(), b = y.params();
    std::vector<Mat> ta, tb;
    for_each_tensor(a, x.config().architecture, [&](const std::string&, Mat& t) { ta.push_back(t); });
    for_each_tensor(b, y.config().architecture, [&](const std::string&, Mat& t) { tb.push_back(t); });
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i)
        if (ta[i] != tb[i]) return false;
    return true;
}

TrainConfig quick(double lr, int epochs = 3) {
    TrainConfig c;
    c.learning_rate = lr;
    c.epochs = epochs;
    c.seed = 5;
    return c;
}

}  // namespace

// ---- datasets ----

TEST_CASE("parse a single pair") {
    const auto d = parse_dataset("a cat\tthe cat\t0.9\n");
    REQUIRE(d.size() == 1);
    CHECK(d[0].text_a == "a cat");
    CHECK(d[0].text_b == "the cat");
    CHECK(d[0].label == 0.9);
}

TEST_CASE("header line is skipped") {
    const auto d = parse_dataset("sentence1\tsentence2\tscore\nx\ty\t0\nz\tw\t1\n");
    REQUIRE(d.size() == 2);
    CHECK(d[1].label == 1.0);
}

TEST_CASE("out-of-range labels name the line") {
    try {
        (void)parse_dataset("a\tb\t0.1\nc\td\t0.2\ne\tf\t1.5\n");
        FAIL("expected a data error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("malformed datasets are rejected") {
    CHECK_THROWS_AS(parse_dataset(""), DataError);
    CHECK_THROWS_AS(parse_dataset("a\tb\n"), DataError);
    CHECK_THROWS_AS(parse_dataset("a\tb\t0.5\nc\td\tnan-ish\n"), DataError);
    CHECK_THROWS_AS(parse_dataset("a\tb\tnan\n"), DataError);
    CHECK_THROWS_AS(parse_dataset("a\tb\t-0.1\n"), DataError);
    CHECK_THROWS_AS(load_dataset("/nonexistent/data.tsv"), DataError);
}

TEST_CASE("dataset formatting round-trips") {
    const auto corpus = make_synthetic_corpus(30, 3);
    const auto back = parse_dataset(format_dataset(corpus.pairs));
    REQUIRE(back.size() == corpus.pairs.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].text_a == corpus.pairs[i].text_a);
        CHECK(back[i].text_b == corpus.pairs[i].text_b);
        CHECK(back[i].label == corpus.pairs[i].label);
    }
}

TEST_CASE("synthetic corpus is seeded and labelled by kept content words") {
    const auto x = make_synthetic_corpus(40, 9), y = make_synthetic_corpus(40, 9);
    CHECK(format_dataset(x.pairs) == format_dataset(y.pairs));
    CHECK(x.tags == y.tags);
    for (const auto& p : x.pairs) {
        const double quarters = p.label * 4.0;
        CHECK(quarters == std::round(quarters));
        CHECK(p.label >= 0.0);
        CHECK(p.label <= 1.0);
    }
}

// ---- configuration ----

TEST_CASE("train config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = {};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = {};
    c.warmup_fraction = 1.0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = {};
    c.learning_rate = -1.0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    CHECK(parse_objective("dot") == Objective::DotShifted);
    CHECK(parse_objective("cosine") == Objective::Cosine);
    CHECK_THROWS_AS(parse_objective("triplet"), UsageError);
}

TEST_CASE("cosine objective on a shifted model is refused") {
    Model m = make_model({});
    TrainConfig c = quick(1e-3);
    c.objective = Objective::Cosine;
    CHECK_THROWS_AS(train(m, separable_pairs(8, 1), c), UsageError);
    Model plain = make_model({.shifted = false});
    CHECK_NOTHROW(train(plain, separable_pairs(8, 1), c));
}

// ---- training ----

TEST_CASE("learning rate zero leaves parameters unchanged") {
    Model m = make_model({.seed = 3});
    const Model before = m;
    const auto r = train(m, separable_pairs(40, 2), quick(0.0));
    CHECK(same_params(m, before));
    REQUIRE(r.epoch_loss.size() == 3);
    CHECK(r.epoch_loss[0] == r.epoch_loss[1]);
    CHECK(r.epoch_loss[1] == r.epoch_loss[2]);
}

TEST_CASE("training on separable pairs reduces the loss") {
    for (auto arch : {Architecture::Transformer, Architecture::Mlp}) {
        Model m = make_model({.arch = arch, .seed = 4});
        const auto r = train(m, separable_pairs(200, 3), quick(3e-3, 5));
        CHECK(r.epoch_loss.back() < r.epoch_loss.front());
        for (double l : r.epoch_loss) CHECK(std::isfinite(l));
    }
}

TEST_CASE("training is deterministic for a fixed seed") {
    Model x = make_model({.seed = 6}), y = make_model({.seed = 6});
    const auto rx = train(x, separable_pairs(60, 4), quick(2e-3));
    const auto ry = train(y, separable_pairs(60, 4), quick(2e-3));
    CHECK(rx.epoch_loss == ry.epoch_loss);
    CHECK(same_params(x, y));
    CHECK(loss_trace_csv(rx) == loss_trace_csv(ry));
}

TEST_CASE("shifted reference scores stay zero after every step") {
    Model m = make_model({.seed = 7});
    std::mt19937_64 rng(8);
    std::vector<TokenSequence> probes;
    for (int i = 0; i < 6; ++i) probes.push_back(random_sequence(m, 1 + i, rng));
    int steps = 0;
    double worst = 0.0;
    train(m, separable_pairs(64, 5), quick(5e-3, 2), [&](int, const Model& cur) {
        ++steps;
        for (const auto& p : probes) worst = std::max(worst, std::abs(cur.score(p, reference_for(p), SimilarityMode::Dot)));
    });
    CHECK(steps == 2 * 4);
    CHECK(worst <= 1e-10);
}

TEST_CASE("non-finite loss aborts with epoch and batch") {
    Model m = make_model({.seed = 9});
    m.mutable_params().head_weight *= 1e200;
    try {
        train(m, separable_pairs(8, 6), quick(1e-3));
        FAIL("expected a numerical error");
    } catch (const NumericalError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("epoch 1") != std::string::npos);
        CHECK(msg.find("batch 1") != std::string::npos);
    }
}

TEST_CASE("loss trace csv") {
    TrainResult r;
    r.epoch_loss = {0.5, 0.25};
    CHECK(loss_trace_csv(r) == "epoch,mean_loss\n1,0.5\n2,0.25\n");
}

// ---- parameter gradients ----

TEST_CASE("backward_trace matches central finite differences") {
    for (auto arch : {Architecture::Transformer, Architecture::Mlp, Architecture::Linear}) {
        const Model m = make_model({.arch = arch, .layers = 2, .seed = 10});
        std::mt19937_64 rng(11);
        const TokenSequence seq = random_sequence(m, 3, rng);
        const Vec d = random_mat(m.config().embed_dim, 1, rng);
        ModelParams grads = zero_params(m.config(), m.vocab().size());
        m.backward_trace(m.forward_trace(seq), d, grads);

        std::vector<Mat*> g;
        for_each_tensor(grads, arch, [&](const std::string&, Mat& t) { g.push_back(&t); });
        const double h = 1e-5;
        std::size_t ti = 0;
        ModelParams probe = m.params();
        for_each_tensor(probe, arch, [&](const std::string& name, Mat& t) {
            const Mat& gt = *g[ti++];
            // A handful of entries per tensor, including the used token rows.
            std::uniform_int_distribution<Eigen::Index> pick(0, t.size() - 1);
            for (int k = 0; k < 4; ++k) {
                Eigen::Index i = pick(rng);
                if (name == "token_embedding") i = seq.ids[k % 3] * t.cols() + k;
                const double saved = t.data()[i];
                t.data()[i] = saved + h;
                const double up = Model(m.config(), m.vocab(), probe).encode(seq).values.dot(d);
                t.data()[i] = saved - h;
                const double down = Model(m.config(), m.vocab(), probe).encode(seq).values.dot(d);
                t.data()[i] = saved;
                const double fd = (up - down) / (2 * h);
                INFO(to_string(arch), " ", name, "[", i, "]");
                CHECK(std::abs(gt.data()[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
            }
        });
    }
}

// ---- spearman ----

TEST_CASE("spearman examples") {
    CHECK(spearman(std::vector{1.0, 2.0, 3.0}, std::vector{10.0, 20.0, 30.0}) == doctest::Approx(1.0));
    CHECK(spearman(std::vector{1.0, 2.0, 3.0}, std::vector{3.0, 2.0, 1.0}) == doctest::Approx(-1.0));
    const std::vector p{1.0, 2.0, 2.0, 3.0}, l{2.0, 1.0, 3.0, 4.0};
    CHECK(spearman(p, l) == doctest::Approx(brute_spearman(p, l)).epsilon(1e-14));
}

TEST_CASE("spearman matches the brute-force oracle on tied random data") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> small(0, 5);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> p(20), l(20);
        for (int i = 0; i < 20; ++i) {
            p[i] = small(rng);
            l[i] = small(rng);
        }
        CHECK(spearman(p, l) == doctest::Approx(brute_spearman(p, l)).epsilon(1e-12));
    }
}

TEST_CASE("spearman is invariant under strictly increasing transforms") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 20; ++t) {
        const Mat x = random_mat(30, 2, rng);
        std::vector<double> p(30), l(30), q(30);
        for (int i = 0; i < 30; ++i) {
            p[i] = x(i, 0);
            l[i] = x(i, 1);
            q[i] = std::exp(3.0 * p[i]) + p[i] * p[i] * p[i];
        }
        CHECK(spearman(q, l) == spearman(p, l));
    }
}

TEST_CASE("spearman errors") {
    CHECK_THROWS_AS(spearman(std::vector{1.0, 2.0}, std::vector{1.0}), UsageError);
    CHECK_THROWS_AS(spearman(std::vector{1.0}, std::vector{1.0}), UsageError);
    CHECK_THROWS_AS(spearman(std::vector{1.0, 1.0, 1.0}, std::vector{1.0, 2.0, 3.0}), NumericalError);
}

// ---- evaluation ----

TEST_CASE("a model that reproduces the labels scores 1") {
    // Linear encoder whose dot score is exactly the label: one content word per
    // text, embeddings on orthonormal axes, shared word gives 1, disjoint gives 0.
    EncoderConfig c;
    c.architecture = Architecture::Linear;
    c.dim = c.embed_dim = 4;
    c.layers = 1;
    c.heads = 1;
    c.max_len = 4;
    c.shifted = false;
    Vocabulary v = word_vocab(4);
    ModelParams p = zero_params(c, v.size());
    for (int w = 0; w < 4; ++w) p.token_embedding(2 + w, w) = 1.0;
    p.blocks[0].weight = Mat::Identity(4, 4);
    p.head_weight = Mat::Identity(4, 4);
    const Model stub(c, v, p);
    const std::vector<Pair> data{{"w0", "w0", 1.0}, {"w0", "w1", 0.0}, {"w2", "w2", 1.0}, {"w3", "w1", 0.0},
                                 {"w1", "w1", 1.0}};
    const auto pred = predict(stub, data, SimilarityMode::Dot);
    for (std::size_t i = 0; i < data.size(); ++i) CHECK(pred[i] == data[i].label);
    CHECK(evaluate(stub, data, SimilarityMode::Dot) == doctest::Approx(1.0));
}

TEST_CASE("an untrained model has low rank correlation") {
    const auto corpus = make_synthetic_corpus(200, 14);
    std::vector<std::string> texts;
    for (const auto& p : corpus.pairs) {
        texts.push_back(p.text_a);
        texts.push_back(p.text_b);
    }
    // Random encoders already reward word overlap, so the bound is on the
    // typical (median) seed rather than on every seed.
    EncoderConfig c;
    const Vocabulary v = build_vocab(texts, 1);
    std::vector<double> rho;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Model m(c, v, init_params(c, v.size(), seed));
        rho.push_back(std::abs(evaluate(m, corpus.pairs, SimilarityMode::Dot)));
    }
    std::sort(rho.begin(), rho.end());
    CHECK(0.5 * (rho[9] + rho[10]) < 0.3);
    const Model m(c, v, init_params(c, v.size(), 0));
    CHECK_THROWS_AS(evaluate(m, {}, SimilarityMode::Dot), UsageError);
}
