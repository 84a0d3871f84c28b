// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/analysis.hpp"
#include "core/errors.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>

using namespace xjac;
using namespace xjac::testing;

namespace {

AttributionOutput output_of(const Mat& cells, std::vector<std::string> a, std::vector<std::string> b,
                            double score, int layer = 1) {
    AttributionOutput o;
    o.token_matrix = cells;
    o.tokens_a = std::move(a);
    o.tokens_b = std::move(b);
    o.score = score;
    o.attribution_sum = matrix_total(cells);
    o.error = std::abs(score - o.attribution_sum);
    o.layer = layer;
    o.steps = 1;
    return o;
}

std::vector<std::string> names(std::size_t n, const std::string& prefix) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

WordAttribution words_of(const Mat& values, std::vector<std::string> tags_a, std::vector<std::string> tags_b,
                         double score = 1.0) {
    WordAttribution w;
    w.values = values;
    w.sizes_a.assign(values.rows(), 1);
    w.sizes_b.assign(values.cols(), 1);
    w.tags_a = std::move(tags_a);
    w.tags_b = std::move(tags_b);
    w.score = score;
    return w;
}

}  // namespace

// ---- histogram ----

TEST_CASE("histogram of an all-positive matrix has no negative mass") {
    std::mt19937_64 rng(1);
    const Mat cells = random_mat(3, 4, rng).cwiseAbs().array() + 0.1;
    const std::vector outs{output_of(cells, names(3, "a"), names(4, "b"), 1.0)};
    const Histogram h = attribution_histogram(outs, 1, 5);
    CHECK(h.negative_fraction == 0.0);
    CHECK(h.cells == 12);
    CHECK(h.edges.size() == 6);
    CHECK(h.edges.front() == cells.minCoeff());
    CHECK(h.edges.back() == cells.maxCoeff());
    std::size_t total = 0;
    for (auto c : h.counts) total += c;
    CHECK(total == 12);
}

TEST_CASE("histogram of an antisymmetric matrix") {
    std::mt19937_64 rng(2);
    const Mat x = random_mat(5, 5, rng);
    const Mat anti = x - x.transpose();  // zero diagonal
    const std::vector outs{output_of(anti, names(5, "a"), names(5, "b"), 1.0)};
    const Histogram h = attribution_histogram(outs, 1, 10);
    const double zero_share = 5.0 / 25.0;
    CHECK(h.negative_fraction == doctest::Approx(0.5 - zero_share / 2.0));
}

TEST_CASE("histogram bins match a counting oracle") {
    std::mt19937_64 rng(3);
    std::vector<AttributionOutput> outs;
    for (int i = 0; i < 4; ++i) outs.push_back(output_of(random_mat(3, 2 + i, rng), names(3, "a"), names(2 + i, "b"), 1.0, i % 2));
    outs.push_back(output_of(random_mat(2, 2, rng), names(2, "a"), names(2, "b"), 1.0, 1));
    const Histogram h = attribution_histogram(outs, 1, 7);
    std::vector<double> cells;
    for (const auto& o : outs)
        if (o.layer == 1)
            for (Eigen::Index i = 0; i < o.token_matrix.size(); ++i) cells.push_back(o.token_matrix.data()[i]);
    CHECK(h.cells == cells.size());
    for (std::size_t b = 0; b < 7; ++b) {
        std::size_t n = 0;
        for (double c : cells) n += c >= h.edges[b] && (c < h.edges[b + 1] || (b == 6 && c <= h.edges[b + 1]));
        CHECK(h.counts[b] == n);
    }
    CHECK_THROWS_AS(attribution_histogram(outs, 7, 5), UsageError);
    CHECK_THROWS_AS(attribution_histogram(outs, 1, 0), UsageError);
}

TEST_CASE("histogram of a constant matrix widens its range") {
    const std::vector outs{output_of(Mat::Constant(2, 2, 3.0), names(2, "a"), names(2, "b"), 1.0)};
    const Histogram h = attribution_histogram(outs, 1, 4);
    CHECK(h.edges.front() < 3.0);
    CHECK(h.edges.back() > 3.0);
    CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}) == 4);
}

// ---- cumulative prediction ----

TEST_CASE("uniform mass gives the identity curve") {
    const Mat cells = Mat::Constant(4, 5, 0.05);
    const std::vector outs{output_of(cells, names(4, "a"), names(5, "b"), 1.0)};
    const CumulativeCurve c = cumulative_prediction_curve(outs, 100);
    REQUIRE(c.fractions.size() == 101);
    for (std::size_t i = 0; i < c.fractions.size(); ++i) CHECK(c.mean[i] == doctest::Approx(c.fractions[i]).epsilon(1e-12));
    CHECK(c.examples == 1);
    CHECK(c.stddev.back() == 0.0);
}

TEST_CASE("a single dominant cell jumps to one at the first cell") {
    Mat cells = Mat::Zero(3, 3);
    cells(2, 1) = 2.5;
    const std::vector<double> f{0.0, 1.0 / 9.0, 0.5, 1.0};
    const auto curve = cumulative_prediction(cells, 2.5, f);
    CHECK(curve[0] == 0.0);
    CHECK(curve[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(curve[2] == 1.0);
    CHECK(curve[3] == 1.0);
}

TEST_CASE("cumulative prediction sorts by absolute value and may overshoot") {
    Mat cells(1, 3);
    cells << 0.5, -2.0, 2.5;  // sorted by |v|: 2.5, -2.0, 0.5
    const std::vector<double> f{1.0 / 3.0, 2.0 / 3.0, 1.0};
    const auto curve = cumulative_prediction(cells, 1.0, f);
    CHECK(curve[0] == doctest::Approx(2.5));
    CHECK(curve[1] == doctest::Approx(0.5));
    CHECK(curve[2] == doctest::Approx(1.0));
    CHECK_THROWS_AS(cumulative_prediction(cells, 0.0, f), NumericalError);
}

TEST_CASE("curve endpoint equals the attribution sum over the score") {
    std::mt19937_64 rng(4);
    std::vector<AttributionOutput> outs;
    for (int i = 0; i < 10; ++i) {
        const Mat cells = random_mat(2 + i % 3, 3 + i % 2, rng);
        outs.push_back(output_of(cells, names(cells.rows(), "a"), names(cells.cols(), "b"), 0.3 + i));
    }
    outs.push_back(output_of(Mat::Ones(2, 2), names(2, "a"), names(2, "b"), 0.0));
    for (const auto& o : outs)
        if (o.score != 0.0) {
            const std::vector<double> one{1.0};
            CHECK(std::abs(cumulative_prediction(o.token_matrix, o.score, one)[0] - o.attribution_sum / o.score) <=
                  1e-12);
        }
    const CumulativeCurve c = cumulative_prediction_curve(outs, 20);
    CHECK(c.examples == 10);
    CHECK(c.excluded == 1);
    CHECK(c.fractions.back() == 1.0);
    double mean_end = 0.0;
    for (int i = 0; i < 10; ++i) mean_end += outs[i].attribution_sum / outs[i].score / 10.0;
    CHECK(c.mean.back() == doctest::Approx(mean_end).epsilon(1e-12));
    CHECK_THROWS_AS(cumulative_prediction_curve({}, 10), UsageError);
}

// ---- tags ----

TEST_CASE("tags parse into sentences") {
    const auto s = parse_tags("The\tDT\ncat\tNN\n\nruns\tVBZ\n");
    REQUIRE(s.size() == 2);
    CHECK(s[0].words == std::vector<std::string>{"The", "cat"});
    CHECK(s[1].tags == std::vector<std::string>{"VBZ"});
    const TagLookup lookup(s);
    CHECK(lookup.tags_for({"the", "cat"}) == std::vector<std::string>{"DT", "NN"});
    CHECK_THROWS_AS((void)lookup.tags_for({"a", "dog"}), DataError);
}

TEST_CASE("malformed tag files name the line") {
    try {
        (void)parse_tags("a\tDT\nbroken line\n");
        FAIL("expected a data error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_tags("\n\n"), DataError);
}

// ---- word merging ----

TEST_CASE("one token per word leaves the matrix unchanged") {
    std::mt19937_64 rng(5);
    const Mat m = random_mat(3, 4, rng);
    CHECK(merge_tokens_to_words(m, one_token_per_word(3), one_token_per_word(4)) == m);
}

TEST_CASE("a 2x2 block merges to its mean") {
    Mat m(2, 2);
    m << 1, 1, 3, 3;
    const Mat w = merge_tokens_to_words(m, {{0, 2}}, {{0, 2}});
    REQUIRE(w.size() == 1);
    CHECK(w(0, 0) == 2.0);
}

TEST_CASE("random partitions match brute-force block means and conserve mass") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 20; ++t) {
        const Mat m = random_mat(4, 6, rng);
        auto partition = [&](std::size_t n) {
            std::vector<Span> spans;
            std::size_t at = 0;
            while (at < n) {
                const std::size_t len = 1 + rng() % (n - at);
                spans.push_back({at, at + len});
                at += len;
            }
            return spans;
        };
        const auto pa = partition(4), pb = partition(6);
        const Mat w = merge_tokens_to_words(m, pa, pb);
        double weighted = 0.0;
        for (std::size_t i = 0; i < pa.size(); ++i)
            for (std::size_t j = 0; j < pb.size(); ++j) {
                double acc = 0.0;
                for (std::size_t r = pa[i].begin; r < pa[i].end; ++r)
                    for (std::size_t c = pb[j].begin; c < pb[j].end; ++c) acc += m(r, c);
                const double size = static_cast<double>(pa[i].size() * pb[j].size());
                CHECK(w(i, j) == doctest::Approx(acc / size).epsilon(1e-14));
                weighted += w(i, j) * size;
            }
        CHECK(std::abs(weighted - m.sum()) <= 1e-12);
    }
}

TEST_CASE("merging rejects spans that do not partition the axis") {
    const Mat m = Mat::Ones(3, 3);
    const auto ok = one_token_per_word(3);
    CHECK_THROWS_AS(merge_tokens_to_words(m, {{0, 1}, {2, 3}}, ok), UsageError);   // gap
    CHECK_THROWS_AS(merge_tokens_to_words(m, {{0, 2}, {1, 3}}, ok), UsageError);   // overlap
    CHECK_THROWS_AS(merge_tokens_to_words(m, ok, {{0, 2}}), UsageError);           // incomplete
    CHECK_THROWS_AS(merge_tokens_to_words(m, ok, {{0, 0}, {0, 3}}), UsageError);   // empty span
}

TEST_CASE("word attribution looks tags up by sentence") {
    const TagLookup tags(parse_tags("hot\tJJ\ncoffee\tNN\n\ntea\tNN\n"));
    const auto out = output_of(Mat::Constant(2, 1, 0.5), {"hot", "coffee"}, {"tea"}, 1.0);
    const WordAttribution w = word_attribution(out, tags);
    CHECK(w.tags_a == std::vector<std::string>{"JJ", "NN"});
    CHECK(w.tags_b == std::vector<std::string>{"NN"});
    CHECK(w.values == out.token_matrix);
    CHECK(w.score == 1.0);
    const auto missing = output_of(Mat::Ones(1, 1), {"milk"}, {"tea"}, 1.0);
    CHECK_THROWS_AS(word_attribution(missing, tags), DataError);
}

// ---- relations ----

TEST_CASE("relation names are unordered") {
    CHECK(relation_name("NN", "JJ") == "JJ-NN");
    CHECK(relation_name("JJ", "NN") == "JJ-NN");
    CHECK(relation_name("NN", "NN") == "NN-NN");
}

TEST_CASE("all-noun sentences give a single relation") {
    std::mt19937_64 rng(7);
    const std::vector ws{words_of(random_mat(2, 3, rng), {"NN", "NN"}, {"NN", "NN", "NN"}),
                         words_of(random_mat(1, 2, rng), {"NN"}, {"NN", "NN"})};
    const std::vector<double> fractions{0.1, 0.25, 0.5, 1.0};
    const auto rows = pos_relation_shares(ws, fractions);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) {
        CHECK(r.relation == "NN-NN");
        CHECK(r.share == 1.0);
    }
    CHECK(rows[0].count == 1);  // ceil(0.1 * 8)
    CHECK(rows[3].count == 8);
}

TEST_CASE("two tags with hand-built matrices") {
    Mat m1(2, 2), m2(2, 2);
    m1 << 4.0, 1.0,   // NN-NN  NN-VB
        3.0, -1.0;    // VB-NN  VB-VB
    m2 << 2.0, 0.5,   // NN-NN  NN-NN
        5.0, 0.0;     // VB-NN  VB-NN
    const std::vector ws{words_of(m1, {"NN", "VB"}, {"NN", "VB"}), words_of(m2, {"NN", "VB"}, {"NN", "NN"})};
    // Sorted by value: 5 (NN-VB), 4 (NN-NN), 3 (NN-VB), 2 (NN-NN), 1 (NN-VB), 0.5 (NN-NN), 0 (NN-VB), -1 (VB-VB).
    const std::vector<double> fractions{0.25, 0.5, 1.0};
    const auto rows = pos_relation_shares(ws, fractions);
    std::map<double, std::vector<ShareRow>> by;
    for (const auto& r : rows) by[r.fraction].push_back(r);
    REQUIRE(by[0.25].size() == 2);
    CHECK(by[0.25][0].relation == "NN-NN");  // tie 1:1 broken by name
    CHECK(by[0.25][0].share == 0.5);
    CHECK(by[0.25][1].relation == "NN-VB");
    REQUIRE(by[0.5].size() == 2);
    CHECK(by[0.5][0].share == 0.5);
    REQUIRE(by[1.0].size() == 3);
    CHECK(by[1.0][0].relation == "NN-VB");
    CHECK(by[1.0][0].count == 4);
    CHECK(by[1.0][1].relation == "NN-NN");
    CHECK(by[1.0][1].count == 3);
    CHECK(by[1.0][2].relation == "VB-VB");
    CHECK(by[1.0][2].share == 1.0 / 8.0);
}

TEST_CASE("share rows sum to one per fraction") {
    std::mt19937_64 rng(8);
    const std::vector<std::string> tagset{"DT", "JJ", "NN", "VBZ"};
    std::vector<WordAttribution> ws;
    for (int i = 0; i < 15; ++i) {
        std::vector<std::string> ta, tb;
        for (int k = 0; k < 3 + i % 4; ++k) ta.push_back(tagset[rng() % 4]);
        for (int k = 0; k < 2 + i % 5; ++k) tb.push_back(tagset[rng() % 4]);
        ws.push_back(words_of(random_mat(ta.size(), tb.size(), rng), ta, tb));
    }
    const std::vector<double> fractions{0.1, 0.25, 0.5, 0.77, 1.0};
    const auto rows = pos_relation_shares(ws, fractions);
    for (double f : fractions) {
        double total = 0.0;
        for (const auto& r : rows)
            if (r.fraction == f) total += r.share;
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
    const std::vector<double> bad{0.0};
    CHECK_THROWS_AS(pos_relation_shares(ws, bad), UsageError);
}

TEST_CASE("restricted prediction") {
    Mat m(2, 2);
    m << 0.2, 0.3, 0.1, 0.4;
    WordAttribution w = words_of(m, {"JJ", "NN"}, {"NN", "VBZ"}, 2.0);
    CHECK(pos_restricted_prediction(w, {}) == 0.0);
    CHECK(pos_restricted_prediction(w, {"JJ-NN", "JJ-VBZ", "NN-NN", "NN-VBZ"}) == doctest::Approx(0.5));
    CHECK(pos_restricted_prediction(w, {"NN-NN"}) == doctest::Approx(0.05));
    w.sizes_a = {2, 1};  // a two-token first word counts twice
    CHECK(pos_restricted_prediction(w, {"JJ-NN"}) == doctest::Approx(0.2));
    w.score = 0.0;
    CHECK_THROWS_AS(pos_restricted_prediction(w, {"NN-NN"}), NumericalError);
}
