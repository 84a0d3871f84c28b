// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/analysis.hpp"

#include "core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

namespace xjac {

Histogram attribution_histogram(std::span<const AttributionOutput> outputs, int layer, int bins) {
    if (bins < 1) throw UsageError("histogram needs at least one bin");
    std::vector<double> cells;
    for (const auto& out : outputs) {
        if (out.layer != layer) continue;
        const Mat& m = out.token_matrix;
        cells.insert(cells.end(), m.data(), m.data() + m.size());
    }
    if (cells.empty()) throw UsageError("no attribution outputs at layer " + std::to_string(layer));

    Histogram h;
    h.layer = layer;
    h.cells = cells.size();
    auto [lo_it, hi_it] = std::minmax_element(cells.begin(), cells.end());
    double lo = *lo_it, hi = *hi_it;
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * i / bins;
    h.edges.back() = hi;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    std::size_t negative = 0;
    for (double v : cells) {
        if (v < 0.0) ++negative;
        auto bin = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * bins));
        ++h.counts[std::min(bin, h.counts.size() - 1)];
    }
    h.negative_fraction = static_cast<double>(negative) / static_cast<double>(cells.size());
    return h;
}

std::vector<double> cumulative_prediction(const Mat& cells, double score, std::span<const double> fractions) {
    if (score == 0.0) throw NumericalError("cumulative prediction undefined for a zero score");
    const auto m = static_cast<std::size_t>(cells.size());
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    // Row-major data index already encodes the (row, column) tie break.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return std::abs(cells.data()[i]) > std::abs(cells.data()[j]);
    });
    std::vector<double> cum(m + 1, 0.0);
    for (std::size_t k = 0; k < m; ++k) cum[k + 1] = cum[k] + cells.data()[order[k]];

    std::vector<double> out;
    out.reserve(fractions.size());
    for (double x : fractions) {
        const double t = std::clamp(x, 0.0, 1.0) * static_cast<double>(m);
        const auto k = std::min(static_cast<std::size_t>(std::floor(t)), m);
        const double v = k == m ? cum[m] : cum[k] + (t - static_cast<double>(k)) * (cum[k + 1] - cum[k]);
        out.push_back(v / score);
    }
    return out;
}

CumulativeCurve cumulative_prediction_curve(std::span<const AttributionOutput> outputs, int grid) {
    if (outputs.empty()) throw UsageError("cumulative curve needs at least one output");
    if (grid < 1) throw UsageError("grid must have at least one step");
    CumulativeCurve curve;
    for (int i = 0; i <= grid; ++i) curve.fractions.push_back(static_cast<double>(i) / grid);
    curve.fractions.back() = 1.0;

    std::vector<std::vector<double>> rows;
    for (const auto& out : outputs) {
        if (out.score == 0.0) {
            ++curve.excluded;
            continue;
        }
        rows.push_back(cumulative_prediction(out.token_matrix, out.score, curve.fractions));
    }
    curve.examples = rows.size();
    curve.mean.assign(curve.fractions.size(), 0.0);
    curve.stddev.assign(curve.fractions.size(), 0.0);
    if (rows.empty()) return curve;
    const auto n = static_cast<double>(rows.size());
    for (std::size_t p = 0; p < curve.fractions.size(); ++p) {
        double sum = 0.0;
        for (const auto& r : rows) sum += r[p];
        const double mean = sum / n;
        double var = 0.0;
        for (const auto& r : rows) var += (r[p] - mean) * (r[p] - mean);
        curve.mean[p] = mean;
        curve.stddev[p] = std::sqrt(var / n);
    }
    return curve;
}

std::vector<TaggedSentence> parse_tags(const std::string& contents) {
    std::vector<TaggedSentence> out;
    TaggedSentence cur;
    std::istringstream in(contents);
    std::string line;
    int line_no = 0;
    auto flush = [&] {
        if (!cur.words.empty()) out.push_back(std::move(cur));
        cur = {};
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) {
            flush();
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size() ||
            line.find('\t', tab + 1) != std::string::npos)
            throw DataError("tags line " + std::to_string(line_no) + ": expected 'word<TAB>tag'");
        cur.words.push_back(line.substr(0, tab));
        cur.tags.push_back(line.substr(tab + 1));
    }
    flush();
    if (out.empty()) throw DataError("tags file contains no sentences");
    return out;
}

namespace {

std::string sentence_key(const std::vector<std::string>& words) {
    std::string key;
    for (const auto& w : words) {
        if (!key.empty()) key += ' ';
        for (char c : w) key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return key;
}

}  // namespace

TagLookup::TagLookup(const std::vector<TaggedSentence>& sentences) {
    for (const auto& s : sentences) tags_.emplace(sentence_key(s.words), s.tags);
}

const std::vector<std::string>& TagLookup::tags_for(const std::vector<std::string>& words) const {
    auto it = tags_.find(sentence_key(words));
    if (it == tags_.end()) throw DataError("no tags for sentence '" + sentence_key(words) + "'");
    return it->second;
}

std::vector<Span> one_token_per_word(std::size_t words) {
    std::vector<Span> spans;
    for (std::size_t i = 0; i < words; ++i) spans.push_back({i, i + 1});
    return spans;
}

namespace {

void check_partition(const std::vector<Span>& spans, Eigen::Index tokens, const char* axis) {
    std::size_t next = 0;
    for (const auto& s : spans) {
        if (s.begin != next || s.end <= s.begin)
            throw UsageError(std::string("word spans on axis ") + axis + " overlap, leave gaps or are empty");
        next = s.end;
    }
    if (next != static_cast<std::size_t>(tokens))
        throw UsageError(std::string("word spans on axis ") + axis + " do not cover all tokens");
}

}  // namespace

Mat merge_tokens_to_words(const Mat& tokens, const std::vector<Span>& words_a, const std::vector<Span>& words_b) {
    check_partition(words_a, tokens.rows(), "a");
    check_partition(words_b, tokens.cols(), "b");
    Mat out(static_cast<Eigen::Index>(words_a.size()), static_cast<Eigen::Index>(words_b.size()));
    for (std::size_t i = 0; i < words_a.size(); ++i) {
        for (std::size_t j = 0; j < words_b.size(); ++j) {
            const auto& sa = words_a[i];
            const auto& sb = words_b[j];
            const double sum = tokens
                                   .block(static_cast<Eigen::Index>(sa.begin), static_cast<Eigen::Index>(sb.begin),
                                          static_cast<Eigen::Index>(sa.size()), static_cast<Eigen::Index>(sb.size()))
                                   .sum();
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                sum / static_cast<double>(sa.size() * sb.size());
        }
    }
    return out;
}

WordAttribution word_attribution(const AttributionOutput& output, const TagLookup& tags) {
    // Tokens are whitespace words, so each word owns exactly one token.
    WordAttribution w;
    w.tags_a = tags.tags_for(output.tokens_a);
    w.tags_b = tags.tags_for(output.tokens_b);
    if (w.tags_a.size() != static_cast<std::size_t>(output.token_matrix.rows()) ||
        w.tags_b.size() != static_cast<std::size_t>(output.token_matrix.cols()))
        throw DataError("tag count does not match the attribution matrix");
    const auto spans_a = one_token_per_word(w.tags_a.size());
    const auto spans_b = one_token_per_word(w.tags_b.size());
    w.values = merge_tokens_to_words(output.token_matrix, spans_a, spans_b);
    for (const auto& s : spans_a) w.sizes_a.push_back(s.size());
    for (const auto& s : spans_b) w.sizes_b.push_back(s.size());
    w.score = output.score;
    return w;
}

std::string relation_name(const std::string& x, const std::string& y) {
    return x <= y ? x + "-" + y : y + "-" + x;
}

std::vector<ShareRow> pos_relation_shares(std::span<const WordAttribution> words, std::span<const double> fractions) {
    struct Cell {
        double value;
        std::size_t input, row, col;
    };
    std::vector<Cell> cells;
    for (std::size_t n = 0; n < words.size(); ++n) {
        const auto& w = words[n];
        if (w.tags_a.size() != static_cast<std::size_t>(w.values.rows()) ||
            w.tags_b.size() != static_cast<std::size_t>(w.values.cols()))
            throw DataError("missing tags for some words");
        for (Eigen::Index i = 0; i < w.values.rows(); ++i)
            for (Eigen::Index j = 0; j < w.values.cols(); ++j)
                cells.push_back({w.values(i, j), n, static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
    }
    if (cells.empty()) throw UsageError("no word attributions to rank");
    std::stable_sort(cells.begin(), cells.end(), [](const Cell& x, const Cell& y) {
        if (x.value != y.value) return x.value > y.value;
        return std::tie(x.input, x.row, x.col) < std::tie(y.input, y.row, y.col);
    });

    std::vector<ShareRow> rows;
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw UsageError("top fractions must lie in (0, 1]");
        const auto k = std::max<std::size_t>(
            1, std::min(cells.size(), static_cast<std::size_t>(std::ceil(f * static_cast<double>(cells.size()) - 1e-9))));
        std::map<std::string, std::size_t> counts;
        for (std::size_t c = 0; c < k; ++c) {
            const auto& cell = cells[c];
            const auto& w = words[cell.input];
            ++counts[relation_name(w.tags_a[cell.row], w.tags_b[cell.col])];
        }
        std::vector<ShareRow> block;
        for (const auto& [rel, count] : counts)
            block.push_back({f, rel, count, static_cast<double>(count) / static_cast<double>(k)});
        std::stable_sort(block.begin(), block.end(),
                         [](const ShareRow& x, const ShareRow& y) { return x.count > y.count; });
        rows.insert(rows.end(), block.begin(), block.end());
    }
    return rows;
}

double pos_restricted_prediction(const WordAttribution& words, const std::set<std::string>& relations) {
    if (words.score == 0.0) throw NumericalError("restricted prediction undefined for a zero score");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < words.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < words.values.cols(); ++j) {
            if (!relations.count(relation_name(words.tags_a[i], words.tags_b[j]))) continue;
            sum += words.values(i, j) * static_cast<double>(words.sizes_a[i] * words.sizes_b[j]);
        }
    }
    return sum / words.score;
}

}  // namespace xjac
