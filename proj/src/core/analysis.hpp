// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "core/attribution.hpp"

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace xjac {

struct Histogram {
    int layer = 0;
    std::vector<double> edges;  // bins + 1, ascending
    std::vector<std::size_t> counts;
    std::size_t cells = 0;
    double negative_fraction = 0.0;  // strictly negative cells / all cells
};

/// Histogram over all token-token cells of the outputs at `layer`. Bins span
/// [min, max] of the cells; the last bin is closed.
Histogram attribution_histogram(std::span<const AttributionOutput> outputs, int layer, int bins);

/// Cumulative sum of the cells sorted by |value| descending (ties by row,
/// then column), divided by `score`, read off at each fraction of the cell
/// count with linear interpolation between cells.
std::vector<double> cumulative_prediction(const Mat& cells, double score, std::span<const double> fractions);

struct CumulativeCurve {
    std::vector<double> fractions;
    std::vector<double> mean;
    std::vector<double> stddev;  // population
    std::size_t examples = 0;
    std::size_t excluded = 0;  // outputs with zero score
};

/// Fractions 0, 1/grid, ..., 1.
CumulativeCurve cumulative_prediction_curve(std::span<const AttributionOutput> outputs, int grid = 100);

struct TaggedSentence {
    std::vector<std::string> words;
    std::vector<std::string> tags;
};

/// "word<TAB>tag" per line, blank line between sentences. Throws DataError.
std::vector<TaggedSentence> parse_tags(const std::string& contents);

/// Looks sentences up by their lowercased, space-joined words.
class TagLookup {
public:
    explicit TagLookup(const std::vector<TaggedSentence>& sentences);
    /// Throws DataError when the sentence is not tagged.
    [[nodiscard]] const std::vector<std::string>& tags_for(const std::vector<std::string>& words) const;

private:
    std::map<std::string, std::vector<std::string>> tags_;
};

/// Token span [begin, end) of one word.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    [[nodiscard]] std::size_t size() const { return end - begin; }
};

std::vector<Span> one_token_per_word(std::size_t words);

/// Word-word matrix of block means. Throws UsageError unless both span lists
/// partition their token axis in order.
Mat merge_tokens_to_words(const Mat& tokens, const std::vector<Span>& words_a, const std::vector<Span>& words_b);

struct WordAttribution {
    Mat values;  // block means
    std::vector<std::size_t> sizes_a, sizes_b;
    std::vector<std::string> tags_a, tags_b;
    double score = 0.0;
};

WordAttribution word_attribution(const AttributionOutput& output, const TagLookup& tags);

/// Unordered relation name, tags sorted: "NN-VBZ".
std::string relation_name(const std::string& x, const std::string& y);

struct ShareRow {
    double fraction = 0.0;
    std::string relation;
    std::size_t count = 0;
    double share = 0.0;
};

/// For each fraction f: the top ceil(f * cells) word-word cells by signed
/// value across all inputs (ties by input, row, column), tallied by relation.
/// Rows per fraction are sorted by share descending, then relation name.
std::vector<ShareRow> pos_relation_shares(std::span<const WordAttribution> words, std::span<const double> fractions);

/// Sum of block-size-weighted word cells whose relation is in `relations`,
/// over the score. Throws NumericalError on a zero score.
double pos_restricted_prediction(const WordAttribution& words, const std::set<std::string>& relations);

}  // namespace xjac
