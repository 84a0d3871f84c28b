// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/synthetic.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <set>
#include <sstream>

namespace xjac {

namespace {

const std::vector<std::string> kDeterminers = {"the", "a"};
const std::vector<std::string> kAdjectives = {"red", "big", "small", "old", "quiet", "happy"};
const std::vector<std::string> kNouns = {"dog", "cat", "child", "car", "house", "river", "bird", "teacher"};
const std::vector<std::string> kVerbs = {"sees", "likes", "chases", "finds", "holds", "paints"};

constexpr std::array<const char*, 6> kTags = {"DT", "JJ", "NN", "VBZ", "DT", "NN"};

struct Sentence {
    std::array<std::string, 6> words;
    [[nodiscard]] std::string text() const {
        std::string out;
        for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
        return out;
    }
};

const std::vector<std::string>& pool_for_slot(int slot) {
    switch (slot) {
        case 1: return kAdjectives;
        case 3: return kVerbs;
        default: return kNouns;
    }
}

template <class Rng>
std::string pick(const std::vector<std::string>& pool, const std::set<std::string>& avoid, Rng& rng) {
    std::vector<std::string> options;
    for (const auto& w : pool)
        if (!avoid.count(w)) options.push_back(w);
    std::uniform_int_distribution<std::size_t> d(0, options.size() - 1);
    return options[d(rng)];
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(std::size_t pairs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    constexpr std::array<int, 4> content = {1, 2, 3, 5};
    std::uniform_int_distribution<int> det(0, 1);
    std::uniform_int_distribution<int> keep_count(0, 4);

    SyntheticCorpus corpus;
    std::set<std::string> seen;
    std::ostringstream tags;
    auto emit_tags = [&](const Sentence& s) {
        if (!seen.insert(s.text()).second) return;
        for (std::size_t i = 0; i < s.words.size(); ++i) tags << s.words[i] << '\t' << kTags[i] << '\n';
        tags << '\n';
    };

    for (std::size_t p = 0; p < pairs; ++p) {
        Sentence a;
        std::set<std::string> used;
        for (int slot : content) {
            a.words[slot] = pick(pool_for_slot(slot), used, rng);
            used.insert(a.words[slot]);
        }
        a.words[0] = kDeterminers[det(rng)];
        a.words[4] = kDeterminers[det(rng)];

        const int keep = keep_count(rng);
        std::array<int, 4> slots = content;
        std::shuffle(slots.begin(), slots.end(), rng);
        Sentence b = a;
        std::set<std::string> avoid = used;
        for (int i = keep; i < 4; ++i) {
            const int slot = slots[static_cast<std::size_t>(i)];
            b.words[slot] = pick(pool_for_slot(slot), avoid, rng);
            avoid.insert(b.words[slot]);
        }
        b.words[0] = kDeterminers[det(rng)];
        b.words[4] = kDeterminers[det(rng)];

        corpus.pairs.push_back({a.text(), b.text(), keep / 4.0});
        emit_tags(a);
        emit_tags(b);
    }
    corpus.tags = tags.str();
    return corpus;
}

}  // namespace xjac
