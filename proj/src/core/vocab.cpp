// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/vocab.hpp"

#include "core/errors.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace xjac {

Vocabulary::Vocabulary(bool lowercase) : lowercase_(lowercase) {
    add(std::string(kPadToken));
    add(std::string(kUnkToken));
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens, bool lowercase) {
    if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kUnkToken) {
        throw DataError("vocabulary must start with " + std::string(kPadToken) + " and " +
                        std::string(kUnkToken));
    }
    Vocabulary v(lowercase);
    for (std::size_t i = 2; i < tokens.size(); ++i) {
        if (v.contains(tokens[i])) throw DataError("duplicate vocabulary entry '" + tokens[i] + "'");
        v.add(tokens[i]);
    }
    return v;
}

TokenId Vocabulary::add(const std::string& token) {
    if (auto it = ids_.find(token); it != ids_.end()) return it->second;
    const auto id = static_cast<TokenId>(tokens_.size());
    tokens_.push_back(token);
    ids_.emplace(token, id);
    return id;
}

TokenId Vocabulary::lookup(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    return it == ids_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) > 0; }

const std::string& Vocabulary::token(TokenId id) const {
    if (id >= tokens_.size()) throw DataError("token id " + std::to_string(id) + " out of range");
    return tokens_[id];
}

std::vector<std::string> split_words(std::string_view text, bool lowercase) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) words.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(lowercase ? static_cast<char>(std::tolower(static_cast<unsigned char>(c))) : c);
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

Vocabulary build_vocab(const std::vector<std::string>& corpus, int min_count, bool lowercase) {
    if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
    std::map<std::string, long> counts;
    for (const auto& text : corpus)
        for (auto& w : split_words(text, lowercase)) ++counts[w];

    std::vector<std::pair<std::string, long>> entries(counts.begin(), counts.end());
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& x, const auto& y) { return x.second > y.second; });

    Vocabulary vocab(lowercase);
    for (const auto& [word, count] : entries) {
        if (count < min_count) continue;
        if (word == kPadToken || word == kUnkToken) continue;
        vocab.add(word);
    }
    return vocab;
}

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab) {
    TokenSequence seq;
    seq.text = std::string(text);
    seq.words = split_words(text, vocab.lowercase());
    if (seq.words.empty()) throw DataError("cannot tokenize empty or whitespace-only text");
    seq.ids.reserve(seq.words.size());
    for (const auto& w : seq.words) seq.ids.push_back(vocab.lookup(w));
    return seq;
}

TokenSequence reference_for(const TokenSequence& seq) {
    if (seq.ids.empty()) throw UsageError("reference_for: empty sequence");
    TokenSequence ref;
    ref.ids.assign(seq.size(), kPadId);
    ref.words.assign(seq.size(), std::string(kPadToken));
    return ref;
}

}  // namespace xjac
