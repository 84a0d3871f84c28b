// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xjac {

using TokenId = std::uint32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";

/// Dense token -> id map. Ids 0 and 1 are always the pad and unknown tokens.
class Vocabulary {
public:
    /// Creates a vocabulary holding only the reserved tokens.
    explicit Vocabulary(bool lowercase = true);

    /// Rebuilds a vocabulary from an id-ordered token list (checkpoint form).
    /// The list must start with the two reserved tokens and be duplicate-free.
    static Vocabulary from_tokens(const std::vector<std::string>& tokens, bool lowercase = true);

    TokenId add(const std::string& token);
    [[nodiscard]] TokenId lookup(std::string_view token) const;
    [[nodiscard]] bool contains(std::string_view token) const;
    [[nodiscard]] const std::string& token(TokenId id) const;
    [[nodiscard]] std::size_t size() const { return tokens_.size(); }
    [[nodiscard]] bool lowercase() const { return lowercase_; }
    [[nodiscard]] const std::vector<std::string>& tokens() const { return tokens_; }

private:
    bool lowercase_;
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> ids_;
};

struct TokenSequence {
    std::vector<TokenId> ids;
    std::vector<std::string> words;  // surface form per id, for display
    std::string text;

    [[nodiscard]] std::size_t size() const { return ids.size(); }
};

/// Splits on ASCII whitespace, optionally lowercasing.
std::vector<std::string> split_words(std::string_view text, bool lowercase);

/// Frequency-descending, then lexicographic. Throws DataError on an empty corpus.
Vocabulary build_vocab(const std::vector<std::string>& corpus, int min_count, bool lowercase = true);

/// Throws DataError when the text contains no tokens.
TokenSequence tokenize(std::string_view text, const Vocabulary& vocab);

/// All-pad sequence of the same length.
TokenSequence reference_for(const TokenSequence& seq);

}  // namespace xjac
