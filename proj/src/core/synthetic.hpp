// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "core/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace xjac {

/// Scored pairs from a fixed template "DT JJ NN VBZ DT NN". The second text
/// keeps m of the four content slots (m uniform in 0..4) and replaces the
/// rest with words unused by the first; the label is m / 4.
struct SyntheticCorpus {
    std::vector<Pair> pairs;
    /// CoNLL-style "word<TAB>tag" lines, one block per distinct sentence.
    std::string tags;
};

SyntheticCorpus make_synthetic_corpus(std::size_t pairs, std::uint64_t seed);

}  // namespace xjac
