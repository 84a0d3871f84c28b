// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "core/analysis.hpp"
#include "core/attribution.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace xjac {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// {"tokens_a", "tokens_b", "layer", "steps", "scheme", "score",
///  "attribution_sum", "error", "matrix"} with the token-token matrix as rows.
nlohmann::ordered_json attribution_to_json(const AttributionOutput& out);
std::string attribution_to_string(const AttributionOutput& out);
/// Throws DataError on missing fields or a ragged matrix.
AttributionOutput attribution_from_string(const std::string& text);

/// All *.json files of a directory (manifests skipped), sorted by name, or a
/// single file. Throws DataError when nothing is found.
std::vector<AttributionOutput> load_attributions(const std::string& path);

struct RunManifest {
    std::string command;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::uint64_t seed = 0;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
};

/// UTC, ISO 8601 with seconds.
std::string utc_timestamp();
std::string manifest_to_string(const RunManifest& m);
/// Writes "<output>.manifest.json" next to the primary output.
void write_manifest(const RunManifest& m, const std::string& primary_output);

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string histogram_csv(const Histogram& h);
/// percent,mean,std,examples,excluded per grid point; the final row is the endpoint.
std::string curve_csv(const CumulativeCurve& c);
std::string shares_csv(const std::vector<ShareRow>& rows);

}  // namespace xjac
