// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/io.hpp"

#include "core/checkpoint.hpp"
#include "core/errors.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <sstream>

namespace xjac {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

ordered_json attribution_to_json(const AttributionOutput& out) {
    ordered_json j;
    j["tokens_a"] = out.tokens_a;
    j["tokens_b"] = out.tokens_b;
    j["layer"] = out.layer;
    j["steps"] = out.steps;
    j["scheme"] = to_string(out.scheme);
    j["score"] = out.score;
    j["attribution_sum"] = out.attribution_sum;
    j["error"] = out.error;
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < out.token_matrix.rows(); ++i) {
        const auto row = out.token_matrix.row(i);
        rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
    }
    j["matrix"] = std::move(rows);
    return j;
}

std::string attribution_to_string(const AttributionOutput& out) { return attribution_to_json(out).dump(2) + "\n"; }

AttributionOutput attribution_from_string(const std::string& text) {
    AttributionOutput out;
    try {
        const json j = json::parse(text);
        out.tokens_a = j.at("tokens_a").get<std::vector<std::string>>();
        out.tokens_b = j.at("tokens_b").get<std::vector<std::string>>();
        out.layer = j.at("layer").get<int>();
        out.steps = j.at("steps").get<int>();
        out.scheme = parse_scheme(j.at("scheme").get<std::string>());
        out.score = j.at("score").get<double>();
        out.attribution_sum = j.at("attribution_sum").get<double>();
        out.error = j.at("error").get<double>();
        const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
        const auto r = static_cast<Eigen::Index>(rows.size());
        const auto c = static_cast<Eigen::Index>(rows.empty() ? 0 : rows.front().size());
        if (r != static_cast<Eigen::Index>(out.tokens_a.size()) || c != static_cast<Eigen::Index>(out.tokens_b.size()))
            throw DataError("attribution matrix shape does not match the token lists");
        out.token_matrix.resize(r, c);
        for (Eigen::Index i = 0; i < r; ++i) {
            if (static_cast<Eigen::Index>(rows[i].size()) != c) throw DataError("attribution matrix is ragged");
            for (Eigen::Index k = 0; k < c; ++k) out.token_matrix(i, k) = rows[i][k];
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed attribution JSON: ") + e.what());
    } catch (const UsageError& e) {
        throw DataError(std::string("malformed attribution JSON: ") + e.what());
    }
    return out;
}

std::vector<AttributionOutput> load_attributions(const std::string& path) {
    std::vector<std::string> files;
    std::error_code ec;
    if (fs::is_directory(path, ec)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            const auto name = entry.path().filename().string();
            if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
            if (name.size() >= 14 && name.ends_with(".manifest.json")) continue;
            files.push_back(entry.path().string());
        }
        std::sort(files.begin(), files.end());
    } else if (fs::is_regular_file(path, ec)) {
        files.push_back(path);
    }
    if (files.empty()) throw DataError("no attribution JSON files under '" + path + "'");
    std::vector<AttributionOutput> out;
    for (const auto& f : files) {
        try {
            out.push_back(attribution_from_string(read_file(f)));
        } catch (const DataError& e) {
            throw DataError(f + ": " + e.what());
        }
    }
    return out;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string manifest_to_string(const RunManifest& m) {
    ordered_json j;
    j["command"] = m.command;
    j["config"] = m.config;
    j["seed"] = m.seed;
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    j["inputs"] = m.inputs;
    j["outputs"] = m.outputs;
    j["version"] = XJAC_VERSION_STRING;
    return j.dump(2) + "\n";
}

void write_manifest(const RunManifest& m, const std::string& primary_output) {
    write_file_atomic(primary_output + ".manifest.json", manifest_to_string(m));
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream s;
    s << "layer,N,mean_abs_error,std_error,mean_rel_error,pairs\n";
    for (const auto& r : rows)
        s << r.layer << ',' << r.steps << ',' << format_double(r.mean_abs_error) << ','
          << format_double(r.std_abs_error) << ',' << format_double(r.mean_rel_error) << ',' << r.pairs << '\n';
    return s.str();
}

std::string histogram_csv(const Histogram& h) {
    std::ostringstream s;
    s << "layer,bin_lo,bin_hi,count,negative_fraction\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        s << h.layer << ',' << format_double(h.edges[i]) << ',' << format_double(h.edges[i + 1]) << ','
          << h.counts[i] << ',' << format_double(h.negative_fraction) << '\n';
    return s.str();
}

std::string curve_csv(const CumulativeCurve& c) {
    std::ostringstream s;
    s << "percent,mean,std,examples,excluded\n";
    for (std::size_t i = 0; i < c.fractions.size(); ++i)
        s << format_double(100.0 * c.fractions[i]) << ',' << format_double(c.mean[i]) << ','
          << format_double(c.stddev[i]) << ',' << c.examples << ',' << c.excluded << '\n';
    return s.str();
}

std::string shares_csv(const std::vector<ShareRow>& rows) {
    std::ostringstream s;
    s << "fraction,rank,relation,count,share\n";
    double current = -1.0;
    int rank = 0;
    for (const auto& r : rows) {
        if (r.fraction != current) {
            current = r.fraction;
            rank = 0;
        }
        s << format_double(r.fraction) << ',' << ++rank << ',' << r.relation << ',' << r.count << ','
          << format_double(r.share) << '\n';
    }
    return s.str();
}

}  // namespace xjac
