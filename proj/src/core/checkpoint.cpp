// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/checkpoint.hpp"

#include "core/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace xjac {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json config_to_json(const EncoderConfig& c) {
    ordered_json j;
    j["architecture"] = to_string(c.architecture);
    j["dim"] = c.dim;
    j["layers"] = c.layers;
    j["heads"] = c.heads;
    j["embed_dim"] = c.embed_dim;
    j["ff_width"] = c.ff_width;
    j["max_len"] = c.max_len;
    j["activation"] = to_string(c.activation);
    j["pooling"] = "mean";
    j["shifted"] = c.shifted;
    j["layer_norm_eps"] = c.layer_norm_eps;
    return j;
}

EncoderConfig config_from_json(const json& j) {
    if (!j.is_object()) throw DataError("config must be a JSON object");
    EncoderConfig c;
    try {
        if (j.contains("architecture")) c.architecture = parse_architecture(j.at("architecture").get<std::string>());
        if (j.contains("dim")) c.dim = j.at("dim").get<int>();
        if (j.contains("layers")) c.layers = j.at("layers").get<int>();
        if (j.contains("heads")) c.heads = j.at("heads").get<int>();
        if (j.contains("embed_dim")) c.embed_dim = j.at("embed_dim").get<int>();
        if (j.contains("ff_width")) c.ff_width = j.at("ff_width").get<int>();
        if (j.contains("max_len")) c.max_len = j.at("max_len").get<int>();
        if (j.contains("activation")) c.activation = parse_activation(j.at("activation").get<std::string>());
        if (j.contains("pooling") && j.at("pooling").get<std::string>() != "mean")
            throw DataError("only mean pooling is supported");
        if (j.contains("shifted")) c.shifted = j.at("shifted").get<bool>();
        if (j.contains("layer_norm_eps")) c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string checkpoint_to_string(const Model& model) {
    ordered_json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["config"] = config_to_json(model.config());
    j["vocab"] = model.vocab().tokens();
    ordered_json params = ordered_json::object();
    ModelParams copy = model.params();
    for_each_tensor(copy, model.config().architecture, [&](const std::string& name, Mat& m) {
        ordered_json t;
        t["shape"] = {m.rows(), m.cols()};
        t["data"] = std::vector<double>(m.data(), m.data() + m.size());
        params[name] = std::move(t);
    });
    j["params"] = std::move(params);
    return j.dump() + "\n";
}

Model checkpoint_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != kCheckpointFormatVersion)
            throw DataError("unsupported checkpoint format_version");
        const EncoderConfig config = config_from_json(j.at("config"));
        const auto tokens = j.at("vocab").get<std::vector<std::string>>();
        Vocabulary vocab = Vocabulary::from_tokens(tokens, true);
        ModelParams params = zero_params(config, vocab.size());
        const json& tensors = j.at("params");
        for_each_tensor(params, config.architecture, [&](const std::string& name, Mat& m) {
            if (!tensors.contains(name)) throw DataError("checkpoint is missing tensor '" + name + "'");
            const json& t = tensors.at(name);
            const auto shape = t.at("shape").get<std::vector<long>>();
            const auto data = t.at("data").get<std::vector<double>>();
            if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols() ||
                data.size() != static_cast<std::size_t>(m.size()))
                throw DataError("tensor '" + name + "' has an unexpected shape");
            std::copy(data.begin(), data.end(), m.data());
        });
        return Model(config, std::move(vocab), std::move(params));
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Model& model, const std::string& path) {
    write_file_atomic(path, checkpoint_to_string(model));
}

Model load_checkpoint(const std::string& path) { return checkpoint_from_string(read_file(path)); }

void write_file_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open '" + tmp + "' for writing");
        out << contents;
        if (!out.flush()) throw DataError("failed writing '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw DataError("cannot move '" + tmp + "' to '" + path + "': " + ec.message());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace xjac
