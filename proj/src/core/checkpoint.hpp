// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "core/encoder.hpp"

#include <json.hpp>

#include <string>

namespace xjac {

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::ordered_json config_to_json(const EncoderConfig& config);
EncoderConfig config_from_json(const nlohmann::json& j);

/// {"format_version":1, "config":{...}, "vocab":[...], "params":{name:{"shape","data"}}}
/// with tensors in for_each_tensor order.
std::string checkpoint_to_string(const Model& model);
Model checkpoint_from_string(const std::string& text);

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

/// Writes to a sibling temp file and renames over the target.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace xjac
