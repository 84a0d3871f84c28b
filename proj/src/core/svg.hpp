// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "core/attribution.hpp"

#include <array>
#include <string>

namespace xjac {

using Rgb = std::array<unsigned char, 3>;

/// Blue for t = -1, white for 0, red for +1; t is clamped.
Rgb diverging_color(double t);

/// Token-token heatmap: rows are tokens of a, columns tokens of b, colour
/// scale symmetric around zero, score and error in the title.
std::string render_heatmap_svg(const AttributionOutput& out);

}  // namespace xjac
