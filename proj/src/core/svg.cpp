// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace xjac {
namespace {

constexpr Rgb kNegative{33, 102, 172};
constexpr Rgb kMid{247, 247, 247};
constexpr Rgb kPositive{178, 24, 43};

constexpr int kCell = 36;
constexpr int kCharWidth = 7;
constexpr int kPad = 12;
constexpr int kTitleHeight = 40;
constexpr int kLegendWidth = 16;

unsigned char lerp(unsigned char x, unsigned char y, double t) {
    return static_cast<unsigned char>(std::lround(x + (y - x) * t));
}

std::string hex(const Rgb& c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string sci(double v, int digits = 3) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::size_t longest(const std::vector<std::string>& v) {
    std::size_t n = 0;
    for (const auto& s : v) n = std::max(n, s.size());
    return n;
}

}  // namespace

Rgb diverging_color(double t) {
    if (!std::isfinite(t)) return kMid;
    t = std::clamp(t, -1.0, 1.0);
    const Rgb& end = t < 0 ? kNegative : kPositive;
    const double u = std::abs(t);
    return {lerp(kMid[0], end[0], u), lerp(kMid[1], end[1], u), lerp(kMid[2], end[2], u)};
}

std::string render_heatmap_svg(const AttributionOutput& out) {
    const Mat& m = out.token_matrix;
    const auto rows = static_cast<int>(m.rows());
    const auto cols = static_cast<int>(m.cols());
    const double scale = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;

    const int left = kPad + kCharWidth * static_cast<int>(longest(out.tokens_a)) + 8;
    const int top = kTitleHeight + kCharWidth * static_cast<int>(longest(out.tokens_b)) + 8;
    const int grid_w = cols * kCell;
    const int grid_h = rows * kCell;
    const int legend_x = left + grid_w + 24;
    const int width = legend_x + kLegendWidth + 80;
    const int height = std::max(top + grid_h, top + 160) + kPad;

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << kPad << "\" y=\"18\" font-size=\"14\">score " << sci(out.score, 4) << ", attribution error "
      << sci(out.error, 2) << "</text>\n";
    s << "<text x=\"" << kPad << "\" y=\"34\" fill=\"#555\">layer " << out.layer << ", N=" << out.steps << ", "
      << to_string(out.scheme) << "</text>\n";

    for (int j = 0; j < cols; ++j) {
        const int x = left + j * kCell + kCell / 2 + 4;
        s << "<text transform=\"translate(" << x << ',' << top - 6 << ") rotate(-90)\">"
          << escape(j < static_cast<int>(out.tokens_b.size()) ? out.tokens_b[j] : "") << "</text>\n";
    }
    for (int i = 0; i < rows; ++i) {
        const int y = top + i * kCell + kCell / 2 + 4;
        s << "<text x=\"" << left - 6 << "\" y=\"" << y << "\" text-anchor=\"end\">"
          << escape(i < static_cast<int>(out.tokens_a.size()) ? out.tokens_a[i] : "") << "</text>\n";
    }
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const double v = m(i, j);
            s << "<rect x=\"" << left + j * kCell << "\" y=\"" << top + i * kCell << "\" width=\"" << kCell
              << "\" height=\"" << kCell << "\" fill=\"" << hex(diverging_color(scale > 0 ? v / scale : 0.0))
              << "\"><title>" << sci(v, 6) << "</title></rect>\n";
        }
    }
    s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << grid_w << "\" height=\"" << grid_h
      << "\" fill=\"none\" stroke=\"#333\"/>\n";

    // Legend: +scale at the top, -scale at the bottom.
    constexpr int kSteps = 32;
    constexpr int kLegendHeight = 128;
    for (int k = 0; k < kSteps; ++k) {
        const double t = 1.0 - 2.0 * (k + 0.5) / kSteps;
        s << "<rect x=\"" << legend_x << "\" y=\"" << top + k * kLegendHeight / kSteps << "\" width=\""
          << kLegendWidth << "\" height=\"" << kLegendHeight / kSteps << "\" fill=\"" << hex(diverging_color(t))
          << "\"/>\n";
    }
    const int lx = legend_x + kLegendWidth + 4;
    s << "<text x=\"" << lx << "\" y=\"" << top + 10 << "\">" << sci(scale) << "</text>\n";
    s << "<text x=\"" << lx << "\" y=\"" << top + kLegendHeight / 2 + 4 << "\">0</text>\n";
    s << "<text x=\"" << lx << "\" y=\"" << top + kLegendHeight << "\">" << sci(-scale) << "</text>\n";
    s << "</svg>\n";
    return s.str();
}

}  // namespace xjac
