#pragma once

// Minimal static SVG renderers for the plot data (convenience output, not
// a contract surface): scatter for Q-Q, interval rows for forest plots,
// a step line for the incremental curve, a shaded matrix for size grids.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "varmeta/diagnostics.hpp"
#include "varmeta/simulation.hpp"

namespace varmeta {
namespace svg {

namespace detail {

constexpr int width = 640;
constexpr int height = 480;
constexpr int margin = 50;

struct Scale {
    double lo, hi;
    double px0, px1;
    double operator()(double v) const { return px0 + (v - lo) / (hi - lo) * (px1 - px0); }
};

inline std::string header() {
    std::ostringstream s;
    s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='"
      << height << "' viewBox='0 0 " << width << " " << height << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n";
    return s.str();
}

inline std::string axes(const std::string& title) {
    std::ostringstream s;
    s << "<line x1='" << margin << "' y1='" << height - margin << "' x2='" << width - margin
      << "' y2='" << height - margin << "' stroke='black'/>\n"
      << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
      << height - margin << "' stroke='black'/>\n"
      << "<text x='" << width / 2 << "' y='20' text-anchor='middle' font-size='14'>"
      << title << "</text>\n";
    return s.str();
}

}  // namespace detail

inline std::string render(const QQData& q) {
    using namespace detail;
    double lo = 0.0, hi = 0.0;
    for (const auto& p : q.points) {
        lo = std::min({lo, p.theoretical, p.observed});
        hi = std::max({hi, p.theoretical, p.observed});
    }
    lo -= 0.5;
    hi += 0.5;
    const Scale sx{lo, hi, static_cast<double>(margin), static_cast<double>(width - margin)};
    const Scale sy{lo, hi, static_cast<double>(height - margin), static_cast<double>(margin)};
    std::ostringstream s;
    s << header() << axes(std::string("Q-Q plot (") + name(q.transform) + ")");
    s << "<line x1='" << sx(lo) << "' y1='" << sy(lo) << "' x2='" << sx(hi) << "' y2='"
      << sy(hi) << "' stroke='gray' stroke-dasharray='4'/>\n";
    for (const auto& p : q.points)
        s << "<circle cx='" << sx(p.theoretical) << "' cy='" << sy(p.observed)
          << "' r='4' fill='steelblue'/>\n";
    s << "</svg>\n";
    return s.str();
}

inline std::string render(const std::vector<ForestRow>& rows,
                          const RatioEstimate* overall = nullptr) {
    using namespace detail;
    double lo = 1e300, hi = -1e300;
    for (const auto& r : rows) {
        lo = std::min(lo, r.ci_low);
        hi = std::max(hi, r.ci_high);
    }
    if (overall) {
        lo = std::min(lo, overall->ci_low);
        hi = std::max(hi, overall->ci_high);
    }
    lo = std::log(std::max(1e-6, lo));
    hi = std::log(hi);
    const Scale sx{lo, hi, static_cast<double>(margin + 60), static_cast<double>(width - margin)};
    const int nrows = static_cast<int>(rows.size()) + (overall ? 1 : 0);
    const double step = (height - 2.0 * margin) / std::max(1, nrows);
    std::ostringstream s;
    s << header() << axes("Variance ratios with intervals (log scale)");
    if (lo < 0.0 && hi > 0.0)
        s << "<line x1='" << sx(0.0) << "' y1='" << margin << "' x2='" << sx(0.0)
          << "' y2='" << height - margin << "' stroke='gray' stroke-dasharray='4'/>\n";
    double y = margin + 0.5 * step;
    for (const auto& r : rows) {
        s << "<text x='10' y='" << y + 4 << "' font-size='11'>" << r.study_id << "</text>\n"
          << "<line x1='" << sx(std::log(r.ci_low)) << "' y1='" << y << "' x2='"
          << sx(std::log(r.ci_high)) << "' y2='" << y << "' stroke='black'/>\n"
          << "<rect x='" << sx(std::log(r.ratio)) - 3 << "' y='" << y - 3
          << "' width='6' height='6' fill='black'/>\n";
        y += step;
    }
    if (overall) {
        s << "<text x='10' y='" << y + 4 << "' font-size='11'>Overall</text>\n"
          << "<line x1='" << sx(std::log(overall->ci_low)) << "' y1='" << y << "' x2='"
          << sx(std::log(overall->ci_high)) << "' y2='" << y
          << "' stroke='darkred' stroke-width='2'/>\n"
          << "<circle cx='" << sx(std::log(overall->rho_hat)) << "' cy='" << y
          << "' r='5' fill='darkred'/>\n";
    }
    s << "</svg>\n";
    return s.str();
}

inline std::string render(const IncrementalCurve& curve) {
    using namespace detail;
    const Scale sx{1.0, static_cast<double>(curve.steps.size()),
                   static_cast<double>(margin), static_cast<double>(width - margin)};
    const Scale sy{0.0, 1.0, static_cast<double>(height - margin), static_cast<double>(margin)};
    std::ostringstream s;
    s << header() << axes("Incremental-inclusion p-values");
    s << "<line x1='" << margin << "' y1='" << sy(0.05) << "' x2='" << width - margin
      << "' y2='" << sy(0.05) << "' stroke='gray' stroke-dasharray='4'/>\n";
    std::ostringstream path;
    for (std::size_t i = 0; i < curve.steps.size(); ++i)
        path << (i == 0 ? "M" : "L") << sx(curve.steps[i].k_star) << ","
             << sy(curve.steps[i].p_value) << " ";
    s << "<path d='" << path.str() << "' fill='none' stroke='steelblue' stroke-width='2'/>\n";
    for (const auto& st : curve.steps)
        s << "<circle cx='" << sx(st.k_star) << "' cy='" << sy(st.p_value)
          << "' r='4' fill='steelblue'/>\n";
    s << "</svg>\n";
    return s.str();
}

inline std::string render(const SizeGrid& grid) {
    using namespace detail;
    const std::size_t n1 = grid.nu1.size(), n2 = grid.nu2.size();
    const double cell_w = (width - 2.0 * margin) / n2;
    const double cell_h = (height - 2.0 * margin) / n1;
    std::ostringstream s;
    s << header() << axes(std::string("Empirical size (") + name(grid.transform) + ")");
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t jcol = 0; jcol < n2; ++jcol) {
            const double v = grid.at(i, jcol);
            std::string fill = "white";
            if (!std::isnan(v)) {
                // deviation from alpha mapped to a red/blue ramp
                const double dev = std::clamp((v - grid.alpha) / grid.alpha, -1.0, 1.0);
                const int r = dev > 0 ? 255 : static_cast<int>(255 * (1.0 + dev));
                const int b = dev < 0 ? 255 : static_cast<int>(255 * (1.0 - dev));
                const int g = static_cast<int>(255 * (1.0 - std::fabs(dev)));
                fill = "rgb(" + std::to_string(r) + "," + std::to_string(g) + "," +
                       std::to_string(b) + ")";
            }
            s << "<rect x='" << margin + jcol * cell_w << "' y='"
              << height - margin - (i + 1) * cell_h << "' width='" << cell_w
              << "' height='" << cell_h << "' fill='" << fill
              << "' stroke='lightgray'/>\n";
        }
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace svg
}  // namespace varmeta
