#ifndef IONPOT_SVG_HPP
#define IONPOT_SVG_HPP

#include <string>
#include <utility>
#include <vector>

namespace ionpot {

// Minimal self-contained SVG line plots; no plotting dependency.

struct SvgSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::string colour = "#1f6fb2";
    double stroke_width = 1.6;
    bool dashed = false;
    bool markers = false;  // draw small circles at the points
    bool lines = true;     // false: scatter only
    std::string label;     // legend entry when non-empty
};

// Filled y-range band (e.g. mean +- sigma), drawn underneath the series.
struct SvgBand {
    std::vector<double> x;
    std::vector<double> y_lo;
    std::vector<double> y_hi;
    std::string colour = "#1f6fb2";
    double opacity = 0.25;
};

struct SvgPlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<SvgBand> bands;
    std::vector<SvgSeries> series;
    // Emitted as "<!-- key: value -->" comment lines after the opening tag.
    std::vector<std::pair<std::string, std::string>> metadata;
    int width_px = 880;
    int height_px = 560;
};

void write_svg_plot(const std::string& path, const SvgPlot& plot);

} // namespace ionpot

#endif
