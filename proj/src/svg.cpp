#include "ionpot/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "ionpot/errors.hpp"

namespace ionpot {

namespace {

struct Bounds {
    double xlo = std::numeric_limits<double>::infinity();
    double xhi = -std::numeric_limits<double>::infinity();
    double ylo = std::numeric_limits<double>::infinity();
    double yhi = -std::numeric_limits<double>::infinity();

    void take(double x, double y) {
        if (!std::isfinite(x) || !std::isfinite(y)) return;
        xlo = std::min(xlo, x);
        xhi = std::max(xhi, x);
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Round tick spacing to 1/2/5 times a power of ten.
double nice_step(double span, int target_ticks) {
    const double raw = span / std::max(1, target_ticks);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double frac = raw / mag;
    double step = 10.0;
    if (frac <= 1.0) step = 1.0;
    else if (frac <= 2.0) step = 2.0;
    else if (frac <= 5.0) step = 5.0;
    return step * mag;
}

} // namespace

void write_svg_plot(const std::string& path, const SvgPlot& plot) {
    Bounds b;
    for (const auto& band : plot.bands) {
        if (band.x.size() != band.y_lo.size() || band.x.size() != band.y_hi.size()) {
            throw InvalidArgument("band arrays must have equal length");
        }
        for (std::size_t i = 0; i < band.x.size(); ++i) {
            b.take(band.x[i], band.y_lo[i]);
            b.take(band.x[i], band.y_hi[i]);
        }
    }
    for (const auto& s : plot.series) {
        if (s.x.size() != s.y.size()) throw InvalidArgument("series x/y length mismatch");
        for (std::size_t i = 0; i < s.x.size(); ++i) b.take(s.x[i], s.y[i]);
    }
    if (!(b.xhi >= b.xlo) || !(b.yhi >= b.ylo)) {
        throw InvalidArgument("plot has no finite data");
    }
    if (b.xhi == b.xlo) {
        b.xlo -= 0.5;
        b.xhi += 0.5;
    }
    if (b.yhi == b.ylo) {
        b.ylo -= 0.5;
        b.yhi += 0.5;
    }
    const double xpad = 0.04 * (b.xhi - b.xlo);
    const double ypad = 0.06 * (b.yhi - b.ylo);
    b.xlo -= xpad;
    b.xhi += xpad;
    b.ylo -= ypad;
    b.yhi += ypad;

    const double ml = 72, mr = 24, mt = plot.title.empty() ? 20 : 44, mb = 52;
    const double pw = plot.width_px - ml - mr;
    const double ph = plot.height_px - mt - mb;
    const auto px = [&](double x) { return ml + pw * (x - b.xlo) / (b.xhi - b.xlo); };
    const auto py = [&](double y) { return mt + ph * (b.yhi - y) / (b.yhi - b.ylo); };

    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width_px
        << "\" height=\"" << plot.height_px << "\" viewBox=\"0 0 " << plot.width_px << " "
        << plot.height_px << "\">\n";
    for (const auto& [key, value] : plot.metadata) {
        std::string line = key + ": " + value;
        // "--" terminates an XML comment early.
        for (std::size_t p = line.find("--"); p != std::string::npos; p = line.find("--", p))
            line.replace(p, 2, "- -");
        out << "<!-- " << line << " -->\n";
    }
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Grid and ticks.
    const double xstep = nice_step(b.xhi - b.xlo, 6);
    const double ystep = nice_step(b.yhi - b.ylo, 6);
    out << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";
    for (double t = std::ceil(b.xlo / xstep) * xstep; t <= b.xhi + 1e-12 * xstep; t += xstep) {
        const double X = px(t);
        out << "<line x1=\"" << fmt(X) << "\" y1=\"" << fmt(mt) << "\" x2=\"" << fmt(X)
            << "\" y2=\"" << fmt(mt + ph) << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << fmt(X) << "\" y=\"" << fmt(mt + ph + 18)
            << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
    }
    for (double t = std::ceil(b.ylo / ystep) * ystep; t <= b.yhi + 1e-12 * ystep; t += ystep) {
        const double Y = py(t);
        out << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(Y) << "\" x2=\"" << fmt(ml + pw)
            << "\" y2=\"" << fmt(Y) << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << fmt(ml - 8) << "\" y=\"" << fmt(Y + 4)
            << "\" text-anchor=\"end\">" << fmt(t) << "</text>\n";
    }
    out << "</g>\n";

    // Bands under the series.
    for (const auto& band : plot.bands) {
        if (band.x.empty()) continue;
        out << "<path d=\"M";
        for (std::size_t i = 0; i < band.x.size(); ++i) {
            out << fmt(px(band.x[i])) << " " << fmt(py(band.y_hi[i])) << " L";
        }
        for (std::size_t i = band.x.size(); i-- > 0;) {
            out << fmt(px(band.x[i])) << " " << fmt(py(band.y_lo[i]));
            if (i > 0) out << " L";
        }
        out << " Z\" fill=\"" << band.colour << "\" fill-opacity=\"" << fmt(band.opacity)
            << "\" stroke=\"none\"/>\n";
    }

    for (const auto& s : plot.series) {
        if (s.x.empty()) continue;
        if (s.lines) {
            // Break the polyline at non-finite samples.
            bool open = false;
            out << "<path d=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                    open = false;
                    continue;
                }
                out << (open ? " L" : " M") << fmt(px(s.x[i])) << " " << fmt(py(s.y[i]));
                open = true;
            }
            out << "\" fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\""
                << fmt(s.stroke_width) << "\"";
            if (s.dashed) out << " stroke-dasharray=\"6 4\"";
            out << "/>\n";
        }
        if (s.markers) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                out << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\"" << fmt(py(s.y[i]))
                    << "\" r=\"2.5\" fill=\"" << s.colour << "\"/>\n";
            }
        }
    }

    // Frame on top of data.
    out << "<rect x=\"" << fmt(ml) << "\" y=\"" << fmt(mt) << "\" width=\"" << fmt(pw)
        << "\" height=\"" << fmt(ph)
        << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";

    out << "<g font-family=\"sans-serif\" fill=\"#111\">\n";
    if (!plot.title.empty()) {
        out << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\"26\" font-size=\"16\" "
            << "text-anchor=\"middle\">" << plot.title << "</text>\n";
    }
    if (!plot.x_label.empty()) {
        out << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\"" << fmt(mt + ph + 40)
            << "\" font-size=\"13\" text-anchor=\"middle\">" << plot.x_label << "</text>\n";
    }
    if (!plot.y_label.empty()) {
        out << "<text x=\"18\" y=\"" << fmt(mt + ph / 2)
            << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
            << fmt(mt + ph / 2) << ")\">" << plot.y_label << "</text>\n";
    }

    // Legend, top right.
    double ly = mt + 14;
    for (const auto& s : plot.series) {
        if (s.label.empty()) continue;
        const double lx = ml + pw - 160;
        out << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
            << fmt(lx + 26) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << s.colour
            << "\" stroke-width=\"" << fmt(s.stroke_width) << "\""
            << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
        out << "<text x=\"" << fmt(lx + 32) << "\" y=\"" << fmt(ly) << "\" font-size=\"12\">"
            << s.label << "</text>\n";
        ly += 18;
    }
    out << "</g>\n</svg>\n";
    if (!out) throw IoError("write failed: " + path);
}

} // namespace ionpot
