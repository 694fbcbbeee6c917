#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpal/metrics.hpp"
#include "gpal/util.hpp"

namespace gpal {

/// One metric-vs-training-set-size curve per method, for the benchmark
/// results figure.
struct PlotSeries {
    std::string method;  // lowercase method name
    std::vector<double> values;
    double auc = 0.0;
};

struct PlotSpec {
    std::vector<PlotSeries> series;
    int init_set_size = 1;  // x axis starts here
    std::string metric_name = "rmse";
};

namespace detail {

inline std::string svg_num(double v) {
    // fixed 2-decimal coordinates keep the file byte-stable
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

}  // namespace detail

/// Standalone deterministic SVG: one polyline per method (markers only for
/// single-point series), axis labels, and a legend with each method's AUC.
inline void emit_plot(const PlotSpec& spec, const std::string& path) {
    if (spec.series.empty()) throw std::invalid_argument("emit_plot: no series");
    std::size_t len = 0;
    for (const auto& s : spec.series) {
        if (s.values.empty()) throw std::invalid_argument("emit_plot: empty series");
        len = std::max(len, s.values.size());
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : spec.series)
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (hi == lo) {
        hi += 1.0;
        lo -= 1.0;
    }

    const double w = 640, h = 480, ml = 70, mr = 20, mt = 20, mb = 50;
    const double pw = w - ml - mr, ph = h - mt - mb;
    const double x0 = spec.init_set_size;
    const double x1 = spec.init_set_size + static_cast<double>(len > 1 ? len - 1 : 1);
    auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return mt + (hi - y) / (hi - lo) * ph; };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b"};

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write plot: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
           "viewBox=\"0 0 640 480\">\n";
    out << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    // axes
    out << "<line x1=\"" << detail::svg_num(ml) << "\" y1=\"" << detail::svg_num(mt)
        << "\" x2=\"" << detail::svg_num(ml) << "\" y2=\"" << detail::svg_num(mt + ph)
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << detail::svg_num(ml) << "\" y1=\"" << detail::svg_num(mt + ph)
        << "\" x2=\"" << detail::svg_num(ml + pw) << "\" y2=\"" << detail::svg_num(mt + ph)
        << "\" stroke=\"black\"/>\n";
    // axis ticks: ends only
    for (double xv : {x0, x1}) {
        out << "<text x=\"" << detail::svg_num(px(xv)) << "\" y=\"" << detail::svg_num(mt + ph + 18)
            << "\" font-size=\"12\" text-anchor=\"middle\">" << format_double(xv) << "</text>\n";
    }
    for (double yv : {lo, hi}) {
        out << "<text x=\"" << detail::svg_num(ml - 6) << "\" y=\"" << detail::svg_num(py(yv) + 4)
            << "\" font-size=\"12\" text-anchor=\"end\">" << format_double(yv) << "</text>\n";
    }
    out << "<text x=\"" << detail::svg_num(ml + pw / 2) << "\" y=\"" << detail::svg_num(h - 12)
        << "\" font-size=\"14\" text-anchor=\"middle\">number of training samples</text>\n";
    out << "<text x=\"18\" y=\"" << detail::svg_num(mt + ph / 2)
        << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << detail::svg_num(mt + ph / 2) << ")\">" << spec.metric_name << "</text>\n";

    for (std::size_t s = 0; s < spec.series.size(); ++s) {
        const auto& sr = spec.series[s];
        const char* color = palette[s % 6];
        if (sr.values.size() == 1) {
            out << "<circle cx=\"" << detail::svg_num(px(x0)) << "\" cy=\""
                << detail::svg_num(py(sr.values[0])) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        } else {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" "
                   "points=\"";
            for (std::size_t i = 0; i < sr.values.size(); ++i) {
                if (i) out << ' ';
                out << detail::svg_num(px(x0 + static_cast<double>(i))) << ','
                    << detail::svg_num(py(sr.values[i]));
            }
            out << "\"/>\n";
        }
        const double ly = mt + 16 + 18 * static_cast<double>(s);
        out << "<line x1=\"" << detail::svg_num(ml + pw - 150) << "\" y1=\"" << detail::svg_num(ly)
            << "\" x2=\"" << detail::svg_num(ml + pw - 130) << "\" y2=\"" << detail::svg_num(ly)
            << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
        out << "<text x=\"" << detail::svg_num(ml + pw - 125) << "\" y=\"" << detail::svg_num(ly + 4)
            << "\" font-size=\"12\">" << detail::upper(sr.method) << " (AUC="
            << format_double(sr.auc) << ")</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw std::runtime_error("write failure on " + path);
}

}  // namespace gpal
