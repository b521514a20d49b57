#pragma once

// Minimal SVG rendering of a series with its fitted mean function.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "cetseg/core.hpp"

namespace cetseg {

struct PlotFit {
    ChangepointConfiguration config;
    std::vector<double> fitted;  // f(t), t = 1..N
    bool continuous = false;     // draw as one polyline (joinpin)
    std::string title;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

/// Observations as a polyline; the fit as one line per regime, or as a single
/// polyline when `fit.continuous` is set. Regime lines span half a year either
/// side of their observations so length-one regimes stay visible.
inline std::string render_svg(const TimeSeries& series, const PlotFit& fit) {
    if (fit.fitted.size() != series.size() || fit.config.series_length() != series.size()) {
        throw std::invalid_argument("plot: fit does not correspond to the series");
    }
    constexpr double width = 960, height = 480;
    constexpr double left = 70, right = 20, top = 40, bottom = 60;
    const auto x = series.values();
    double lo = std::min(*std::min_element(x.begin(), x.end()), *std::min_element(fit.fitted.begin(), fit.fitted.end()));
    double hi = std::max(*std::max_element(x.begin(), x.end()), *std::max_element(fit.fitted.begin(), fit.fitted.end()));
    if (hi - lo < 1e-9) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    const double year0 = series.first_year() - 0.5;
    const double year1 = series.last_year() + 0.5;
    auto px = [&](double year) { return left + (year - year0) / (year1 - year0) * (width - left - right); };
    auto py = [&](double v) { return top + (hi - v) / (hi - lo) * (height - top - bottom); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(width) + "\" height=\"" +
           detail::fmt(height) + "\" viewBox=\"0 0 " + detail::fmt(width) + " " + detail::fmt(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!fit.title.empty()) {
        svg += "<text x=\"" + detail::fmt(width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"16\">" + detail::xml_escape(fit.title) + "</text>\n";
    }

    // Axes with ticks.
    const double x_axis_y = height - bottom;
    svg += "<g class=\"axes\" stroke=\"black\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<line x1=\"" + detail::fmt(left) + "\" y1=\"" + detail::fmt(x_axis_y) + "\" x2=\"" +
           detail::fmt(width - right) + "\" y2=\"" + detail::fmt(x_axis_y) + "\"/>\n";
    svg += "<line x1=\"" + detail::fmt(left) + "\" y1=\"" + detail::fmt(top) + "\" x2=\"" + detail::fmt(left) +
           "\" y2=\"" + detail::fmt(x_axis_y) + "\"/>\n";
    const int span = series.last_year() - series.first_year();
    const int step = span > 200 ? 50 : span > 80 ? 20 : span > 30 ? 10 : span > 10 ? 5 : 1;
    for (int year = (series.first_year() + step - 1) / step * step; year <= series.last_year(); year += step) {
        const double xp = px(year);
        svg += "<line x1=\"" + detail::fmt(xp) + "\" y1=\"" + detail::fmt(x_axis_y) + "\" x2=\"" + detail::fmt(xp) +
               "\" y2=\"" + detail::fmt(x_axis_y + 5) + "\"/>";
        svg += "<text x=\"" + detail::fmt(xp) + "\" y=\"" + detail::fmt(x_axis_y + 20) +
               "\" text-anchor=\"middle\" stroke=\"none\">" + std::to_string(year) + "</text>\n";
    }
    const double v_step = std::pow(10.0, std::floor(std::log10((hi - lo) / 2.0))) ;
    for (double v = std::ceil(lo / v_step) * v_step; v <= hi; v += v_step) {
        const double yp = py(v);
        svg += "<line x1=\"" + detail::fmt(left - 5) + "\" y1=\"" + detail::fmt(yp) + "\" x2=\"" + detail::fmt(left) +
               "\" y2=\"" + detail::fmt(yp) + "\"/>";
        svg += "<text x=\"" + detail::fmt(left - 8) + "\" y=\"" + detail::fmt(yp + 4) +
               "\" text-anchor=\"end\" stroke=\"none\">" + detail::fmt(v) + "</text>\n";
    }
    svg += "<text x=\"" + detail::fmt((left + width - right) / 2) + "\" y=\"" + detail::fmt(height - 15) +
           "\" text-anchor=\"middle\" stroke=\"none\">Year</text>\n";
    svg += "<text x=\"18\" y=\"" + detail::fmt((top + x_axis_y) / 2) + "\" text-anchor=\"middle\" stroke=\"none\" "
           "transform=\"rotate(-90 18 " + detail::fmt((top + x_axis_y) / 2) + ")\">Temperature (&#176;C)</text>\n";
    svg += "</g>\n";

    svg += "<polyline class=\"observed\" fill=\"none\" stroke=\"#7f7f7f\" stroke-width=\"1\" points=\"";
    for (std::size_t t = 1; t <= series.size(); ++t) {
        svg += detail::fmt(px(series.year_of(t))) + "," + detail::fmt(py(series.at(t))) + " ";
    }
    svg += "\"/>\n";

    if (fit.continuous) {
        svg += "<polyline class=\"fit\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" points=\"";
        for (std::size_t t = 1; t <= series.size(); ++t) {
            svg += detail::fmt(px(series.year_of(t))) + "," + detail::fmt(py(fit.fitted[t - 1])) + " ";
        }
        svg += "\"/>\n";
    } else {
        for (const auto& r : fit.config.regimes()) {
            // Extrapolate the regime's line half a step past each end.
            const double f_first = fit.fitted[r.first - 1];
            const double f_last = fit.fitted[r.last - 1];
            const double slope = r.length() > 1 ? (f_last - f_first) / static_cast<double>(r.length() - 1) : 0.0;
            const double y_start = series.year_of(r.first) - 0.5;
            const double y_end = series.year_of(r.last) + 0.5;
            svg += "<line class=\"fit-segment\" stroke=\"#d62728\" stroke-width=\"2\" x1=\"" + detail::fmt(px(y_start)) +
                   "\" y1=\"" + detail::fmt(py(f_first - 0.5 * slope)) + "\" x2=\"" + detail::fmt(px(y_end)) +
                   "\" y2=\"" + detail::fmt(py(f_last + 0.5 * slope)) + "\"/>\n";
        }
    }
    svg += "</svg>\n";
    return svg;
}

inline void emit_plot(const TimeSeries& series, const PlotFit& fit, const std::string& path) {
    const auto svg = render_svg(series, fit);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write plot to '" + path + "'");
    out << svg;
    if (!out) throw std::runtime_error("failed writing plot to '" + path + "'");
}

}  // namespace cetseg
