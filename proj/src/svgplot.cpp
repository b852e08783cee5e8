#include "mfctrl/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mfctrl {

namespace {

const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                         "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2"};
constexpr int palette_size = 10;

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

// round the raw span to a 1/2/5 ladder tick spacing
double tick_step(double span) {
    if (!(span > 0.0)) return 1.0;
    double raw = span / 5.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double frac = raw / mag;
    double step = frac < 1.5 ? 1.0 : frac < 3.5 ? 2.0 : frac < 7.5 ? 5.0 : 10.0;
    return step * mag;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

} // namespace

void SvgPlot::add_series(const std::string& label, const std::vector<double>& x,
                         const std::vector<double>& y, double stroke_width) {
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("plot: series needs matching nonempty x and y");
    series_.push_back({label, x, y, stroke_width});
}

std::string SvgPlot::render(int width, int height) const {
    const double ml = 62, mr = 16, mt = 34, mb = 46;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series_)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (series_.empty()) {
        xmin = ymin = 0.0;
        xmax = ymax = 1.0;
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) {
        ymax = ymin + 1.0;
        ymin -= 0.5;
    } else {
        double pad = 0.05 * (ymax - ymin);
        ymin -= pad;
        ymax += pad;
    }

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\" "
           "font-family=\"sans-serif\">"
        << escape(title_) << "</text>\n";

    const double xstep = tick_step(xmax - xmin), ystep = tick_step(ymax - ymin);
    for (double t = std::ceil(xmin / xstep) * xstep; t <= xmax + 1e-9 * xstep; t += xstep) {
        double x = px(t);
        out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(mt) << "\" x2=\"" << fmt(x) << "\" y2=\""
            << fmt(mt + ph) << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n"
            << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(mt + ph + 16)
            << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(t)
            << "</text>\n";
    }
    for (double t = std::ceil(ymin / ystep) * ystep; t <= ymax + 1e-9 * ystep; t += ystep) {
        double y = py(t);
        out << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(ml + pw)
            << "\" y2=\"" << fmt(y) << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n"
            << "<text x=\"" << fmt(ml - 6) << "\" y=\"" << fmt(y + 4)
            << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(t)
            << "</text>\n";
    }
    out << "<rect x=\"" << fmt(ml) << "\" y=\"" << fmt(mt) << "\" width=\"" << fmt(pw)
        << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"#333333\"/>\n";

    for (std::size_t k = 0; k < series_.size(); ++k) {
        const auto& s = series_[k];
        out << "<polyline fill=\"none\" stroke=\"" << palette[k % palette_size]
            << "\" stroke-width=\"" << fmt(s.width) << "\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << fmt(px(s.x[i])) << "," << fmt(py(s.y[i])) << " ";
        out << "\"/>\n";
    }

    double ly = mt + 12;
    for (std::size_t k = 0; k < series_.size(); ++k) {
        if (series_[k].label.empty()) continue;
        out << "<line x1=\"" << fmt(ml + pw - 130) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
            << fmt(ml + pw - 110) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\""
            << palette[k % palette_size] << "\" stroke-width=\"" << fmt(series_[k].width)
            << "\"/>\n"
            << "<text x=\"" << fmt(ml + pw - 104) << "\" y=\"" << fmt(ly)
            << "\" font-size=\"11\" font-family=\"sans-serif\">" << escape(series_[k].label)
            << "</text>\n";
        ly += 15;
    }

    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">"
        << escape(xlabel_) << "</text>\n"
        << "<text x=\"16\" y=\"" << fmt(mt + ph / 2) << "\" text-anchor=\"middle\" font-size=\"12\" "
           "font-family=\"sans-serif\" transform=\"rotate(-90 16 "
        << fmt(mt + ph / 2) << ")\">" << escape(ylabel_) << "</text>\n</svg>\n";
    return out.str();
}

void SvgPlot::write(const std::string& file, int width, int height) const {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("plot: cannot write " + file);
    out << render(width, height);
}

} // namespace mfctrl
