#pragma once

#include <string>
#include <vector>

namespace mfctrl {

// Minimal static line plotter: polyline series on shared axes, written as a
// standalone SVG file.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string xlabel, std::string ylabel)
        : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

    void add_series(const std::string& label, const std::vector<double>& x,
                    const std::vector<double>& y, double stroke_width = 1.5);

    std::string render(int width = 720, int height = 440) const;
    void write(const std::string& file, int width = 720, int height = 440) const;

private:
    struct Series {
        std::string label;
        std::vector<double> x, y;
        double width;
    };
    std::string title_, xlabel_, ylabel_;
    std::vector<Series> series_;
};

} // namespace mfctrl
