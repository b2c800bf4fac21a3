#include "netcut/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "netcut/error.hpp"

namespace netcut {

namespace {

struct Rgb {
    double r, g, b;
};

// dark -> magenta -> pale yellow, read as "cold" to "hot"
constexpr Rgb kStops[3] = {{0.0, 0.0, 0.02}, {0.72, 0.21, 0.47}, {0.99, 0.99, 0.75}};

std::string to_hex(const Rgb& c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                  static_cast<int>(std::lround(c.r * 255.0)),
                  static_cast<int>(std::lround(c.g * 255.0)),
                  static_cast<int>(std::lround(c.b * 255.0)));
    return buf;
}

Rgb lerp(const Rgb& a, const Rgb& b, double t) {
    return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

Rgb gradient(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t < 0.5 ? lerp(kStops[0], kStops[1], t * 2.0)
                   : lerp(kStops[1], kStops[2], (t - 0.5) * 2.0);
}

}  // namespace

std::string heatmap_color(double w) {
    const double clamped = std::clamp(w, 1e-4, 1.0);
    const double t = (std::log10(clamped) + 4.0) / 4.0;  // [1e-4, 1] -> [0, 1]
    return to_hex(gradient(t));
}

void write_heatmap_svg(const std::string& path,
                       const std::vector<std::vector<double>>& w_epochs) {
    if (w_epochs.empty() || w_epochs.front().empty())
        throw FormatError("heat map needs at least one epoch of head weights");
    const std::size_t epochs = w_epochs.size();
    const std::size_t heads = w_epochs.front().size();
    for (const auto& row : w_epochs)
        if (row.size() != heads)
            throw DimensionError("ragged head-weight rows in heat map input");

    const double cell_w = std::clamp(720.0 / static_cast<double>(epochs), 3.0, 18.0);
    const double cell_h = 18.0;
    const double left = 46.0, top = 34.0;
    const double grid_w = cell_w * static_cast<double>(epochs);
    const double grid_h = cell_h * static_cast<double>(heads);
    const double legend_x = left + grid_w + 28.0;
    const double width = legend_x + 86.0;
    const double height = top + grid_h + 46.0;

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
        << width << "\" height=\"" << height << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"#ffffff\"/>\n";
    out << "<text x=\"" << left << "\" y=\"20\" font-family=\"sans-serif\" "
           "font-size=\"13\">head weights w_k per epoch (log color scale)</text>\n";

    for (std::size_t e = 0; e < epochs; ++e)
        for (std::size_t k = 0; k < heads; ++k)
            out << "<rect x=\"" << left + cell_w * static_cast<double>(e) << "\" y=\""
                << top + cell_h * static_cast<double>(k) << "\" width=\"" << cell_w
                << "\" height=\"" << cell_h << "\" fill=\""
                << heatmap_color(w_epochs[e][k]) << "\"/>\n";

    for (std::size_t k = 0; k < heads; ++k)
        out << "<text x=\"" << left - 8.0 << "\" y=\""
            << top + cell_h * (static_cast<double>(k) + 0.72)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << k + 1 << "</text>\n";
    const std::size_t tick = std::max<std::size_t>(1, epochs / 8);
    for (std::size_t e = 0; e < epochs; e += tick)
        out << "<text x=\"" << left + cell_w * (static_cast<double>(e) + 0.5)
            << "\" y=\"" << top + grid_h + 16.0
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
            << e + 1 << "</text>\n";
    out << "<text x=\"" << left + grid_w / 2.0 << "\" y=\"" << top + grid_h + 34.0
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">epoch</text>\n";

    // legend: one band per half-decade, labels at the decades
    const int bands = 16;
    const double band_h = grid_h / bands;
    for (int i = 0; i < bands; ++i) {
        const double t = 1.0 - (static_cast<double>(i) + 0.5) / bands;
        out << "<rect x=\"" << legend_x << "\" y=\""
            << top + band_h * static_cast<double>(i) << "\" width=\"14\" height=\""
            << band_h + 0.5 << "\" fill=\"" << to_hex(gradient(t)) << "\"/>\n";
    }
    static const char* kLabels[5] = {"1", "1e-1", "1e-2", "1e-3", "1e-4"};
    for (int i = 0; i < 5; ++i)
        out << "<text x=\"" << legend_x + 20.0 << "\" y=\""
            << top + grid_h * (static_cast<double>(i) / 4.0) + 4.0
            << "\" font-family=\"sans-serif\" font-size=\"10\">" << kLabels[i]
            << "</text>\n";
    out << "</svg>\n";
    if (!out) throw ConfigError("failed writing " + path);
}

}  // namespace netcut
