#pragma once

#include <string>
#include <vector>

namespace netcut {

// Fig-3-style heat map of head weights over epochs: rows = heads, columns =
// epochs, cell color = log10(w) clamped to [1e-4, 1] on a fixed gradient,
// with a scale legend. w_epochs[e][k] is head k's weight after epoch e+1.
void write_heatmap_svg(const std::string& path,
                       const std::vector<std::vector<double>>& w_epochs);

// color helper, exposed for tests: log-clamped weight -> "#rrggbb"
std::string heatmap_color(double w);

}  // namespace netcut
