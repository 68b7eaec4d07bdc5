#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace g2sfuse {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Self-contained SVG line plot: one polyline per series, a frame with min/max
/// tick labels and a legend. `equal_axes` keeps metric aspect for trajectory
/// overlays.
void write_line_plot(std::ostream& os, const std::vector<Series>& series, const std::string& title,
                     const std::string& x_label, const std::string& y_label, bool equal_axes);

}  // namespace g2sfuse
