#include "svg.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

namespace g2sfuse {
namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 600.0;
constexpr double kMargin = 60.0;

constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double span() const { return hi - lo; }
  void pad_if_flat() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (span() <= 0.0) lo -= 0.5, hi += 0.5;
  }
};

}  // namespace

void write_line_plot(std::ostream& os, const std::vector<Series>& series, const std::string& title,
                     const std::string& x_label, const std::string& y_label, bool equal_axes) {
  Range xr, yr;
  for (const auto& s : series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.pad_if_flat();
  yr.pad_if_flat();

  const double pw = kWidth - 2 * kMargin;
  const double ph = kHeight - 2 * kMargin;
  double sx = pw / xr.span();
  double sy = ph / yr.span();
  if (equal_axes) sx = sy = std::min(sx, sy);
  auto px = [&](double x) { return kMargin + (x - xr.lo) * sx; };
  auto py = [&](double y) { return kHeight - kMargin - (y - yr.lo) * sy; };

  const auto old_precision = os.precision();
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"30\" text-anchor=\"middle\" font-size=\"18\">" << escape(title)
     << "</text>\n";

  // axes with min/max labels
  const double x0 = kMargin, y0 = kHeight - kMargin;
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << kWidth - kMargin << "\" y2=\"" << y0
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << kMargin
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << x0 << "\" y=\"" << y0 + 18 << "\" font-size=\"11\">" << xr.lo << "</text>\n";
  os << "<text x=\"" << px(xr.hi) << "\" y=\"" << y0 + 18 << "\" font-size=\"11\" text-anchor=\"end\">" << xr.hi
     << "</text>\n";
  os << "<text x=\"" << x0 - 5 << "\" y=\"" << y0 << "\" font-size=\"11\" text-anchor=\"end\">" << yr.lo
     << "</text>\n";
  os << "<text x=\"" << x0 - 5 << "\" y=\"" << py(yr.hi) << "\" font-size=\"11\" text-anchor=\"end\">" << yr.hi
     << "</text>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\" font-size=\"13\">"
     << escape(x_label) << "</text>\n";
  os << "<text x=\"15\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 15 "
     << kHeight / 2 << ")\">" << escape(y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kColors[i % kColors.size()];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      os << px(s.x[k]) << ',' << py(s.y[k]) << ' ';
    }
    os << "\"/>\n";
    const double ly = kMargin + 16.0 * static_cast<double>(i);
    os << "<line x1=\"" << kWidth - kMargin - 120 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - kMargin - 100
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kWidth - kMargin - 95 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">" << escape(s.name)
       << "</text>\n";
  }
  os << "</svg>\n";
  os.precision(old_precision);
}

}  // namespace g2sfuse
