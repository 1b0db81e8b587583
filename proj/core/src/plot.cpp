#include "emokd/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "emokd/errors.hpp"

namespace emokd {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 30.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 55.0;

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                               "#9467bd"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo;
  double hi;
  double span() const { return hi - lo; }
};

Range pad_range(double lo, double hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
}

std::string svg_header(const std::string& title) {
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) +
         "\" height=\"" + fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) +
         " " + fmt(kHeight) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + fmt(kWidth / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" +
         escape(title) + "</text>\n";
  return out;
}

std::string axes(const Range& xr, const Range& yr, const std::string& x_label,
                 const std::string& y_label) {
  const double x0 = kMarginLeft;
  const double x1 = kWidth - kMarginRight;
  const double y0 = kHeight - kMarginBottom;
  const double y1 = kMarginTop;
  std::string out;
  out += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x1) +
         "\" y2=\"" + fmt(y0) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x0) +
         "\" y2=\"" + fmt(y1) + "\" stroke=\"black\"/>\n";
  // 5 ticks per axis
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + xr.span() * i / 4.0;
    const double px = x0 + (x1 - x0) * i / 4.0;
    out += "<line x1=\"" + fmt(px) + "\" y1=\"" + fmt(y0) + "\" x2=\"" +
           fmt(px) + "\" y2=\"" + fmt(y0 + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt(px) + "\" y=\"" + fmt(y0 + 20) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">" +
           fmt_tick(fx) + "</text>\n";
    const double fy = yr.lo + yr.span() * i / 4.0;
    const double py = y0 - (y0 - y1) * i / 4.0;
    out += "<line x1=\"" + fmt(x0 - 5) + "\" y1=\"" + fmt(py) + "\" x2=\"" +
           fmt(x0) + "\" y2=\"" + fmt(py) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt(x0 - 8) + "\" y=\"" + fmt(py + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">" +
           fmt_tick(fy) + "</text>\n";
  }
  out += "<text x=\"" + fmt((x0 + x1) / 2) + "\" y=\"" + fmt(kHeight - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">" +
         escape(x_label) + "</text>\n";
  out += "<text x=\"18\" y=\"" + fmt((y0 + y1) / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 " +
         fmt((y0 + y1) / 2) + ")\">" + escape(y_label) + "</text>\n";
  return out;
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<PlotSeries>& series) {
  if (series.empty()) throw InvalidInput("line chart needs at least one series");
  double x_lo = HUGE_VAL, x_hi = -HUGE_VAL, y_lo = HUGE_VAL, y_hi = -HUGE_VAL;
  for (const PlotSeries& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty()) {
      throw ShapeError("bad plot series '" + s.name + "'");
    }
    for (double v : s.x) {
      x_lo = std::min(x_lo, v);
      x_hi = std::max(x_hi, v);
    }
    for (double v : s.y) {
      y_lo = std::min(y_lo, v);
      y_hi = std::max(y_hi, v);
    }
  }
  const Range xr = pad_range(x_lo, x_hi);
  const Range yr = pad_range(y_lo, y_hi);
  const double px0 = kMarginLeft;
  const double px1 = kWidth - kMarginRight;
  const double py0 = kHeight - kMarginBottom;
  const double py1 = kMarginTop;

  auto map_x = [&](double v) {
    return px0 + (px1 - px0) * (v - xr.lo) / xr.span();
  };
  auto map_y = [&](double v) {
    return py0 - (py0 - py1) * (v - yr.lo) / yr.span();
  };

  std::string out = svg_header(title);
  out += axes(xr, yr, x_label, y_label);
  for (std::size_t si = 0; si < series.size(); ++si) {
    const PlotSeries& s = series[si];
    const char* color = kSeriesColors[si % 5];
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i > 0) points += ' ';
      points += fmt(map_x(s.x[i])) + "," + fmt(map_y(s.y[i]));
      out += "<circle cx=\"" + fmt(map_x(s.x[i])) + "\" cy=\"" +
             fmt(map_y(s.y[i])) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    out += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" +
           color + "\" stroke-width=\"1.5\"/>\n";
    out += "<text x=\"" + fmt(px1 - 8) + "\" y=\"" +
           fmt(py1 + 16 + 16 * static_cast<double>(si)) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
           "fill=\"" +
           color + "\">" + escape(s.name) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string bar_chart_svg(const std::string& title, const std::string& y_label,
                          const std::vector<std::string>& labels,
                          const std::vector<double>& values) {
  if (labels.size() != values.size() || labels.empty()) {
    throw ShapeError("bar chart labels/values mismatch");
  }
  double y_hi = 0.0;
  for (double v : values) y_hi = std::max(y_hi, v);
  const Range yr = pad_range(0.0, y_hi > 0 ? y_hi : 1.0);

  const double px0 = kMarginLeft;
  const double px1 = kWidth - kMarginRight;
  const double py0 = kHeight - kMarginBottom;
  const double py1 = kMarginTop;
  const double slot = (px1 - px0) / static_cast<double>(labels.size());
  const double bar_w = slot * 0.6;

  auto map_y = [&](double v) {
    return py0 - (py0 - py1) * (v - yr.lo) / yr.span();
  };

  std::string out = svg_header(title);
  out += "<line x1=\"" + fmt(px0) + "\" y1=\"" + fmt(py0) + "\" x2=\"" +
         fmt(px1) + "\" y2=\"" + fmt(py0) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + fmt(px0) + "\" y1=\"" + fmt(py0) + "\" x2=\"" +
         fmt(px0) + "\" y2=\"" + fmt(py1) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fy = yr.lo + yr.span() * i / 4.0;
    const double py = py0 - (py0 - py1) * i / 4.0;
    out += "<text x=\"" + fmt(px0 - 8) + "\" y=\"" + fmt(py + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">" +
           fmt_tick(fy) + "</text>\n";
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double cx = px0 + slot * (static_cast<double>(i) + 0.5);
    const double top = map_y(values[i]);
    out += "<rect x=\"" + fmt(cx - bar_w / 2) + "\" y=\"" + fmt(top) +
           "\" width=\"" + fmt(bar_w) + "\" height=\"" + fmt(py0 - top) +
           "\" fill=\"#1f77b4\"/>\n";
    out += "<text x=\"" + fmt(cx) + "\" y=\"" + fmt(top - 5) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">" +
           fmt_tick(values[i]) + "</text>\n";
    out += "<text x=\"" + fmt(cx) + "\" y=\"" + fmt(py0 + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">" +
           escape(labels[i]) + "</text>\n";
  }
  out += "<text x=\"18\" y=\"" + fmt((py0 + py1) / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 18 " +
         fmt((py0 + py1) / 2) + ")\">" + escape(y_label) + "</text>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace emokd
