#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace voliv::plot {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += ch;
    }
  }
  return out;
}

// Round-number ticks covering [lo, hi].
std::vector<double> linear_ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {2.0, 5.0, 10.0}) {
    if (step < raw) step = f * mag;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
    out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return out;
}

}  // namespace

std::string render_svg(const Figure& fig) {
  const bool log_x = fig.log_x;
  auto tx = [log_x](double x) { return log_x ? std::log10(x) : x; };

  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  double y0 = x0;
  double y1 = -x0;
  for (const auto& s : fig.series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_x && s.x[i] <= 0.0)) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) {
    x0 = 0.0;
    x1 = 1.0;
    y0 = 0.0;
    y1 = 1.0;
  }
  if (x1 == x0) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (y1 == y0) {
    const double pad = std::max(std::abs(y0) * 0.1, 1e-3);
    y0 -= pad;
    y1 += pad;
  }
  const double ypad = 0.05 * (y1 - y0);
  y0 -= ypad;
  y1 += ypad;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (tx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(fig.title) + "</text>\n";
  out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";

  std::vector<double> xticks;
  if (log_x) {
    for (double d = std::ceil(x0 - 1e-9); d <= x1 + 1e-9; d += 1.0) xticks.push_back(std::pow(10.0, d));
    if (xticks.size() < 2) {
      xticks.clear();
      for (double t : linear_ticks(x0, x1)) xticks.push_back(std::pow(10.0, t));
    }
  } else {
    xticks = linear_ticks(x0, x1);
  }
  for (double t : xticks) {
    const double x = px(t);
    out += "<line x1=\"" + num(x) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(kTop + ph + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + num(x) + "\" y=\"" + num(kTop + ph + 18) + "\" text-anchor=\"middle\">" + label(t) +
           "</text>\n";
  }
  for (double t : linear_ticks(y0, y1)) {
    const double y = py(t);
    out += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(y) +
           "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + label(t) +
           "</text>\n";
  }
  if (y0 < 0.0 && y1 > 0.0) {
    out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(0.0)) + "\" x2=\"" + num(kLeft + pw) + "\" y2=\"" +
           num(py(0.0)) + "\" stroke=\"#999\" stroke-dasharray=\"4,3\"/>\n";
  }
  out += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 15) + "\" text-anchor=\"middle\">" +
         escape(fig.x_label) + "</text>\n";
  out += "<text transform=\"translate(18," + num(kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         escape(fig.y_label) + "</text>\n";

  for (std::size_t si = 0; si < fig.series.size(); ++si) {
    const Series& s = fig.series[si];
    const std::string color = kColors[si % std::size(kColors)];
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_x && s.x[i] <= 0.0)) continue;
      if (s.markers) {
        out += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(s.y[i])) + "\" r=\"3\" fill=\"" + color +
               "\"/>\n";
      } else {
        pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
      }
    }
    if (!s.markers && !pts.empty()) {
      pts.pop_back();
      out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    }
    const double ly = kTop + 16 + 16 * static_cast<double>(si);
    const double lx = kLeft + pw - 150;
    out += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(lx + 20) + "\" y2=\"" +
           num(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(lx + 26) + "\" y=\"" + num(ly) + "\">" + escape(s.name) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace voliv::plot
