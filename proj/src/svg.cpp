#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "leafavg/scenario.hpp"

namespace leafavg {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string running_average_svg(const RunningAverage& avg, const std::string& title) {
  constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
      << W << ' ' << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << escape(title) << "</text>\n";

  std::vector<std::pair<double, double>> pts;
  for (const auto& s : avg.samples) {
    if (s.parameter > 0.0 && std::isfinite(s.average)) pts.emplace_back(std::log10(s.parameter), s.average);
  }
  if (pts.empty()) {
    svg << "<text x=\"" << W / 2 << "\" y=\"" << H / 2 << "\" text-anchor=\"middle\">no samples</text>\n</svg>\n";
    return svg.str();
  }
  double x0 = pts.front().first, x1 = pts.back().first;
  auto [lo_it, hi_it] = std::minmax_element(pts.begin(), pts.end(),
                                            [](const auto& a, const auto& b) { return a.second < b.second; });
  double y0 = lo_it->second, y1 = hi_it->second;
  if (x1 - x0 < 1e-12) x1 = x0 + 1.0;
  if (y1 - y0 < 1e-12) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  // Axes.
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  const auto label = [&](double x, double y, const std::string& text, const char* anchor) {
    svg << "<text x=\"" << fmt("%.1f", x) << "\" y=\"" << fmt("%.1f", y) << "\" text-anchor=\"" << anchor
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(text) << "</text>\n";
  };
  label(L, H - B + 16, fmt("%.3g", std::pow(10.0, x0)), "middle");
  label(W - R, H - B + 16, fmt("%.3g", std::pow(10.0, x1)), "middle");
  label(L - 6, H - B, fmt("%.4g", y0), "end");
  label(L - 6, T + 4, fmt("%.4g", y1), "end");
  label((L + W - R) / 2, H - 12, std::string(to_string(avg.parameter_kind)) + " (log scale)", "middle");
  label(16, (T + H - B) / 2, "average", "middle");

  svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    svg << (i ? " " : "") << fmt("%.2f", px(pts[i].first)) << ',' << fmt("%.2f", py(pts[i].second));
  }
  svg << "\"/>\n</svg>\n";
  return svg.str();
}

}  // namespace leafavg
