#pragma once

// Dependency-free SVG line chart for cumulative-regret curves.

#include <algorithm>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace opocmdp_cli {

inline std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// series: (label, per-episode values), plotted against episode index 1..T.
inline std::string regret_svg(
    const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  const double width = 880, height = 540;
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;

  std::size_t max_len = 0;
  double y_max = 0.0;
  for (const auto& [label, values] : series) {
    max_len = std::max(max_len, values.size());
    for (double v : values) y_max = std::max(y_max, v);
  }
  if (max_len < 2) max_len = 2;
  if (y_max <= 0.0) y_max = 1.0;
  y_max *= 1.05;

  auto x_of = [&](double t) { return ml + pw * (t - 1.0) / (max_len - 1.0); };
  auto y_of = [&](double v) { return mt + ph * (1.0 - v / y_max); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_coord(width) +
         "\" height=\"" + fmt_coord(height) + "\" viewBox=\"0 0 " + fmt_coord(width) + " " +
         fmt_coord(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + fmt_coord(ml) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
         "cumulative regret</text>\n";

  // axes and ticks
  out += "<line x1=\"" + fmt_coord(ml) + "\" y1=\"" + fmt_coord(mt + ph) + "\" x2=\"" +
         fmt_coord(ml + pw) + "\" y2=\"" + fmt_coord(mt + ph) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out += "<line x1=\"" + fmt_coord(ml) + "\" y1=\"" + fmt_coord(mt) + "\" x2=\"" + fmt_coord(ml) +
         "\" y2=\"" + fmt_coord(mt + ph) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double t = 1.0 + (max_len - 1.0) * i / 5.0;
    const double x = x_of(t);
    out += "<line x1=\"" + fmt_coord(x) + "\" y1=\"" + fmt_coord(mt + ph) + "\" x2=\"" +
           fmt_coord(x) + "\" y2=\"" + fmt_coord(mt + ph + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt_coord(x) + "\" y=\"" + fmt_coord(mt + ph + 20) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
           fmt_coord(t) + "</text>\n";
    const double v = y_max * i / 5.0;
    const double y = y_of(v);
    out += "<line x1=\"" + fmt_coord(ml - 5) + "\" y1=\"" + fmt_coord(y) + "\" x2=\"" +
           fmt_coord(ml) + "\" y2=\"" + fmt_coord(y) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt_coord(ml - 8) + "\" y=\"" + fmt_coord(y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" + fmt_coord(v) +
           "</text>\n";
  }
  out += "<text x=\"" + fmt_coord(ml + pw / 2) + "\" y=\"" + fmt_coord(height - 12) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">episode</text>\n";

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& values = series[si].second;
    if (values.empty()) continue;
    // Thin long runs so the file stays small; endpoints always kept.
    const std::size_t stride = std::max<std::size_t>(1, values.size() / 1500);
    std::string pts;
    for (std::size_t i = 0; i < values.size(); i += stride) {
      pts += fmt_coord(x_of(static_cast<double>(i + 1))) + "," +
             fmt_coord(y_of(values[i])) + " ";
    }
    pts += fmt_coord(x_of(static_cast<double>(values.size()))) + "," +
           fmt_coord(y_of(values.back()));
    const char* color = kColors[si % 4];
    out += std::string("<polyline fill=\"none\" stroke=\"") + color +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    const double ly = mt + 16 + 18 * static_cast<double>(si);
    out += "<line x1=\"" + fmt_coord(ml + 10) + "\" y1=\"" + fmt_coord(ly - 4) + "\" x2=\"" +
           fmt_coord(ml + 34) + "\" y2=\"" + fmt_coord(ly - 4) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + fmt_coord(ml + 40) + "\" y=\"" + fmt_coord(ly) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + series[si].first + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace opocmdp_cli
