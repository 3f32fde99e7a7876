#include "ringforge/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace ringforge::svg {

namespace {

double transform(double v, bool log_axis) { return log_axis ? std::log10(v) : v; }

}  // namespace

std::string line_plot(const std::vector<Series>& series, const PlotOptions& options) {
  const double margin = 50.0;
  const double plot_w = options.width - 2.0 * margin;
  const double plot_h = options.height - 2.0 * margin;

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (options.log_x && !(s.x[i] > 0.0)) continue;
      if (options.log_y && !(s.y[i] > 0.0)) continue;
      x_min = std::min(x_min, transform(s.x[i], options.log_x));
      x_max = std::max(x_max, transform(s.x[i], options.log_x));
      y_min = std::min(y_min, transform(s.y[i], options.log_y));
      y_max = std::max(y_max, transform(s.y[i], options.log_y));
    }
  }
  if (!(x_max > x_min)) x_max = x_min + 1.0;
  if (!(y_max > y_min)) y_max = y_min + 1.0;

  char buffer[256];
  std::string out;
  std::snprintf(buffer, sizeof buffer,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\">\n",
                options.width, options.height, options.width, options.height);
  out += buffer;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buffer, sizeof buffer,
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
                "stroke=\"#444\"/>\n",
                margin, margin, plot_w, plot_h);
  out += buffer;

  for (const auto& s : series) {
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (options.log_x && !(s.x[i] > 0.0)) continue;
      if (options.log_y && !(s.y[i] > 0.0)) continue;
      const double px =
          margin + (transform(s.x[i], options.log_x) - x_min) / (x_max - x_min) * plot_w;
      const double py =
          margin + plot_h - (transform(s.y[i], options.log_y) - y_min) / (y_max - y_min) * plot_h;
      std::snprintf(buffer, sizeof buffer, "%.2f,%.2f ", px, py);
      points += buffer;
    }
    out += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\" points=\"" +
           points + "\"/>\n";
  }

  if (!options.title.empty()) {
    std::snprintf(buffer, sizeof buffer,
                  "<text x=\"%.1f\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">",
                  margin);
    out += buffer;
    out += options.title + "</text>\n";
  }
  if (!options.x_label.empty()) {
    std::snprintf(buffer, sizeof buffer,
                  "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\" "
                  "text-anchor=\"middle\">",
                  margin + plot_w / 2.0, options.height - 12.0);
    out += buffer;
    out += options.x_label + "</text>\n";
  }
  if (!options.y_label.empty()) {
    std::snprintf(buffer, sizeof buffer,
                  "<text x=\"16\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\" "
                  "text-anchor=\"middle\" transform=\"rotate(-90 16 %.1f)\">",
                  margin + plot_h / 2.0, margin + plot_h / 2.0);
    out += buffer;
    out += options.y_label + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace ringforge::svg
