#pragma once

#include <string>
#include <vector>

namespace ringforge::svg {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f6feb";
};

struct PlotOptions {
  int width = 640;
  int height = 420;
  bool log_x = false;
  bool log_y = false;
  std::string x_label;
  std::string y_label;
  std::string title;
};

/// Minimal static line plot; data-only companion to the CSV outputs.
std::string line_plot(const std::vector<Series>& series, const PlotOptions& options);

}  // namespace ringforge::svg
