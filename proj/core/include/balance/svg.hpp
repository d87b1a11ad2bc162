#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace balance {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 400;
};

/// Standalone SVG line chart with axes, ticks and a legend. `provenance` is
/// embedded verbatim in a leading XML comment.
std::string render_line_plot(const PlotSpec& spec, const std::vector<PlotSeries>& series,
                             const std::string& provenance);

void write_line_plot(const std::filesystem::path& path, const PlotSpec& spec,
                     const std::vector<PlotSeries>& series, const std::string& provenance);

}  // namespace balance
