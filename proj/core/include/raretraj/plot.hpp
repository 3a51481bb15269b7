#pragma once

// Small native SVG charts. CSV stays the ground truth; these are for eyeballing.

#include <filesystem>
#include <string>
#include <vector>

#include "raretraj/io.hpp"
#include "raretraj/oracle.hpp"

namespace raretraj {

struct Series {
  std::string label;
  std::vector<double> y;
  std::string color = "#1f77b4";
  double width = 1.0;
  double opacity = 1.0;
};

void line_chart_svg(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<Series>& series);

/// Colour map over the reachable cone, t on the horizontal axis.
void heatmap_svg(const std::filesystem::path& path, const std::string& title, const CellTable& table, int t_end, double lo,
                 double hi);

/// Trajectory fan; stroke width follows the edge count.
void trajectories_svg(const std::filesystem::path& path, const std::string& title, const std::vector<EdgeCount>& edges,
                      int horizon);

}  // namespace raretraj
