#pragma once

// Static SVG line charts. The emitter only maps data to coordinates; every
// plotted value is computed by the caller.

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace urnflow::io {

struct Series {
  std::string label;
  std::vector<double> y;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::vector<double> x;
  std::vector<Series> series;
  bool log_y = false;
  /// Horizontal dashed reference line.
  std::optional<double> reference;
};

inline constexpr int kSvgWidth = 800;
inline constexpr int kPanelHeight = 260;
/// Polylines are drawn through at most this many points per series.
inline constexpr std::size_t kMaxPolylinePoints = 4000;

std::string render_svg(std::span<const Panel> panels);

}  // namespace urnflow::io
