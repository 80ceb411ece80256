#include "urnflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "urnflow/format.hpp"

namespace urnflow::io {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
constexpr double kLeft = 70, kRight = 150, kTop = 30, kBottom = 40;

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

std::string num(double v) { return format_fixed(v, 2); }

void render_panel(std::ostringstream& os, const Panel& p, double y0) {
  const double w = kSvgWidth - kLeft - kRight;
  const double h = kPanelHeight - kTop - kBottom;
  auto ty = [&](double v) { return p.log_y ? std::log10(std::max(v, 1e-300)) : v; };

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (!p.x.empty()) {
    auto [lo, hi] = std::minmax_element(p.x.begin(), p.x.end());
    xmin = *lo;
    xmax = *hi;
  }
  bool any = false;
  for (const auto& s : p.series)
    for (double v : s.y) {
      if (!std::isfinite(v) || (p.log_y && v <= 0)) continue;
      double t = ty(v);
      ymin = any ? std::min(ymin, t) : t;
      ymax = any ? std::max(ymax, t) : t;
      any = true;
    }
  if (p.reference) {
    ymin = std::min(ymin, ty(*p.reference));
    ymax = std::max(ymax, ty(*p.reference));
  }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) {
    ymax += 0.5;
    ymin -= 0.5;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * w; };
  auto py = [&](double y) { return y0 + kTop + (1.0 - (ty(y) - ymin) / (ymax - ymin)) * h; };

  os << "<g>\n";
  os << "<text x=\"" << num(kLeft) << "\" y=\"" << num(y0 + 20) << "\" font-size=\"14\">"
     << escape(p.title) << "</text>\n";
  os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(y0 + kTop) << "\" width=\"" << num(w)
     << "\" height=\"" << num(h) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  auto label_y = [&](double t) { return p.log_y ? "1e" + format_fixed(t, 1) : format_double(t); };
  os << "<text x=\"" << num(kLeft - 5) << "\" y=\"" << num(y0 + kTop + 10)
     << "\" font-size=\"10\" text-anchor=\"end\">" << escape(label_y(ymax)) << "</text>\n";
  os << "<text x=\"" << num(kLeft - 5) << "\" y=\"" << num(y0 + kTop + h)
     << "\" font-size=\"10\" text-anchor=\"end\">" << escape(label_y(ymin)) << "</text>\n";
  os << "<text x=\"" << num(kLeft) << "\" y=\"" << num(y0 + kTop + h + 15)
     << "\" font-size=\"10\">" << escape(format_double(xmin)) << "</text>\n";
  os << "<text x=\"" << num(kLeft + w) << "\" y=\"" << num(y0 + kTop + h + 15)
     << "\" font-size=\"10\" text-anchor=\"end\">" << escape(format_double(xmax)) << "</text>\n";
  os << "<text x=\"" << num(kLeft + w / 2) << "\" y=\"" << num(y0 + kTop + h + 30)
     << "\" font-size=\"11\" text-anchor=\"middle\">" << escape(p.x_label) << "</text>\n";

  if (p.reference) {
    os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(*p.reference)) << "\" x2=\""
       << num(kLeft + w) << "\" y2=\"" << num(py(*p.reference))
       << "\" stroke=\"#000\" stroke-dasharray=\"6,4\"/>\n";
  }
  for (std::size_t s = 0; s < p.series.size(); ++s) {
    const auto& series = p.series[s];
    const char* color = kPalette[s % std::size(kPalette)];
    const std::size_t n = std::min(series.y.size(), p.x.size());
    const std::size_t stride = std::max<std::size_t>(1, (n + kMaxPolylinePoints - 1) / kMaxPolylinePoints);
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < n; i += stride) {
      const double v = series.y[i];
      if (!std::isfinite(v) || (p.log_y && v <= 0)) continue;
      if (!first) os << ' ';
      os << num(px(p.x[i])) << ',' << num(py(v));
      first = false;
    }
    os << "\"/>\n";
    const double ly = y0 + kTop + 12 + 14.0 * static_cast<double>(s);
    os << "<text x=\"" << num(kLeft + w + 10) << "\" y=\"" << num(ly) << "\" font-size=\"11\" fill=\""
       << color << "\">" << escape(series.label) << "</text>\n";
  }
  os << "</g>\n";
}

}  // namespace

std::string render_svg(std::span<const Panel> panels) {
  const int height = kPanelHeight * static_cast<int>(std::max<std::size_t>(1, panels.size()));
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kSvgWidth
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << kSvgWidth << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i)
    render_panel(os, panels[i], static_cast<double>(i * kPanelHeight));
  os << "</svg>\n";
  return os.str();
}

}  // namespace urnflow::io
