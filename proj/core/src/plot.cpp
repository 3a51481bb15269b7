#include "raretraj/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace raretraj {

namespace {

constexpr double kW = 640, kH = 420, kL = 70, kR = 20, kT = 40, kB = 50;

std::ofstream open_svg(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return out;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

void frame(std::ofstream& out, const std::string& title, const std::string& xl, const std::string& yl, double x0, double x1,
           double y0, double y1) {
  out << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
  out << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << kW - kL - kR << "\" height=\"" << kH - kT - kB
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0;
    const double fy = y0 + (y1 - y0) * i / 4.0;
    const double px = kL + (kW - kL - kR) * i / 4.0;
    const double py = kH - kB - (kH - kT - kB) * i / 4.0;
    out << "<text x=\"" << px << "\" y=\"" << kH - kB + 16 << "\" text-anchor=\"middle\">" << format_number(std::round(fx * 100) / 100) << "</text>\n";
    out << "<text x=\"" << kL - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">" << format_number(std::round(fy * 100) / 100) << "</text>\n";
  }
  out << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n";
  out << "<text x=\"16\" y=\"" << kH / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << kH / 2 << ")\">"
      << escape(yl) << "</text>\n";
}

// blue (lo) -> white -> red (hi)
std::string colour(double v, double lo, double hi) {
  double u = hi > lo ? (v - lo) / (hi - lo) : 0.5;
  u = std::clamp(u, 0.0, 1.0);
  int r, g, b;
  if (u < 0.5) {
    const double k = u / 0.5;
    r = static_cast<int>(59 + k * (255 - 59));
    g = static_cast<int>(76 + k * (255 - 76));
    b = static_cast<int>(192 + k * (255 - 192));
  } else {
    const double k = (u - 0.5) / 0.5;
    r = static_cast<int>(255 - k * (255 - 180));
    g = static_cast<int>(255 - k * 255);
    b = static_cast<int>(255 - k * (255 - 38));
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

void line_chart_svg(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<Series>& series) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t n = 0;
  for (const auto& s : series) {
    n = std::max(n, s.y.size());
    for (double v : s.y)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  }
  if (!(hi > lo)) {
    lo = std::isfinite(lo) ? lo - 1.0 : 0.0;
    hi = lo + 2.0;
  }
  auto out = open_svg(path);
  const double x1 = n > 1 ? static_cast<double>(n - 1) : 1.0;
  frame(out, title, x_label, y_label, 0.0, x1, lo, hi);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << s.width << "\" stroke-opacity=\""
        << s.opacity << "\" points=\"";
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      const double px = kL + (kW - kL - kR) * static_cast<double>(i) / x1;
      const double py = kH - kB - (kH - kT - kB) * (s.y[i] - lo) / (hi - lo);
      out << format_number(px) << ',' << format_number(py) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << kL + 8 << "\" y=\"" << kT + 16 + 14 * k << "\" fill=\"" << s.color << "\">" << escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
}

void heatmap_svg(const std::filesystem::path& path, const std::string& title, const CellTable& table, int t_end, double lo,
                 double hi) {
  const int T = table.horizon();
  auto out = open_svg(path);
  frame(out, title, "t", "x", 0.0, t_end, -T, T);
  const double cw = (kW - kL - kR) / std::max(t_end, 1);
  const double ch = (kH - kT - kB) / (2.0 * T + 1);
  for (int t = 0; t < t_end; ++t)
    for (int x = -t; x <= t; x += 2) {
      const double v = table(x, t);
      if (!std::isfinite(v)) continue;
      const double px = kL + cw * t;
      const double py = kT + ch * (T - x);
      out << "<rect x=\"" << format_number(px) << "\" y=\"" << format_number(py) << "\" width=\"" << format_number(cw)
          << "\" height=\"" << format_number(ch) << "\" fill=\"" << colour(v, lo, hi) << "\"/>\n";
    }
  out << "</svg>\n";
}

void trajectories_svg(const std::filesystem::path& path, const std::string& title, const std::vector<EdgeCount>& edges,
                      int horizon) {
  int max_count = 1;
  for (const auto& e : edges) max_count = std::max(max_count, e.count);
  auto out = open_svg(path);
  frame(out, title, "t", "x", 0.0, horizon, -horizon, horizon);
  const double sx = (kW - kL - kR) / std::max(horizon, 1);
  const double sy = (kH - kT - kB) / (2.0 * std::max(horizon, 1));
  const double mid = kT + (kH - kT - kB) / 2.0;
  for (const auto& e : edges) {
    const double w = 0.3 + 6.0 * e.count / max_count;
    out << "<line x1=\"" << format_number(kL + sx * e.t) << "\" y1=\"" << format_number(mid - sy * e.x_from) << "\" x2=\""
        << format_number(kL + sx * (e.t + 1)) << "\" y2=\"" << format_number(mid - sy * e.x_to)
        << "\" stroke=\"#d62728\" stroke-width=\"" << format_number(w) << "\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace raretraj
