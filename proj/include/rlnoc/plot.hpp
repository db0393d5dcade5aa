#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rlnoc::plot {

class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t row, const std::string& what)
      : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}
  /// 1-based line number in the input.
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // input line of each row
  std::vector<std::string> comments;
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Reads the first table of a CSV document. `#` lines are metadata; a blank
/// line ends the table.
inline CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::size_t lineno = 0, pos = 0;
  bool started = false;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty() && line.front() == '#') {
      t.comments.emplace_back(line.substr(1));
      continue;
    }
    if (line.empty()) {
      if (started && !t.header.empty()) break;
      continue;
    }
    auto cells = split_csv_line(line);
    if (!started) {
      t.header = std::move(cells);
      started = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw CsvError(lineno, "expected " + std::to_string(t.header.size()) + " fields, got " +
                                 std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.lines.push_back(lineno);
  }
  if (t.header.empty()) throw CsvError(lineno, "missing header");
  return t;
}

enum class Kind { lines, boxwhisker };

namespace detail {

inline double number(const CsvTable& t, std::size_t r, std::size_t c) {
  const auto& s = t.rows[r][c];
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw CsvError(t.lines[r], "field '" + t.header[c] + "' is not a number: '" + s + "'");
  return v;
}

inline std::size_t column(const CsvTable& t, std::string_view name) {
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (t.header[c] == name) return c;
  throw CsvError(1, "missing column '" + std::string(name) + "'");
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(std::string_view s) {
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

constexpr const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Frame {
  double width = 640, height = 400;
  double left = 60, right = 170, top = 30, bottom = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 100;

  double px(double x) const {
    return left + (x1 > x0 ? (x - x0) / (x1 - x0) : 0.5) * (width - left - right);
  }
  double py(double y) const {
    return height - bottom - (y1 > y0 ? (y - y0) / (y1 - y0) : 0.5) * (height - top - bottom);
  }
};

inline void axes(std::ostringstream& os, const Frame& f, std::string_view xlabel,
                 std::string_view ylabel, std::string_view title) {
  const double xa = f.left, xb = f.width - f.right, ya = f.top, yb = f.height - f.bottom;
  os << "<rect x=\"0\" y=\"0\" width=\"" << fmt(f.width) << "\" height=\"" << fmt(f.height)
     << "\" fill=\"white\"/>\n";
  os << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
  os << "<line x1=\"" << fmt(xa) << "\" y1=\"" << fmt(yb) << "\" x2=\"" << fmt(xb) << "\" y2=\""
     << fmt(yb) << "\"/>\n";
  os << "<line x1=\"" << fmt(xa) << "\" y1=\"" << fmt(ya) << "\" x2=\"" << fmt(xa) << "\" y2=\""
     << fmt(yb) << "\"/>\n";
  os << "</g>\n<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"10\">\n";
  for (int k = 0; k <= 4; ++k) {
    double x = f.x0 + (f.x1 - f.x0) * k / 4.0, y = f.y0 + (f.y1 - f.y0) * k / 4.0;
    os << "<text x=\"" << fmt(f.px(x)) << "\" y=\"" << fmt(yb + 14)
       << "\" text-anchor=\"middle\">" << fmt(x) << "</text>\n";
    os << "<text x=\"" << fmt(xa - 4) << "\" y=\"" << fmt(f.py(y) + 3)
       << "\" text-anchor=\"end\">" << fmt(y) << "</text>\n";
  }
  os << "</g>\n";
  os << "<text x=\"" << fmt((xa + xb) / 2) << "\" y=\"" << fmt(f.height - 12)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
     << escape(xlabel) << "</text>\n";
  os << "<text x=\"14\" y=\"" << fmt((ya + yb) / 2) << "\" transform=\"rotate(-90 14 "
     << fmt((ya + yb) / 2)
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
     << escape(ylabel) << "</text>\n";
  if (!title.empty())
    os << "<text x=\"" << fmt((xa + xb) / 2)
       << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
       << escape(title) << "</text>\n";
}

inline void legend(std::ostringstream& os, const Frame& f, const std::vector<std::string>& names) {
  os << "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t k = 0; k < names.size(); ++k) {
    const double x = f.width - f.right + 12, y = f.top + 16.0 * static_cast<double>(k);
    os << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"10\" height=\"10\" fill=\""
       << palette[k % std::size(palette)] << "\"/>\n";
    os << "<text x=\"" << fmt(x + 14) << "\" y=\"" << fmt(y + 9) << "\">" << escape(names[k])
       << "</text>\n";
  }
  os << "</g>\n";
}

inline std::string open_svg(const Frame& f) {
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(f.width)
     << "\" height=\"" << fmt(f.height) << "\" viewBox=\"0 0 " << fmt(f.width) << ' '
     << fmt(f.height) << "\">\n";
  return os.str();
}

/// Sweep table: one polyline per (grid, packet range, config) series.
inline std::string render_lines(const CsvTable& t, std::string_view title) {
  const auto cf = column(t, "flows"), cr = column(t, "ratio"), cc = column(t, "config");
  auto opt = [&](std::string_view n) -> std::ptrdiff_t {
    auto it = std::find(t.header.begin(), t.header.end(), n);
    return it == t.header.end() ? -1 : it - t.header.begin();
  };
  const auto cg = opt("grid"), cmin = opt("packet_min"), cmax = opt("packet_max");
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  Frame f;
  f.x0 = 0;
  f.x1 = 1;
  bool any = false;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::string key = t.rows[r][cc];
    if (cg >= 0 && cmin >= 0 && cmax >= 0)
      key = t.rows[r][static_cast<std::size_t>(cg)] + " " + t.rows[r][static_cast<std::size_t>(cmin)] +
            "-" + t.rows[r][static_cast<std::size_t>(cmax)] + " " + key;
    const double x = number(t, r, cf), y = number(t, r, cr);
    if (!series.count(key)) order.push_back(key);
    series[key].push_back({x, y});
    f.x0 = any ? std::min(f.x0, x) : x;
    f.x1 = any ? std::max(f.x1, x) : x;
    any = true;
  }
  if (!any) f.x1 = 1;
  std::ostringstream os;
  os << open_svg(f);
  axes(os, f, "flows per flowset", "schedulability ratio (%)", title);
  os << "<g class=\"series\" fill=\"none\" stroke-width=\"1.5\">\n";
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto pts = series[order[k]];
    std::stable_sort(pts.begin(), pts.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    os << "<polyline stroke=\"" << palette[k % std::size(palette)] << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
      os << (i ? " " : "") << fmt(f.px(pts[i].first)) << ',' << fmt(f.py(pts[i].second));
    os << "\"/>\n";
  }
  os << "</g>\n";
  legend(os, f, order);
  os << "</svg>\n";
  return os.str();
}

/// Stats table: one box per (flows, metric); metrics side by side per group.
inline std::string render_boxes(const CsvTable& t, std::string_view title) {
  const auto cf = column(t, "flows"), cm = column(t, "metric");
  const std::size_t cs[5] = {column(t, "min"), column(t, "q1"), column(t, "median"),
                             column(t, "q3"), column(t, "max")};
  std::vector<std::string> metrics;
  std::vector<double> groups;
  struct Box {
    double flows;
    std::size_t metric;
    double v[5];
  };
  std::vector<Box> boxes;
  Frame f;
  f.y0 = 0;
  f.y1 = 1;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    Box b{};
    b.flows = number(t, r, cf);
    auto it = std::find(metrics.begin(), metrics.end(), t.rows[r][cm]);
    b.metric = static_cast<std::size_t>(it - metrics.begin());
    if (it == metrics.end()) metrics.push_back(t.rows[r][cm]);
    for (int k = 0; k < 5; ++k) b.v[k] = number(t, r, cs[k]);
    for (int k = 1; k < 5; ++k)
      if (b.v[k] < b.v[k - 1])
        throw CsvError(t.lines[r], "box statistics must satisfy min <= q1 <= median <= q3 <= max");
    if (std::find(groups.begin(), groups.end(), b.flows) == groups.end()) groups.push_back(b.flows);
    f.y0 = std::min(f.y0, b.v[0]);
    f.y1 = std::max(f.y1, b.v[4]);
    boxes.push_back(b);
  }
  std::sort(groups.begin(), groups.end());
  f.x0 = 0;
  f.x1 = std::max<double>(1, static_cast<double>(groups.size()));
  std::ostringstream os;
  os << open_svg(f);
  axes(os, f, "group (flows per flowset)", "value", title);
  const double slot = (f.px(1) - f.px(0));
  const double width = slot * 0.8 / static_cast<double>(std::max<std::size_t>(1, metrics.size()));
  os << "<g class=\"groups\" font-family=\"sans-serif\" font-size=\"10\">\n";
  for (std::size_t g = 0; g < groups.size(); ++g)
    os << "<text x=\"" << fmt(f.px(static_cast<double>(g) + 0.5)) << "\" y=\""
       << fmt(f.height - f.bottom + 26) << "\" text-anchor=\"middle\">" << fmt(groups[g])
       << "</text>\n";
  os << "</g>\n<g class=\"boxes\" stroke-width=\"1\">\n";
  for (const auto& b : boxes) {
    const auto g = static_cast<double>(std::find(groups.begin(), groups.end(), b.flows) - groups.begin());
    const double xl = f.px(g) + slot * 0.1 + width * static_cast<double>(b.metric);
    const double xm = xl + width / 2, xr = xl + width * 0.9;
    const char* col = palette[b.metric % std::size(palette)];
    os << "<g class=\"box\" stroke=\"" << col << "\">\n";
    os << "<line class=\"whisker\" x1=\"" << fmt(xm) << "\" y1=\"" << fmt(f.py(b.v[0]))
       << "\" x2=\"" << fmt(xm) << "\" y2=\"" << fmt(f.py(b.v[1])) << "\"/>\n";
    os << "<line class=\"whisker\" x1=\"" << fmt(xm) << "\" y1=\"" << fmt(f.py(b.v[3]))
       << "\" x2=\"" << fmt(xm) << "\" y2=\"" << fmt(f.py(b.v[4])) << "\"/>\n";
    os << "<line class=\"min\" x1=\"" << fmt(xl) << "\" y1=\"" << fmt(f.py(b.v[0])) << "\" x2=\""
       << fmt(xr) << "\" y2=\"" << fmt(f.py(b.v[0])) << "\"/>\n";
    os << "<rect class=\"iqr\" x=\"" << fmt(xl) << "\" y=\"" << fmt(f.py(b.v[3])) << "\" width=\""
       << fmt(xr - xl) << "\" height=\"" << fmt(f.py(b.v[1]) - f.py(b.v[3]))
       << "\" fill=\"none\"/>\n";
    os << "<line class=\"median\" x1=\"" << fmt(xl) << "\" y1=\"" << fmt(f.py(b.v[2]))
       << "\" x2=\"" << fmt(xr) << "\" y2=\"" << fmt(f.py(b.v[2])) << "\" stroke-width=\"2\"/>\n";
    os << "<line class=\"max\" x1=\"" << fmt(xl) << "\" y1=\"" << fmt(f.py(b.v[4])) << "\" x2=\""
       << fmt(xr) << "\" y2=\"" << fmt(f.py(b.v[4])) << "\"/>\n";
    os << "</g>\n";
  }
  os << "</g>\n";
  legend(os, f, metrics);
  os << "</svg>\n";
  return os.str();
}

}  // namespace detail

inline std::string render_plot(std::string_view csv, Kind kind, std::string_view title = {}) {
  auto table = parse_csv(csv);
  return kind == Kind::lines ? detail::render_lines(table, title)
                             : detail::render_boxes(table, title);
}

}  // namespace rlnoc::plot
