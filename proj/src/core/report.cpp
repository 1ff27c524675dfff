#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "csv.hpp"
#include "error.hpp"

namespace cml {

Histogram histogram_bins(std::span<const double> values, std::size_t n_bins) {
  if (values.empty()) throw Error(ErrorCode::InsufficientData, "histogram of no values");
  if (n_bins == 0) throw Error(ErrorCode::Spec, "histogram needs at least one bin");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::Domain, "histogram values must be finite");
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  Histogram h;
  if (lo == hi) {
    h.edges = {lo, hi};
    h.counts = {values.size()};
    return h;
  }
  h.edges.resize(n_bins + 1);
  for (std::size_t i = 0; i < n_bins; ++i) {
    h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
  }
  h.edges[n_bins] = hi;
  h.counts.assign(n_bins, 0);
  for (double v : values) {
    auto bin = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(n_bins));
    bin = std::min(bin, n_bins - 1);
    // Keep bin membership consistent with the stored edges.
    while (bin > 0 && v < h.edges[bin]) --bin;
    while (bin + 1 < n_bins && v >= h.edges[bin + 1]) ++bin;
    ++h.counts[bin];
  }
  return h;
}

Histogram histogram_bins(std::span<const double> values, std::span<const double> edges) {
  if (edges.size() < 2) throw Error(ErrorCode::Spec, "fixed histogram edges need two values");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw Error(ErrorCode::Spec, "histogram edges must be strictly increasing");
    }
  }
  Histogram h;
  h.edges.assign(edges.begin(), edges.end());
  h.counts.assign(edges.size() - 1, 0);
  for (double v : values) {
    if (!(v >= edges.front() && v <= edges.back())) continue;
    if (v == edges.back()) {
      ++h.counts.back();
      continue;
    }
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    ++h.counts[static_cast<std::size_t>(it - edges.begin()) - 1];
  }
  return h;
}

const char* to_string(ChartKind kind) noexcept {
  switch (kind) {
    case ChartKind::Histogram: return "histogram";
    case ChartKind::Bar: return "bar";
    case ChartKind::Line: return "line";
    case ChartKind::Scatter: return "scatter";
    case ChartKind::Heatmap: return "heatmap";
    case ChartKind::Pairplot: return "pairplot";
  }
  return "unknown";
}

const Series* ChartSpec::find(std::string_view name) const {
  for (const auto& s : series) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

namespace {

[[noreturn]] void spec_error(const ChartSpec& spec, const std::string& message) {
  throw Error(ErrorCode::Spec, std::string(to_string(spec.kind)) + " chart '" + spec.title +
                                   "': " + message);
}

void require_same_length(const ChartSpec& spec, const Series& a, const Series& b) {
  if (a.values.size() != b.values.size()) {
    spec_error(spec, "series '" + a.name + "' has " + std::to_string(a.values.size()) +
                         " values but '" + b.name + "' has " + std::to_string(b.values.size()));
  }
}

bool is_scatter_extra(std::string_view name) {
  return name == "group" || name == "highlight" || name == "arrow_x" || name == "arrow_y";
}

}  // namespace

void validate(const ChartSpec& spec) {
  if (spec.series.empty()) spec_error(spec, "no series");
  for (const auto& s : spec.series) {
    for (double v : s.values) {
      if (!std::isfinite(v)) spec_error(spec, "series '" + s.name + "' has a non-finite value");
    }
  }
  switch (spec.kind) {
    case ChartKind::Histogram:
      if (spec.options.bins == 0) spec_error(spec, "bins must be positive");
      for (const auto& s : spec.series) {
        if (s.values.empty()) spec_error(spec, "series '" + s.name + "' is empty");
      }
      if (!spec.options.bin_edges.empty()) {
        (void)histogram_bins(std::span<const double>{}, spec.options.bin_edges);
      }
      break;
    case ChartKind::Bar:
    case ChartKind::Heatmap:
      for (const auto& s : spec.series) require_same_length(spec, s, spec.series.front());
      if (spec.series.front().values.empty()) spec_error(spec, "series are empty");
      if (!spec.options.labels.empty() &&
          spec.options.labels.size() != spec.series.front().values.size()) {
        spec_error(spec, "labels do not match the series length");
      }
      break;
    case ChartKind::Line:
      if (spec.series.size() < 2) spec_error(spec, "needs an x series and a y series");
      for (const auto& s : spec.series) require_same_length(spec, s, spec.series.front());
      if (spec.series.front().values.empty()) spec_error(spec, "series are empty");
      break;
    case ChartKind::Scatter: {
      const Series* x = spec.find("x");
      const Series* y = spec.find("y");
      if (!x || !y) spec_error(spec, "needs 'x' and 'y' series");
      require_same_length(spec, *x, *y);
      for (const char* name : {"group", "highlight"}) {
        if (const Series* s = spec.find(name)) require_same_length(spec, *s, *x);
      }
      const Series* ax = spec.find("arrow_x");
      const Series* ay = spec.find("arrow_y");
      if ((ax == nullptr) != (ay == nullptr)) spec_error(spec, "arrows need both coordinates");
      if (ax) {
        require_same_length(spec, *ax, *ay);
        if (!spec.options.labels.empty() && spec.options.labels.size() != ax->values.size()) {
          spec_error(spec, "labels do not match the arrow count");
        }
      }
      for (const auto& s : spec.series) {
        if (s.name != "x" && s.name != "y" && !is_scatter_extra(s.name)) {
          spec_error(spec, "unexpected series '" + s.name + "'");
        }
      }
      break;
    }
    case ChartKind::Pairplot: {
      const Series* first = nullptr;
      for (const auto& s : spec.series) {
        if (!first) first = &s;
        require_same_length(spec, s, *first);
      }
      if (first->values.empty()) spec_error(spec, "series are empty");
      if (spec.series.size() == 1 && first->name == "group") spec_error(spec, "no dimensions");
      break;
    }
  }
}

namespace {

const std::vector<std::string> kDefaultPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                                  "#bcbd22", "#17becf"};

std::string num(double v) { return csv::format_significant(v, 6); }

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

class Svg {
 public:
  Svg(double width, double height, const std::string& title, ChartKind kind) {
    out_ = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
            num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) +
            "\" font-family=\"sans-serif\" font-size=\"11\" class=\"" + to_string(kind) + "\">\n";
    out_ += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) +
            "\" fill=\"white\"/>\n";
    text(width / 2, 20, title, "middle", "title", 14);
  }

  void raw(const std::string& s) { out_ += s; }

  void text(double x, double y, std::string_view content, const char* anchor,
            const char* cls = nullptr, int size = 0, double rotate = 0.0) {
    out_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\"";
    if (cls) out_ += std::string(" class=\"") + cls + "\"";
    if (size) out_ += " font-size=\"" + std::to_string(size) + "\"";
    if (rotate != 0.0) {
      out_ += " transform=\"rotate(" + num(rotate) + " " + num(x) + " " + num(y) + ")\"";
    }
    out_ += ">" + xml_escape(content) + "</text>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            const char* cls = nullptr, const std::string& stroke = "none") {
    out_ += "<rect";
    if (cls) out_ += std::string(" class=\"") + cls + "\"";
    out_ += " x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
            num(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0, const char* cls = nullptr) {
    out_ += "<line";
    if (cls) out_ += std::string(" class=\"") + cls + "\"";
    out_ += " x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
            num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& fill, const char* cls,
              const std::string& stroke = "none") {
    out_ += "<circle class=\"" + std::string(cls) + "\" cx=\"" + num(cx) + "\" cy=\"" + num(cy) +
            "\" r=\"" + num(r) + "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>\n";
  }

  void open_group(const std::string& attributes) { out_ += "<g " + attributes + ">\n"; }
  void close_group() { out_ += "</g>\n"; }

  std::string finish() { return out_ + "</svg>\n"; }

 private:
  std::string out_;
};

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  void include(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Range padded() const {
    if (hi > lo) {
      const double pad = 0.05 * (hi - lo);
      return {lo - pad, hi + pad};
    }
    const double pad = lo == 0.0 ? 0.5 : 0.5 * std::abs(lo);
    return {lo - pad, hi + pad};
  }
};

Range range_of(std::span<const double> values) {
  Range r{values.front(), values.front()};
  for (double v : values) r.include(v);
  return r;
}

// A plotting rectangle in pixel space with its data ranges.
struct Frame {
  double left, top, width, height;
  Range x, y;

  double px(double v) const { return left + (v - x.lo) / (x.hi - x.lo) * width; }
  double py(double v) const { return top + height - (v - y.lo) / (y.hi - y.lo) * height; }
};

void draw_axes(Svg& svg, const Frame& f, std::string_view x_label, std::string_view y_label,
               int ticks = 5, bool x_ticks = true) {
  svg.rect(f.left, f.top, f.width, f.height, "none", "frame", "#333333");
  for (int i = 0; i < ticks; ++i) {
    const double t = static_cast<double>(i) / (ticks - 1);
    if (x_ticks) {
      const double xv = f.x.lo + t * (f.x.hi - f.x.lo);
      const double xp = f.left + t * f.width;
      svg.line(xp, f.top + f.height, xp, f.top + f.height + 4, "#333333");
      svg.text(xp, f.top + f.height + 15, num(xv), "middle", "tick", 9);
    }
    const double yv = f.y.lo + t * (f.y.hi - f.y.lo);
    const double yp = f.top + f.height - t * f.height;
    svg.line(f.left - 4, yp, f.left, yp, "#333333");
    svg.text(f.left - 6, yp + 3, num(yv), "end", "tick", 9);
  }
  if (!x_label.empty()) {
    svg.text(f.left + f.width / 2, f.top + f.height + 30, x_label, "middle", "axis-label");
  }
  if (!y_label.empty()) {
    const double x = f.left - 48;
    const double y = f.top + f.height / 2;
    svg.text(x, y, y_label, "middle", "axis-label", 0, -90);
  }
}

void draw_legend(Svg& svg, double x, double y, std::span<const std::string> names,
                 std::span<const std::string> colors) {
  svg.open_group("class=\"legend\"");
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double row = y + 16.0 * static_cast<double>(i);
    svg.rect(x, row - 9, 10, 10, colors[i % colors.size()]);
    svg.text(x + 14, row, names[i], "start");
  }
  svg.close_group();
}

const std::vector<std::string>& palette_of(const ChartSpec& spec) {
  return spec.options.palette.empty() ? kDefaultPalette : spec.options.palette;
}

Histogram histogram_for(const ChartSpec& spec, std::span<const double> values) {
  return spec.options.bin_edges.empty() ? histogram_bins(values, spec.options.bins)
                                        : histogram_bins(values, spec.options.bin_edges);
}

void draw_histogram(Svg& svg, const Frame& frame_template, const Histogram& h,
                    const std::string& color) {
  Frame f = frame_template;
  f.x = Range{h.edges.front(), h.edges.back()};
  if (!(f.x.hi > f.x.lo)) f.x = f.x.padded();
  const std::size_t peak = *std::max_element(h.counts.begin(), h.counts.end());
  f.y = Range{0.0, std::max<double>(1.0, static_cast<double>(peak))};
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    double x0 = f.px(h.edges[b]);
    double x1 = f.px(h.edges[b + 1]);
    if (x1 - x0 < 1.0) {
      x0 -= 0.5;
      x1 += 0.5;
    }
    const double y = f.py(static_cast<double>(h.counts[b]));
    svg.rect(x0, y, x1 - x0, f.top + f.height - y, color, "bin", "white");
  }
  draw_axes(svg, f, "", "", 3);
}

std::string render_histograms(const ChartSpec& spec) {
  const std::size_t n = spec.series.size();
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const std::size_t rows = (n + cols - 1) / cols;
  const double pw = 280, ph = 210;
  Svg svg(pw * static_cast<double>(cols), 40 + ph * static_cast<double>(rows), spec.title,
          spec.kind);
  const auto& colors = palette_of(spec);
  for (std::size_t i = 0; i < n; ++i) {
    const double ox = pw * static_cast<double>(i % cols);
    const double oy = 40 + ph * static_cast<double>(i / cols);
    svg.open_group("class=\"panel\" data-series=\"" + xml_escape(spec.series[i].name) + "\"");
    svg.text(ox + pw / 2 + 20, oy + 14, spec.series[i].name, "middle", "panel-title");
    const Frame f{ox + 55, oy + 22, pw - 70, ph - 60, {}, {}};
    draw_histogram(svg, f, histogram_for(spec, spec.series[i].values), colors[0]);
    svg.close_group();
  }
  return svg.finish();
}

std::string render_bar(const ChartSpec& spec) {
  const std::size_t groups = spec.series.front().values.size();
  const std::size_t ns = spec.series.size();
  const double width = std::max(480.0, 60.0 + 36.0 * static_cast<double>(groups * ns));
  Svg svg(width + 160, 440, spec.title, spec.kind);
  Frame f{80, 40, width - 100, 320, {}, {}};
  Range yr{0.0, 0.0};
  for (const auto& s : spec.series) {
    for (double v : s.values) yr.include(v);
  }
  if (yr.hi == yr.lo) yr.hi = yr.lo + 1.0;
  f.y = yr;
  f.x = Range{0.0, static_cast<double>(groups)};
  const auto& colors = palette_of(spec);
  const double gw = f.width / static_cast<double>(groups);
  const double bw = 0.8 * gw / static_cast<double>(ns);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t s = 0; s < ns; ++s) {
      const double v = spec.series[s].values[g];
      const double x = f.left + gw * static_cast<double>(g) + 0.1 * gw + bw * static_cast<double>(s);
      const double y0 = f.py(0.0), y1 = f.py(v);
      svg.rect(x, std::min(y0, y1), bw, std::abs(y1 - y0), colors[s % colors.size()], "bar");
    }
    const std::string label =
        spec.options.labels.empty() ? std::to_string(g + 1) : spec.options.labels[g];
    svg.text(f.left + gw * (static_cast<double>(g) + 0.5), f.top + f.height + 15, label, "middle",
             "tick", 9);
  }
  draw_axes(svg, f, spec.options.x_label, spec.options.y_label, 5, false);
  std::vector<std::string> names;
  for (const auto& s : spec.series) names.push_back(s.name);
  draw_legend(svg, width - 10, 50, names, colors);
  return svg.finish();
}

std::string render_line(const ChartSpec& spec) {
  Svg svg(720, 440, spec.title, spec.kind);
  Frame f{80, 40, 480, 320, {}, {}};
  const auto& xs = spec.series.front().values;
  f.x = range_of(xs).padded();
  Range yr = range_of(spec.series[1].values);
  for (std::size_t s = 1; s < spec.series.size(); ++s) {
    for (double v : spec.series[s].values) yr.include(v);
  }
  f.y = yr.padded();
  const auto& colors = palette_of(spec);
  std::vector<std::string> names;
  for (std::size_t s = 1; s < spec.series.size(); ++s) {
    const auto& color = colors[(s - 1) % colors.size()];
    std::string points;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) points += " ";
      points += num(f.px(xs[i])) + "," + num(f.py(spec.series[s].values[i]));
    }
    svg.raw("<polyline class=\"curve\" fill=\"none\" stroke=\"" + color +
            "\" stroke-width=\"2\" points=\"" + points + "\"/>\n");
    for (std::size_t i = 0; i < xs.size(); ++i) {
      svg.circle(f.px(xs[i]), f.py(spec.series[s].values[i]), 3, color, "marker");
    }
    names.push_back(spec.series[s].name);
  }
  draw_axes(svg, f,
            spec.options.x_label.empty() ? spec.series.front().name : spec.options.x_label,
            spec.options.y_label);
  draw_legend(svg, 580, 50, names, colors);
  return svg.finish();
}

std::size_t group_of(const Series* group, std::size_t i) {
  if (!group) return 0;
  const double g = group->values[i];
  return g < 0 ? 0 : static_cast<std::size_t>(g);
}

std::string render_scatter(const ChartSpec& spec) {
  const Series& x = *spec.find("x");
  const Series& y = *spec.find("y");
  const Series* group = spec.find("group");
  const Series* highlight = spec.find("highlight");
  const Series* ax = spec.find("arrow_x");
  const Series* ay = spec.find("arrow_y");

  Svg svg(720, 480, spec.title, spec.kind);
  Frame f{80, 40, 480, 360, {}, {}};
  Range xr{0.0, 0.0}, yr{0.0, 0.0};
  if (!x.values.empty()) {
    xr = range_of(x.values);
    yr = range_of(y.values);
  }
  if (ax) {
    xr.include(0.0);
    yr.include(0.0);
    for (double v : ax->values) xr.include(v);
    for (double v : ay->values) yr.include(v);
  }
  f.x = xr.padded();
  f.y = yr.padded();
  const auto& colors = palette_of(spec);

  std::size_t n_groups = 1;
  for (std::size_t i = 0; i < x.values.size(); ++i) n_groups = std::max(n_groups, group_of(group, i) + 1);

  svg.open_group("class=\"points\"");
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    svg.circle(f.px(x.values[i]), f.py(y.values[i]), 2.5,
               colors[group_of(group, i) % colors.size()], "point");
  }
  svg.close_group();
  if (highlight) {
    svg.open_group("class=\"highlights\"");
    for (std::size_t i = 0; i < x.values.size(); ++i) {
      if (highlight->values[i] == 0.0) continue;
      svg.circle(f.px(x.values[i]), f.py(y.values[i]), 5.5,
                 colors[group_of(group, i) % colors.size()], "highlight", "black");
    }
    svg.close_group();
  }
  if (ax) {
    svg.open_group("class=\"arrows\"");
    for (std::size_t i = 0; i < ax->values.size(); ++i) {
      svg.line(f.px(0.0), f.py(0.0), f.px(ax->values[i]), f.py(ay->values[i]), "#b22222", 1.5,
               "arrow");
      if (!spec.options.labels.empty()) {
        svg.text(f.px(ax->values[i]), f.py(ay->values[i]) - 4, spec.options.labels[i], "middle",
                 "arrow-label", 9);
      }
    }
    svg.close_group();
  }
  draw_axes(svg, f, spec.options.x_label, spec.options.y_label);
  std::vector<std::string> names;
  std::vector<std::string> legend_colors;
  for (std::size_t g = 0; g < n_groups; ++g) {
    names.push_back(group ? "cluster " + std::to_string(g) : "points");
    legend_colors.push_back(colors[g % colors.size()]);
  }
  if (highlight) {
    names.push_back("nearest to centroid");
    legend_colors.push_back("black");
  }
  draw_legend(svg, 580, 50, names, legend_colors);
  return svg.finish();
}

std::string heat_colour(double t) {
  // t in [-1, 1]: blue through white to red.
  t = std::clamp(t, -1.0, 1.0);
  int r = 255, g = 255, b = 255;
  if (t >= 0) {
    g = b = static_cast<int>(std::lround(255.0 * (1.0 - t)));
  } else {
    r = g = static_cast<int>(std::lround(255.0 * (1.0 + t)));
  }
  char buffer[8];
  std::snprintf(buffer, sizeof buffer, "#%02x%02x%02x", r, g, b);
  return buffer;
}

std::string render_heatmap(const ChartSpec& spec) {
  const std::size_t cols = spec.series.size();
  const std::size_t rows = spec.series.front().values.size();
  const double cell = std::clamp(560.0 / static_cast<double>(std::max(rows, cols)), 12.0, 60.0);
  const double left = 150, top = 50;
  const double width = left + cell * static_cast<double>(cols) + 120;
  const double height = top + cell * static_cast<double>(rows) + 140;
  Svg svg(width, height, spec.title, spec.kind);
  double scale = 0.0;
  for (const auto& s : spec.series) {
    for (double v : s.values) scale = std::max(scale, std::abs(v));
  }
  if (scale == 0.0) scale = 1.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = spec.series[c].values[r];
      const double x = left + cell * static_cast<double>(c);
      const double y = top + cell * static_cast<double>(r);
      svg.rect(x, y, cell, cell, heat_colour(v / scale), "cell", "#ffffff");
      if (cell >= 28) svg.text(x + cell / 2, y + cell / 2 + 3, num(v), "middle", "value", 8);
    }
    const std::string label =
        spec.options.labels.empty() ? std::to_string(r) : spec.options.labels[r];
    svg.text(left - 6, top + cell * (static_cast<double>(r) + 0.5) + 3, label, "end", "tick", 9);
  }
  const double base = top + cell * static_cast<double>(rows) + 8;
  for (std::size_t c = 0; c < cols; ++c) {
    const double x = left + cell * (static_cast<double>(c) + 0.5);
    svg.text(x, base, spec.series[c].name, "end", "tick", 9, -45);
  }
  // Colour scale.
  const double lx = left + cell * static_cast<double>(cols) + 30;
  svg.open_group("class=\"legend\"");
  for (int i = 0; i <= 10; ++i) {
    const double t = 1.0 - 0.2 * i;
    svg.rect(lx, top + 14.0 * i, 14, 14, heat_colour(t));
    if (i % 5 == 0) svg.text(lx + 20, top + 14.0 * i + 11, num(t * scale), "start", "tick", 9);
  }
  svg.close_group();
  return svg.finish();
}

std::string render_pairplot(const ChartSpec& spec) {
  std::vector<const Series*> dims;
  const Series* group = nullptr;
  for (const auto& s : spec.series) {
    if (s.name == "group") {
      group = &s;
    } else {
      dims.push_back(&s);
    }
  }
  const std::size_t q = dims.size();
  const double panel = 170;
  const double left = 70, top = 40;
  const double size = left + panel * static_cast<double>(q) + 140;
  Svg svg(size, top + panel * static_cast<double>(q) + 50, spec.title, spec.kind);
  const auto& colors = palette_of(spec);
  std::size_t n_groups = 1;
  for (std::size_t i = 0; i < dims.front()->values.size(); ++i) {
    n_groups = std::max(n_groups, group_of(group, i) + 1);
  }
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t c = 0; c < q; ++c) {
      const double ox = left + panel * static_cast<double>(c);
      const double oy = top + panel * static_cast<double>(r);
      const Frame f{ox + 28, oy + 8, panel - 40, panel - 40, {}, {}};
      if (r == c) {
        svg.open_group("class=\"panel diagonal\" data-row=\"" + std::to_string(r) +
                       "\" data-col=\"" + std::to_string(c) + "\"");
        draw_histogram(svg, f, histogram_for(spec, dims[r]->values), colors[0]);
      } else {
        svg.open_group("class=\"panel offdiagonal\" data-row=\"" + std::to_string(r) +
                       "\" data-col=\"" + std::to_string(c) + "\"");
        Frame g = f;
        g.x = range_of(dims[c]->values).padded();
        g.y = range_of(dims[r]->values).padded();
        for (std::size_t i = 0; i < dims[c]->values.size(); ++i) {
          svg.circle(g.px(dims[c]->values[i]), g.py(dims[r]->values[i]), 1.5,
                     colors[group_of(group, i) % colors.size()], "point");
        }
        draw_axes(svg, g, "", "", 3);
      }
      svg.close_group();
    }
    svg.text(left - 50, top + panel * (static_cast<double>(r) + 0.5), dims[r]->name, "middle",
             "axis-label", 0, -90);
    svg.text(left + panel * (static_cast<double>(r) + 0.5), top + panel * static_cast<double>(q) + 8,
             dims[r]->name, "middle", "axis-label");
  }
  std::vector<std::string> names;
  for (std::size_t g = 0; g < n_groups; ++g) {
    names.push_back(group ? "cluster " + std::to_string(g) : "points");
  }
  draw_legend(svg, left + panel * static_cast<double>(q) + 20, top + 10, names, colors);
  return svg.finish();
}

}  // namespace

std::string render_chart(const ChartSpec& spec) {
  validate(spec);
  switch (spec.kind) {
    case ChartKind::Histogram: return render_histograms(spec);
    case ChartKind::Bar: return render_bar(spec);
    case ChartKind::Line: return render_line(spec);
    case ChartKind::Scatter: return render_scatter(spec);
    case ChartKind::Heatmap: return render_heatmap(spec);
    case ChartKind::Pairplot: return render_pairplot(spec);
  }
  throw Error(ErrorCode::Spec, "unknown chart kind");
}

std::string chart_data_csv(const ChartSpec& spec) {
  validate(spec);
  std::string out;
  if (spec.kind == ChartKind::Histogram) {
    out = "series,bin_left,bin_right,count\n";
    for (const auto& s : spec.series) {
      const Histogram h = histogram_for(spec, s.values);
      for (std::size_t b = 0; b < h.counts.size(); ++b) {
        out += csv::escape(s.name) + "," + num(h.edges[b]) + "," + num(h.edges[b + 1]) + "," +
               std::to_string(h.counts[b]) + "\n";
      }
    }
    return out;
  }
  const auto& labels = spec.options.labels;
  std::size_t rows = labels.size();
  for (const auto& s : spec.series) rows = std::max(rows, s.values.size());
  bool first = true;
  if (!labels.empty()) {
    out += "label";
    first = false;
  }
  for (const auto& s : spec.series) {
    if (!first) out += ",";
    out += csv::escape(s.name);
    first = false;
  }
  out += "\n";
  for (std::size_t i = 0; i < rows; ++i) {
    first = true;
    if (!labels.empty()) {
      if (i < labels.size()) out += csv::escape(labels[i]);
      first = false;
    }
    for (const auto& s : spec.series) {
      if (!first) out += ",";
      if (i < s.values.size()) out += num(s.values[i]);
      first = false;
    }
    out += "\n";
  }
  return out;
}

std::vector<std::string> write_chart(const ChartSpec& spec) {
  if (spec.output_path.empty()) throw Error(ErrorCode::Spec, "chart has no output path");
  const std::string svg = render_chart(spec);
  const std::string data = chart_data_csv(spec);
  std::filesystem::path csv_path(spec.output_path);
  csv_path.replace_extension(".csv");
  csv::write_file(spec.output_path, svg);
  csv::write_file(csv_path.string(), data);
  return {spec.output_path, csv_path.string()};
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string report_manifest(const std::string& dir, std::span<const std::string> files) {
  std::string out = "file,bytes,fnv1a64\n";
  for (const auto& name : files) {
    const std::string content = csv::read_file((std::filesystem::path(dir) / name).string());
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(content)));
    out += csv::escape(name) + "," + std::to_string(content.size()) + "," + hash + "\n";
  }
  return out;
}

}  // namespace cml
