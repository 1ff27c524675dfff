#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cml {

struct Histogram {
  std::vector<double> edges;  // counts.size() + 1 ascending edges
  std::vector<std::size_t> counts;
};

// Equal-width bins over [min, max]; the last bin is closed on the right.
// Identical values give one degenerate bin holding every point.
Histogram histogram_bins(std::span<const double> values, std::size_t n_bins);
// Fixed edges; values outside [edges.front(), edges.back()] are not counted.
Histogram histogram_bins(std::span<const double> values, std::span<const double> edges);

enum class ChartKind { Histogram, Bar, Line, Scatter, Heatmap, Pairplot };

const char* to_string(ChartKind kind) noexcept;

struct Series {
  std::string name;
  std::vector<double> values;
};

struct ChartOptions {
  std::size_t bins = 30;
  std::string x_label;
  std::string y_label;
  // Bar: one label per bar. Heatmap: one label per row. Scatter: one label
  // per arrow.
  std::vector<std::string> labels;
  std::vector<std::string> palette;  // CSS colours; a fixed palette when empty
  std::vector<double> bin_edges;     // shared histogram edges when non-empty
};

// Series layout per kind:
//   histogram  one sample per series, one panel each
//   bar        one value per label; several series form grouped bars
//   line       series[0] is x, the rest are y curves
//   scatter    "x" and "y"; optional "group" (integer codes), "highlight"
//              (non-zero marks a point), "arrow_x"/"arrow_y" (vectors from
//              the origin, named by labels)
//   heatmap    series are matrix columns, values run down the rows
//   pairplot   one series per dimension; optional "group"
struct ChartSpec {
  ChartKind kind = ChartKind::Scatter;
  std::string title;
  std::vector<Series> series;
  ChartOptions options;
  std::string output_path;

  const Series* find(std::string_view name) const;
};

// Throws Spec on mismatched lengths, missing required series, empty or
// non-finite data.
void validate(const ChartSpec& spec);

// Self-contained SVG. Byte-deterministic for a given spec; every number is
// printed with 6 significant digits.
std::string render_chart(const ChartSpec& spec);

// The numbers the chart plots, as CSV.
std::string chart_data_csv(const ChartSpec& spec);

// Writes the SVG to output_path and the CSV next to it (.svg -> .csv).
// Returns the two paths.
std::vector<std::string> write_chart(const ChartSpec& spec);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// `name,bytes,fnv1a64` per file (paths relative to `dir`), in the order
// given.
std::string report_manifest(const std::string& dir, std::span<const std::string> files);

}  // namespace cml
