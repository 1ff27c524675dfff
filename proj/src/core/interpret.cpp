#include "interpret.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "csv.hpp"
#include "error.hpp"

namespace cml {

const std::string* ClusterSummary::mode_of(std::string_view column) const {
  for (const auto& [name, value] : categorical_modes) {
    if (name == column) return &value;
  }
  return nullptr;
}

const double* ClusterSummary::mean_of(std::string_view column) const {
  for (const auto& [name, value] : numeric_means) {
    if (name == column) return &value;
  }
  return nullptr;
}

std::vector<ClusterSummary> summarize_clusters(const Table& table, const KMeansModel& model,
                                               const Matrix& points, std::size_t m) {
  if (m == 0) throw Error(ErrorCode::Domain, "summary size m must be at least 1");
  if (table.row_count() != points.rows() || points.rows() != model.assignments.size()) {
    throw Error(ErrorCode::Shape, "table, points and assignments must have the same rows");
  }
  const auto sizes = model.cluster_sizes();
  std::vector<ClusterSummary> summaries;
  for (std::size_t c = 0; c < model.k; ++c) {
    ClusterSummary summary;
    summary.cluster = c;
    summary.m_requested = m;
    summary.population = sizes[c];
    summary.m_used = std::min(m, sizes[c]);
    summary.rows = nearest_to_centroid(model, points, c, summary.m_used);

    for (const auto& column : table.columns()) {
      if (column.kind() == ColumnKind::Identifier) continue;
      if (column.is_numeric()) {
        double sum = 0.0;
        std::size_t present = 0;
        for (std::size_t r : summary.rows) {
          if (const auto& cell = column.numbers()[r]) {
            sum += *cell;
            ++present;
          }
        }
        summary.numeric_means.emplace_back(
            column.name(), present ? sum / static_cast<double>(present)
                                   : std::numeric_limits<double>::quiet_NaN());
      } else {
        std::map<std::string, std::size_t> votes;
        for (std::size_t r : summary.rows) {
          if (const auto& cell = column.texts()[r]) ++votes[*cell];
        }
        std::string mode;
        std::size_t best = 0;
        for (const auto& [value, count] : votes) {
          if (count > best) {
            best = count;
            mode = value;
          }
        }
        summary.categorical_modes.emplace_back(column.name(), mode);
      }
    }
    summaries.push_back(std::move(summary));
  }
  return summaries;
}

double improvement_percent(double mean_a, double mean_b) {
  if (!(mean_b > 0.0)) {
    throw Error(ErrorCode::Domain, "improvement needs a positive reference mean");
  }
  return 100.0 * mean_a / mean_b;
}

std::string summary_to_csv(const std::vector<ClusterSummary>& summaries) {
  std::string out = "variable,kind";
  for (const auto& s : summaries) out += ",cluster_" + std::to_string(s.cluster);
  out += "\n";
  if (summaries.empty()) return out;
  for (const auto& [name, mode] : summaries.front().categorical_modes) {
    out += csv::escape(name) + ",(c)";
    for (const auto& s : summaries) out += "," + csv::escape(*s.mode_of(name), true);
    out += "\n";
  }
  for (const auto& [name, mean] : summaries.front().numeric_means) {
    out += csv::escape(name) + ",(n)";
    for (const auto& s : summaries) {
      const double value = *s.mean_of(name);
      out += ",";
      if (!std::isnan(value)) out += csv::format_double(value);
    }
    out += "\n";
  }
  return out;
}

}  // namespace cml
