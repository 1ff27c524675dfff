#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cluster.hpp"
#include "tabular.hpp"

namespace cml {

// Profile of one cluster over its m rows nearest the centroid: the mode of
// each categorical column and the mean of each numeric column, in table
// column order. Identifier columns are skipped.
struct ClusterSummary {
  std::size_t cluster = 0;
  std::size_t m_requested = 0;
  std::size_t m_used = 0;
  std::size_t population = 0;
  std::vector<std::pair<std::string, std::string>> categorical_modes;
  std::vector<std::pair<std::string, double>> numeric_means;
  std::vector<std::size_t> rows;  // the rows summarized

  // True when the cluster had fewer than m rows and all were used.
  bool truncated() const noexcept { return m_used < m_requested; }
  const std::string* mode_of(std::string_view column) const;
  const double* mean_of(std::string_view column) const;
};

// `table` must be in original units with decoded categories, row-aligned
// with `points`. Mode ties go to the lexicographically smallest category.
std::vector<ClusterSummary> summarize_clusters(const Table& table, const KMeansModel& model,
                                               const Matrix& points, std::size_t m = 7);

// 100 * mean_a / mean_b, the ratio form of an improvement figure.
double improvement_percent(double mean_a, double mean_b);

// One row per variable, one column per cluster, with a (c)/(n) kind marker.
std::string summary_to_csv(const std::vector<ClusterSummary>& summaries);

}  // namespace cml
