#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tabular.hpp"

namespace cml {

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

// round-half-up(n * fraction), clamped to [1, n - 1].
std::size_t test_size(std::size_t n, double test_fraction);

struct Split {
  Table train;
  Table test;
  std::vector<std::size_t> train_rows;  // ascending source indices
  std::vector<std::size_t> test_rows;
};

Split train_test_split(const Table& table, const SplitSpec& spec);

double rmse(std::span<const double> predictions, std::span<const double> targets);
double mae(std::span<const double> predictions, std::span<const double> targets);
double r2(std::span<const double> predictions, std::span<const double> targets);

struct RegressionMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
};

RegressionMetrics evaluate(std::span<const double> predictions, std::span<const double> targets);

std::string metrics_to_csv(const RegressionMetrics& metrics);
std::string metrics_to_json(const RegressionMetrics& metrics);

}  // namespace cml
