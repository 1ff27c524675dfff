#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csv.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace cml {

std::size_t test_size(std::size_t n, double test_fraction) {
  if (n < 2) {
    throw Error(ErrorCode::InsufficientData, "a train/test split needs at least 2 rows");
  }
  if (!(test_fraction > 0.0 && test_fraction <= 0.5)) {
    throw Error(ErrorCode::Domain, "test fraction must lie in (0, 0.5]");
  }
  const double raw = std::floor(static_cast<double>(n) * test_fraction + 0.5);
  const auto size = static_cast<std::size_t>(raw);
  return std::clamp<std::size_t>(size, 1, n - 1);
}

Split train_test_split(const Table& table, const SplitSpec& spec) {
  const std::size_t n = table.row_count();
  const std::size_t n_test = test_size(n, spec.test_fraction);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(spec.seed);
  shuffle(order, rng);

  Split split;
  split.test_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(split.test_rows.begin(), split.test_rows.end());
  std::sort(split.train_rows.begin(), split.train_rows.end());
  split.test = table.select_rows(split.test_rows);
  split.train = table.select_rows(split.train_rows);
  return split;
}

namespace {

void check_lengths(std::span<const double> predictions, std::span<const double> targets,
                   std::size_t minimum) {
  if (predictions.size() != targets.size()) {
    throw Error(ErrorCode::Shape, "predictions (" + std::to_string(predictions.size()) +
                                      ") and targets (" + std::to_string(targets.size()) +
                                      ") differ in length");
  }
  if (predictions.size() < minimum) {
    throw Error(ErrorCode::InsufficientData,
                "need at least " + std::to_string(minimum) + " prediction(s)");
  }
}

}  // namespace

double rmse(std::span<const double> predictions, std::span<const double> targets) {
  check_lengths(predictions, targets, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double e = predictions[i] - targets[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(targets.size()));
}

double mae(std::span<const double> predictions, std::span<const double> targets) {
  check_lengths(predictions, targets, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) sum += std::abs(predictions[i] - targets[i]);
  return sum / static_cast<double>(targets.size());
}

double r2(std::span<const double> predictions, std::span<const double> targets) {
  check_lengths(predictions, targets, 2);
  const double mean =
      std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(targets.size());
  const auto [lo, hi] = std::minmax_element(targets.begin(), targets.end());
  if (*lo == *hi) throw Error(ErrorCode::Domain, "R^2 is undefined for constant targets");
  double residual = 0.0, spread = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    residual += (targets[i] - predictions[i]) * (targets[i] - predictions[i]);
    spread += (targets[i] - mean) * (targets[i] - mean);
  }
  return 1.0 - residual / spread;
}

RegressionMetrics evaluate(std::span<const double> predictions, std::span<const double> targets) {
  return {rmse(predictions, targets), mae(predictions, targets), r2(predictions, targets)};
}

std::string metrics_to_csv(const RegressionMetrics& m) {
  return "rmse,mae,r2\n" + csv::format_double(m.rmse) + "," + csv::format_double(m.mae) + "," +
         csv::format_double(m.r2) + "\n";
}

std::string metrics_to_json(const RegressionMetrics& m) {
  return "{\"rmse\": " + csv::format_double(m.rmse) + ", \"mae\": " + csv::format_double(m.mae) +
         ", \"r2\": " + csv::format_double(m.r2) + "}\n";
}

}  // namespace cml
