#include "doctest.h"

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "error.hpp"
#include "metrics.hpp"
#include "rng.hpp"

using namespace cml;

namespace {

Table index_table(std::size_t n) {
  NumericCells cells(n);
  for (std::size_t i = 0; i < n; ++i) cells[i] = double(i);
  return Table({Column::numeric("i", ColumnRole::Independent, cells)});
}

std::vector<double> random_vector(SplitMix64& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal() * 10.0;
  return v;
}

}  // namespace

TEST_CASE("hand-derived error values") {
  const std::vector<double> h = {0, 0}, y = {3, 4};
  CHECK(std::abs(rmse(h, y) - std::sqrt(12.5)) <= 1e-9);
  CHECK(std::abs(mae(h, y) - 3.5) <= 1e-9);
  const std::vector<double> one_h = {-2}, one_y = {0};
  CHECK(mae(one_h, one_y) == 2.0);
  CHECK(rmse(y, y) == 0.0);
  CHECK(mae(y, y) == 0.0);
  const std::vector<double> shifted = {5.5, 6.5};
  CHECK(rmse(shifted, y) == doctest::Approx(2.5));
}

TEST_CASE("r2 on perfect and mean predictors") {
  const std::vector<double> y = {1, 2, 3}, mean = {2, 2, 2};
  CHECK(r2(y, y) == 1.0);
  CHECK(r2(mean, y) == 0.0);
  const std::vector<double> constant = {4, 4, 4};
  CHECK_THROWS_AS(r2(y, constant), Error);
}

TEST_CASE("shape errors") {
  const std::vector<double> a = {1, 2}, b = {1};
  try {
    rmse(a, b);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Shape);
  }
  CHECK_THROWS_AS(mae(a, b), Error);
  CHECK_THROWS_AS(r2(a, b), Error);
}

TEST_CASE("rmse dominates mae") {
  SplitMix64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(50);
    const auto h = random_vector(rng, n), y = random_vector(rng, n);
    CHECK(rmse(h, y) >= mae(h, y) - 1e-12);
  }
}

TEST_CASE("r2 is invariant to a common shift") {
  SplitMix64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    auto h = random_vector(rng, n), y = random_vector(rng, n);
    const double before = r2(h, y);
    const double c = rng.normal() * 100.0;
    for (auto& x : h) x += c;
    for (auto& x : y) x += c;
    CHECK(std::abs(r2(h, y) - before) <= 1e-9);
  }
}

TEST_CASE("rmse and mae scale with the residuals") {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(30);
    const auto y = random_vector(rng, n), offset = random_vector(rng, n);
    const double s = 0.1 + rng.uniform() * 5.0;
    std::vector<double> h(n), hs(n);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = y[i] + offset[i];
      hs[i] = y[i] + s * offset[i];
    }
    CHECK(std::abs(rmse(hs, y) - s * rmse(h, y)) <= 1e-9 * std::max(1.0, rmse(hs, y)));
    CHECK(std::abs(mae(hs, y) - s * mae(h, y)) <= 1e-9 * std::max(1.0, mae(hs, y)));
  }
}

TEST_CASE("test size rounding and clamping") {
  CHECK(test_size(10, 0.3) == 3);
  CHECK(test_size(5, 0.1) == 1);
  CHECK(test_size(10, 0.25) == 3);
  CHECK(test_size(2, 0.5) == 1);
}

TEST_CASE("split sizes and determinism") {
  const Table t = index_table(10);
  const Split a = train_test_split(t, {0.3, 42});
  CHECK(a.test.row_count() == 3);
  CHECK(a.train.row_count() == 7);
  const Split b = train_test_split(t, {0.3, 42});
  CHECK(a.test_rows == b.test_rows);
  CHECK_THROWS_AS(train_test_split(index_table(1), {0.3, 1}), Error);
}

TEST_CASE("splits are disjoint and exhaustive") {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(100);
    const double fraction = 0.01 + rng.uniform() * 0.49;
    const Split s = train_test_split(index_table(n), {fraction, rng.next()});
    std::set<std::size_t> seen(s.train_rows.begin(), s.train_rows.end());
    for (std::size_t r : s.test_rows) CHECK(seen.insert(r).second);
    CHECK(seen.size() == n);
    CHECK(s.test_rows.size() == test_size(n, fraction));
    CHECK(s.test.column("i").numbers()[0] == double(s.test_rows[0]));
  }
}

TEST_CASE("metrics serialize as three fields") {
  const RegressionMetrics m{1.5, 1.0, 0.25};
  const std::string csv = metrics_to_csv(m);
  CHECK(csv.rfind("rmse,mae,r2\n", 0) == 0);
  CHECK(metrics_to_json(m).find("\"r2\"") != std::string::npos);
}
