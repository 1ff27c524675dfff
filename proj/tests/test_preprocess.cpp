#include "doctest.h"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "error.hpp"
#include "oracle.hpp"
#include "preprocess.hpp"
#include "rng.hpp"
#include "synth.hpp"

using namespace cml;

namespace {

Column num(const std::string& name, NumericCells cells) {
  return Column::numeric(name, ColumnRole::Independent, std::move(cells));
}

Column cat(const std::string& name, TextCells cells) {
  return Column::text(name, ColumnKind::Categorical, ColumnRole::Independent, std::move(cells));
}

std::vector<double> values_of(const Table& t, const std::string& name) {
  return t.column(name).present_values();
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected cml::Error");
  return ErrorCode::Config;
}

}  // namespace

TEST_CASE("label codes follow lexicographic category order") {
  const Table t({cat("fm", {"Delivery", "Mailed", "Delivery"}), cat("g", {"DN3", "DN1", "DN2"}),
                 cat("one", {"x", "x", "x"})});
  const std::vector<std::string> cols = {"fm", "g", "one"};
  const EncodeResult r = encode_labels(t, cols);
  CHECK(values_of(r.table, "fm") == std::vector<double>{0, 1, 0});
  CHECK(values_of(r.table, "g") == std::vector<double>{2, 0, 1});
  CHECK(values_of(r.table, "one") == std::vector<double>{0, 0, 0});
  CHECK(r.maps[0].code_of("Mailed") == 1);
  CHECK(r.maps[1].decode(0) == "DN1");
  CHECK(code_of([&] { r.maps[0].code_of("Unknown"); }) == ErrorCode::Lookup);
}

TEST_CASE("encode then decode is the identity on categorical columns") {
  SplitMix64 rng(5);
  const std::vector<std::string> pool = {"b", "a", "Delivery + Mailed", "z z", "A"};
  for (int trial = 0; trial < 30; ++trial) {
    TextCells cells(25);
    for (auto& c : cells) {
      if (rng.uniform() > 0.15) c = pool[rng.below(pool.size())];
    }
    const Table t({cat("c", cells)});
    const std::vector<std::string> cols = {"c"};
    const EncodeResult r = encode_labels(t, cols);
    for (std::size_t code = 1; code < r.maps[0].categories.size(); ++code) {
      CHECK(r.maps[0].categories[code - 1] < r.maps[0].categories[code]);
    }
    const Table back = decode_labels(r.table, r.maps);
    CHECK(back.column("c").texts() == cells);
    CHECK(back.column("c").kind() == ColumnKind::Categorical);
  }
}

TEST_CASE("standardize maps [1,2,3] to [-1,0,1]") {
  const Table t({num("x", {1.0, 2.0, 3.0})});
  const std::vector<std::string> cols = {"x"};
  const StandardizeResult r = standardize(t, cols);
  const auto v = values_of(r.table, "x");
  CHECK(v[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(std::abs(v[1]) < 1e-15);
  CHECK(v[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.params[0].mean == 2.0);
  CHECK(r.params[0].std_sample == 1.0);
}

TEST_CASE("standardize is idempotent and rejects constants") {
  const Table t({num("x", {-1.0, 0.0, 1.0})});
  const std::vector<std::string> cols = {"x"};
  const auto once = standardize(t, cols).table;
  const auto twice = standardize(once, cols).table;
  const auto a = values_of(once, "x"), b = values_of(twice, "x");
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
  const Table c({num("c", {5.0, 5.0, 5.0})});
  const std::vector<std::string> ccols = {"c"};
  CHECK(code_of([&] { standardize(c, ccols); }) == ErrorCode::ConstantColumn);
}

TEST_CASE("standardized columns have zero mean and unit std over present cells") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    NumericCells cells(3 + rng.below(60));
    for (auto& c : cells) {
      if (rng.uniform() > 0.1) c = rng.normal(500.0, 80.0);
    }
    cells[0] = 1.0;
    cells[1] = 2.0;
    const Table t({num("x", cells)});
    const std::vector<std::string> cols = {"x"};
    const StandardizeResult r = standardize(t, cols);
    const auto v = values_of(r.table, "x");
    CHECK(std::abs(oracle::mean(v)) <= 1e-10);
    CHECK(std::abs(oracle::sample_std(v) - 1.0) <= 1e-10);
    const Table back = unstandardize(r.table, r.params);
    const auto orig = values_of(t, "x"), round = values_of(back, "x");
    for (std::size_t i = 0; i < orig.size(); ++i) {
      CHECK(std::abs(orig[i] - round[i]) <= 1e-9 * std::abs(orig[i]));
    }
  }
}

TEST_CASE("type-7 quantile trimming of 1..10") {
  NumericCells cells;
  for (int i = 1; i <= 10; ++i) cells.push_back(i);
  const Table t({num("x", cells)});
  const std::vector<std::string> cols = {"x"};
  const TrimResult r = trim_outliers(t, cols, 0.10);
  CHECK(r.bounds[0].lower == doctest::Approx(oracle::quantile7(values_of(t, "x"), 0.1)));
  CHECK(r.bounds[0].lower == doctest::Approx(1.9).epsilon(1e-12));
  CHECK(r.bounds[0].upper == doctest::Approx(9.1).epsilon(1e-12));
  CHECK(values_of(r.table, "x") == std::vector<double>{2, 3, 4, 5, 6, 7, 8, 9});
}

TEST_CASE("trimming identical values drops nothing") {
  const Table t({num("x", NumericCells(12, 4.0))});
  const std::vector<std::string> cols = {"x"};
  CHECK(trim_outliers(t, cols, 0.10).table.row_count() == 12);
}

TEST_CASE("trimming keeps rows missing the trimmed cell and winsorize keeps every row") {
  NumericCells cells;
  for (int i = 1; i <= 10; ++i) cells.push_back(i);
  cells.push_back(std::nullopt);
  const Table t({num("x", cells)});
  const std::vector<std::string> cols = {"x"};
  CHECK(trim_outliers(t, cols, 0.10).table.row_count() == 9);
  const TrimResult w = trim_outliers(t, cols, 0.10, TrimMode::Winsorize);
  CHECK(w.table.row_count() == 11);
  const auto v = values_of(w.table, "x");
  CHECK(*std::min_element(v.begin(), v.end()) == doctest::Approx(1.9));
  CHECK(*std::max_element(v.begin(), v.end()) == doctest::Approx(9.1));
}

TEST_CASE("retained cells lie within the trim bounds") {
  SplitMix64 rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    NumericCells a(50), b(50);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = std::exp(rng.normal());
      if (rng.uniform() > 0.1) b[i] = rng.normal() * 10.0;
    }
    const Table t({num("a", a), num("b", b)});
    const std::vector<std::string> cols = {"a", "b"};
    const TrimResult r = trim_outliers(t, cols, 0.05 + 0.1 * rng.uniform());
    for (const auto& bound : r.bounds) {
      CHECK(bound.lower <= bound.upper);
      for (double v : values_of(r.table, bound.column)) {
        CHECK(v >= bound.lower);
        CHECK(v <= bound.upper);
      }
    }
    CHECK(r.kept_rows.size() == r.table.row_count());
  }
}

TEST_CASE("lognormal trimming lowers kurtosis") {
  SplitMix64 rng(1000);
  NumericCells cells(1000);
  for (auto& c : cells) c = std::exp(rng.normal());
  const Table t({num("x", cells)});
  const std::vector<std::string> cols = {"x"};
  const auto before = values_of(t, "x");
  const auto after = values_of(trim_outliers(t, cols, 0.10).table, "x");
  CHECK(oracle::kurtosis(after) < oracle::kurtosis(before));
}

TEST_CASE("k-NN imputation of the worked example") {
  const Table t({num("a", {1.0, 1.1, 9.0, 1.05}), num("b", {10.0, 12.0, 50.0, std::nullopt})});
  ImputeConfig config;
  config.k = 2;
  const Table out = knn_impute(t, config);
  CHECK(*out.column("b").numbers()[3] == doctest::Approx(11.0).epsilon(1e-12));
}

TEST_CASE("nan-aware distance scales by the observed fraction") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> a = {0.0, 3.0, nan}, b = {nan, nan, 1.0}, c = {1.0, 1.0, 1.0};
  CHECK(std::isinf(nan_euclidean(a, b)));
  CHECK(nan_euclidean(a, c) == doctest::Approx(std::sqrt(1.5 * (1.0 + 4.0))));
}

TEST_CASE("k-NN matches a brute-force neighbour search") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 12;
    NumericCells a(n), b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal() * 5.0;
      c[i] = rng.normal() + 10.0;
    }
    const std::size_t target = rng.below(n);
    c[target] = std::nullopt;
    const Table t({num("a", a), num("b", b), num("c", c)});
    ImputeConfig config;
    config.k = 3;
    const double got = *knn_impute(t, config).column("c").numbers()[target];

    // Standardize a and b, distance over the two observed features.
    auto z = [&](const NumericCells& v) {
      std::vector<double> x;
      for (auto& cell : v) x.push_back(*cell);
      const double m = oracle::mean(x), s = oracle::sample_std(x);
      for (double& e : x) e = (e - m) / s;
      return x;
    };
    const auto za = z(a), zb = z(b);
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == target) continue;
      const double sq = (za[j] - za[target]) * (za[j] - za[target]) +
                        (zb[j] - zb[target]) * (zb[j] - zb[target]);
      d.emplace_back(std::sqrt(1.5 * sq), j);
    }
    std::sort(d.begin(), d.end());
    const double expected = (*c[d[0].second] + *c[d[1].second] + *c[d[2].second]) / 3.0;
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("k=1 imputation with exact duplicates reproduces masked cells") {
  SplitMix64 rng(41);
  const std::size_t n = 20;
  NumericCells a(n), b(n);
  TextCells g(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.normal() * 10.0;
    b[i] = rng.normal();
    g[i] = rng.uniform() < 0.5 ? "x" : "y";
  }
  // Append a masked duplicate of every row.
  NumericCells a2 = a, b2 = b;
  TextCells g2 = g;
  for (std::size_t i = 0; i < n; ++i) {
    a2.push_back(i % 3 == 0 ? std::nullopt : a[i]);
    b2.push_back(i % 3 == 1 ? std::nullopt : b[i]);
    g2.push_back(i % 3 == 2 ? std::nullopt : g[i]);
  }
  const Table t({num("a", a2), num("b", b2), cat("g", g2)});
  ImputeConfig config;
  config.k = 1;
  const Table out = knn_impute(t, config);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(out.column("a").numbers()[n + i] == a[i]);
    CHECK(out.column("b").numbers()[n + i] == b[i]);
    CHECK(out.column("g").texts()[n + i] == g[i]);
  }
}

TEST_CASE("imputation leaves complete tables alone and rejects empty columns") {
  const Table full({num("a", {1.0, 2.0, 3.0})});
  CHECK(knn_impute(full).column("a").numbers() == full.column("a").numbers());
  const Table empty({num("a", {1.0, 2.0}), num("b", {std::nullopt, std::nullopt})});
  CHECK(code_of([&] { knn_impute(empty); }) == ErrorCode::Unimputable);
}

TEST_CASE("pearson correlation examples") {
  const Table t({num("x", {1, 2, 3}), num("y", {2, 4, 6}), num("z", {3, 2, 1}),
                 num("w", {1, 3, 2})});
  const std::vector<std::string> cols = {"x", "y", "z", "w"};
  const Matrix r = correlation_matrix(t, cols);
  CHECK(r(0, 1) == doctest::Approx(1.0));
  CHECK(r(0, 2) == doctest::Approx(-1.0));
  CHECK(r(0, 3) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r(0, 3) == doctest::Approx(oracle::pearson({1, 2, 3}, {1, 3, 2})));
}

TEST_CASE("correlation matrix is symmetric, bounded and affine invariant") {
  SplitMix64 rng(51);
  for (int trial = 0; trial < 30; ++trial) {
    NumericCells a(40), b(40), c(40), c2(40);
    const double slope = 0.1 + rng.uniform() * 10.0, shift = rng.normal() * 100.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.normal();
      b[i] = *a[i] * 0.5 + rng.normal();
      if (rng.uniform() > 0.1) c[i] = rng.normal() - *b[i];
      if (c[i]) c2[i] = *c[i] * slope + shift;
    }
    const Table t({num("a", a), num("b", b), num("c", c)});
    const Table u({num("a", a), num("b", b), num("c", c2)});
    const std::vector<std::string> cols = {"a", "b", "c"};
    const Matrix r = correlation_matrix(t, cols), s = correlation_matrix(u, cols);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(r(i, i) == 1.0);
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(r(i, j) == r(j, i));
        CHECK(std::abs(r(i, j)) <= 1.0);
        CHECK(std::abs(r(i, j) - s(i, j)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("imputation beats column means on a planted table") {
  SynthSpec spec = default_fcd_spec(300, 3);
  spec.missing_rates.clear();
  const Table complete = generate(spec).table;
  std::map<std::string, double> rates;
  for (const auto& c : complete.columns()) {
    if (c.is_numeric() && c.role() == ColumnRole::Independent) rates[c.name()] = 0.1;
  }
  const Table masked = inject_missing(complete, rates, 77);
  const Table imputed = knn_impute(masked);
  double knn_sq = 0.0, mean_sq = 0.0;
  for (const auto& [name, rate] : rates) {
    const auto& truth = complete.column(name).numbers();
    const auto& gaps = masked.column(name);
    const double sd = oracle::sample_std(complete.column(name).present_values());
    const double m = oracle::mean(gaps.present_values());
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (!gaps.is_missing(i)) continue;
      const double k = *imputed.column(name).numbers()[i];
      knn_sq += std::pow((k - *truth[i]) / sd, 2);
      mean_sq += std::pow((m - *truth[i]) / sd, 2);
    }
  }
  CHECK(knn_sq < mean_sq);
}
