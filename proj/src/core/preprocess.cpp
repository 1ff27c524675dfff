#include "preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "csv.hpp"
#include "error.hpp"

namespace cml {

// --- label encoding --------------------------------------------------------

int EncodingMap::code_of(std::string_view category) const {
  const auto it = std::lower_bound(categories.begin(), categories.end(), category);
  if (it == categories.end() || *it != category) {
    throw Error(ErrorCode::Lookup, "category '" + std::string(category) +
                                       "' is not in the encoding for '" + column + "'");
  }
  return static_cast<int>(it - categories.begin());
}

const std::string& EncodingMap::decode(int code) const {
  if (code < 0 || static_cast<std::size_t>(code) >= categories.size()) {
    throw Error(ErrorCode::Lookup, "code " + std::to_string(code) +
                                       " is not in the encoding for '" + column + "'");
  }
  return categories[static_cast<std::size_t>(code)];
}

namespace {

Column encode_column(const Column& column, const EncodingMap& map) {
  NumericCells codes(column.size());
  const auto& texts = column.texts();
  for (std::size_t r = 0; r < texts.size(); ++r) {
    if (texts[r]) codes[r] = static_cast<double>(map.code_of(*texts[r]));
  }
  return Column::numeric(column.name(), column.role(), std::move(codes));
}

}  // namespace

EncodeResult encode_labels(const Table& table, std::span<const std::string> columns) {
  EncodeResult result{table, {}};
  for (const auto& name : columns) {
    const auto& column = table.column(name);
    if (column.kind() != ColumnKind::Categorical) {
      throw Error(ErrorCode::Kind, "column '" + name + "' is " + to_string(column.kind()) +
                                       ", label encoding needs a categorical column");
    }
    std::set<std::string> distinct;
    for (const auto& cell : column.texts()) {
      if (cell) distinct.insert(*cell);
    }
    EncodingMap map{name, {distinct.begin(), distinct.end()}};
    result.table = result.table.with_column(encode_column(column, map));
    result.maps.push_back(std::move(map));
  }
  return result;
}

Table apply_encoding(const Table& table, std::span<const EncodingMap> maps) {
  Table out = table;
  for (const auto& map : maps) {
    const auto& column = table.column(map.column);
    if (column.kind() != ColumnKind::Categorical) {
      throw Error(ErrorCode::Kind, "column '" + map.column + "' is not categorical");
    }
    out = out.with_column(encode_column(column, map));
  }
  return out;
}

Table decode_labels(const Table& table, std::span<const EncodingMap> maps) {
  Table out = table;
  for (const auto& map : maps) {
    const auto& column = table.column(map.column);
    const auto& codes = column.numbers();
    TextCells texts(codes.size());
    for (std::size_t r = 0; r < codes.size(); ++r) {
      if (!codes[r]) continue;
      const double code = *codes[r];
      if (code != std::floor(code)) {
        throw Error(ErrorCode::Lookup, "non-integral code in column '" + map.column + "'");
      }
      texts[r] = map.decode(static_cast<int>(code));
    }
    out = out.with_column(Column::text(map.column, ColumnKind::Categorical, column.role(),
                                       std::move(texts)));
  }
  return out;
}

// --- standardization -------------------------------------------------------

namespace {

Column transform_column(const Column& column, double shift, double scale, bool forward) {
  NumericCells cells = column.numbers();
  for (auto& cell : cells) {
    if (!cell) continue;
    *cell = forward ? (*cell - shift) / scale : *cell * scale + shift;
  }
  return Column::numeric(column.name(), column.role(), std::move(cells));
}

}  // namespace

StandardizeResult standardize(const Table& table, std::span<const std::string> columns) {
  StandardizeResult result{table, {}};
  for (const auto& name : columns) {
    const auto& column = table.column(name);
    if (!column.is_numeric()) {
      throw Error(ErrorCode::Kind, "column '" + name + "' is not numeric");
    }
    const auto values = column.present_values();
    if (values.size() < 2) {
      throw Error(ErrorCode::InsufficientData,
                  "column '" + name + "' needs at least 2 present values to standardize");
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*lo == *hi) {
      throw Error(ErrorCode::ConstantColumn,
                  "column '" + name + "' is constant and cannot be standardized");
    }
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    Standardization param{name, mean, std::sqrt(ss / (n - 1.0))};
    result.table = result.table.with_column(
        transform_column(column, param.mean, param.std_sample, true));
    result.params.push_back(std::move(param));
  }
  return result;
}

Table apply_standardization(const Table& table, std::span<const Standardization> params) {
  Table out = table;
  for (const auto& p : params) {
    out = out.with_column(transform_column(table.column(p.column), p.mean, p.std_sample, true));
  }
  return out;
}

Table unstandardize(const Table& table, std::span<const Standardization> params) {
  Table out = table;
  for (const auto& p : params) {
    out = out.with_column(
        transform_column(table.column(p.column), p.mean, p.std_sample, false));
  }
  return out;
}

// --- quantiles and trimming ------------------------------------------------

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::InsufficientData, "quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::Domain, "quantile level outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

TrimResult trim_outliers(const Table& table, std::span<const std::string> columns,
                         double fraction, TrimMode mode) {
  if (!(fraction > 0.0 && fraction < 0.5)) {
    throw Error(ErrorCode::Domain, "trim fraction must lie in (0, 0.5)");
  }
  TrimResult result{table, {}, {}};
  result.kept_rows.resize(table.row_count());
  std::iota(result.kept_rows.begin(), result.kept_rows.end(), std::size_t{0});

  for (const auto& name : columns) {
    const auto& column = result.table.column(name);
    if (!column.is_numeric()) {
      throw Error(ErrorCode::Kind, "column '" + name + "' is not numeric");
    }
    auto values = column.present_values();
    if (values.empty()) {
      throw Error(ErrorCode::InsufficientData,
                  "column '" + name + "' has no present values left to trim");
    }
    std::sort(values.begin(), values.end());
    TrimBounds bounds{name, quantile_sorted(values, fraction),
                      quantile_sorted(values, 1.0 - fraction), fraction};
    const auto& cells = column.numbers();
    if (mode == TrimMode::Drop) {
      std::vector<std::size_t> keep;
      std::vector<std::size_t> kept_source;
      for (std::size_t r = 0; r < cells.size(); ++r) {
        if (!cells[r] || (*cells[r] >= bounds.lower && *cells[r] <= bounds.upper)) {
          keep.push_back(r);
          kept_source.push_back(result.kept_rows[r]);
        }
      }
      result.table = result.table.select_rows(keep);
      result.kept_rows = std::move(kept_source);
    } else {
      NumericCells clipped = cells;
      for (auto& cell : clipped) {
        if (cell) *cell = std::clamp(*cell, bounds.lower, bounds.upper);
      }
      result.table =
          result.table.with_column(Column::numeric(name, column.role(), std::move(clipped)));
    }
    result.bounds.push_back(std::move(bounds));
  }
  return result;
}

// --- k-NN imputation -------------------------------------------------------

double nan_euclidean(std::span<const double> a, std::span<const double> b) {
  std::size_t observed = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    const double d = a[i] - b[i];
    sum += d * d;
    ++observed;
  }
  if (observed == 0) return std::numeric_limits<double>::infinity();
  return std::sqrt(static_cast<double>(a.size()) / static_cast<double>(observed) * sum);
}

namespace {

bool is_mode_column(const Column& column, const ImputeConfig& config) {
  return !column.is_numeric() ||
         std::find(config.mode_columns.begin(), config.mode_columns.end(), column.name()) !=
             config.mode_columns.end();
}

std::vector<std::string> impute_columns(const Table& table) {
  std::vector<std::string> names;
  for (const auto& column : table.columns()) {
    if (column.kind() != ColumnKind::Identifier) names.push_back(column.name());
  }
  return names;
}

Matrix build_features(const Table& table, std::span<const std::string> columns,
                      const ImputeConfig& config) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  Matrix features(table.row_count(), columns.size(), nan);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& column = table.column(columns[c]);
    if (!column.is_numeric()) {
      std::set<std::string> distinct;
      for (const auto& cell : column.texts()) {
        if (cell) distinct.insert(*cell);
      }
      const std::vector<std::string> sorted(distinct.begin(), distinct.end());
      const auto& texts = column.texts();
      for (std::size_t r = 0; r < texts.size(); ++r) {
        if (!texts[r]) continue;
        features(r, c) = static_cast<double>(
            std::lower_bound(sorted.begin(), sorted.end(), *texts[r]) - sorted.begin());
      }
      continue;
    }
    const auto& cells = column.numbers();
    double shift = 0.0;
    double scale = 1.0;
    if (!is_mode_column(column, config)) {
      const auto values = column.present_values();
      const double n = static_cast<double>(values.size());
      if (!values.empty()) shift = std::accumulate(values.begin(), values.end(), 0.0) / n;
      if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - shift) * (v - shift);
        const double sd = std::sqrt(ss / (n - 1.0));
        if (sd > 0.0) scale = sd;
      }
    }
    for (std::size_t r = 0; r < cells.size(); ++r) {
      if (cells[r]) features(r, c) = (*cells[r] - shift) / scale;
    }
  }
  return features;
}

}  // namespace

Matrix imputation_features(const Table& table, std::span<const std::string> columns) {
  return build_features(table, columns, ImputeConfig{});
}

Table knn_impute(const Table& table, const ImputeConfig& config) {
  if (config.k == 0) throw Error(ErrorCode::Domain, "imputation k must be positive");
  const auto columns = impute_columns(table);
  for (const auto& name : columns) {
    if (table.column(name).present_count() == 0) {
      throw Error(ErrorCode::Unimputable,
                  "column '" + name + "' is entirely missing and cannot be imputed");
    }
  }
  const std::size_t n = table.row_count();
  bool any_missing = false;
  for (const auto& name : columns) {
    any_missing = any_missing || table.column(name).present_count() < n;
  }
  if (!any_missing) return table;
  if (n < config.k + 1) {
    throw Error(ErrorCode::InsufficientData, "k-NN imputation with k=" +
                                                 std::to_string(config.k) + " needs at least " +
                                                 std::to_string(config.k + 1) + " rows");
  }

  const Matrix features = build_features(table, columns, config);

  // Filled values per column, applied after every row is processed so donors
  // only ever contribute originally observed cells.
  std::vector<NumericCells> numeric_fill(columns.size());
  std::vector<TextCells> text_fill(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& column = table.column(columns[c]);
    if (column.is_numeric()) {
      numeric_fill[c] = column.numbers();
    } else {
      text_fill[c] = column.texts();
    }
  }

  std::vector<double> distance(n);
  std::vector<std::size_t> donors;
  for (std::size_t i = 0; i < n; ++i) {
    bool row_incomplete = false;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      row_incomplete = row_incomplete || std::isnan(features(i, c));
    }
    if (!row_incomplete) continue;

    for (std::size_t j = 0; j < n; ++j) {
      distance[j] = j == i ? std::numeric_limits<double>::infinity()
                           : nan_euclidean(features.row(i), features.row(j));
    }

    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (!std::isnan(features(i, c))) continue;
      donors.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && !std::isnan(features(j, c)) && std::isfinite(distance[j])) {
          donors.push_back(j);
        }
      }
      if (donors.empty()) {
        throw Error(ErrorCode::Unimputable,
                    "row " + std::to_string(i) +
                        " shares no observed feature with any donor for column '" +
                        columns[c] + "'");
      }
      const std::size_t take = std::min(config.k, donors.size());
      std::partial_sort(donors.begin(), donors.begin() + static_cast<std::ptrdiff_t>(take),
                        donors.end(), [&](std::size_t a, std::size_t b) {
                          return distance[a] < distance[b] ||
                                 (distance[a] == distance[b] && a < b);
                        });
      donors.resize(take);

      const auto& column = table.column(columns[c]);
      if (!column.is_numeric()) {
        std::map<std::string, std::size_t> votes;
        for (std::size_t j : donors) ++votes[*column.texts()[j]];
        auto best = votes.begin();
        for (auto it = votes.begin(); it != votes.end(); ++it) {
          if (it->second > best->second) best = it;
        }
        text_fill[c][i] = best->first;
      } else if (is_mode_column(column, config)) {
        std::map<double, std::size_t> votes;
        for (std::size_t j : donors) ++votes[*column.numbers()[j]];
        auto best = votes.begin();
        for (auto it = votes.begin(); it != votes.end(); ++it) {
          if (it->second > best->second) best = it;
        }
        numeric_fill[c][i] = best->first;
      } else {
        double sum = 0.0;
        for (std::size_t j : donors) sum += *column.numbers()[j];
        numeric_fill[c][i] = sum / static_cast<double>(donors.size());
      }
    }
  }

  Table out = table;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& column = table.column(columns[c]);
    if (column.is_numeric()) {
      out = out.with_column(
          Column::numeric(column.name(), column.role(), std::move(numeric_fill[c])));
    } else {
      out = out.with_column(Column::text(column.name(), column.kind(), column.role(),
                                         std::move(text_fill[c])));
    }
  }
  return out;
}

// --- correlation -----------------------------------------------------------

Matrix correlation_matrix(const Table& table, std::span<const std::string> columns) {
  std::vector<const NumericCells*> cells;
  for (const auto& name : columns) {
    const auto& column = table.column(name);
    if (!column.is_numeric()) {
      throw Error(ErrorCode::Kind, "column '" + name + "' is not numeric; encode it first");
    }
    cells.push_back(&column.numbers());
  }
  const std::size_t p = columns.size();
  Matrix r(p, p);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a; b < p; ++b) {
      std::vector<double> xs, ys;
      for (std::size_t row = 0; row < table.row_count(); ++row) {
        const auto& x = (*cells[a])[row];
        const auto& y = (*cells[b])[row];
        if (x && y) {
          xs.push_back(*x);
          ys.push_back(*y);
        }
      }
      const std::string pair = "'" + columns[a] + "' and '" + columns[b] + "'";
      if (xs.size() < 2) {
        throw Error(ErrorCode::InsufficientData,
                    "fewer than 2 co-present rows for " + pair);
      }
      const auto [xlo, xhi] = std::minmax_element(xs.begin(), xs.end());
      const auto [ylo, yhi] = std::minmax_element(ys.begin(), ys.end());
      if (*xlo == *xhi || *ylo == *yhi) {
        throw Error(ErrorCode::UndefinedCorrelation,
                    "zero variance in the co-present sample of " + pair);
      }
      if (a == b) {
        r(a, a) = 1.0;
        continue;
      }
      const double n = static_cast<double>(xs.size());
      const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
      const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
      double sxy = 0.0, sxx = 0.0, syy = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
      }
      const double value = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
      r(a, b) = value;
      r(b, a) = value;
    }
  }
  return r;
}

// --- manifest text ---------------------------------------------------------

std::string encodings_to_text(std::span<const EncodingMap> maps) {
  std::string out;
  for (const auto& map : maps) {
    for (std::size_t code = 0; code < map.categories.size(); ++code) {
      out += csv::escape(map.column) + "," + std::to_string(code) + "," +
             csv::escape(map.categories[code], true) + "\n";
    }
  }
  return out;
}

std::string standardization_to_text(std::span<const Standardization> params) {
  std::string out;
  for (const auto& p : params) {
    out += csv::escape(p.column) + "," + csv::format_significant(p.mean, 17) + "," +
           csv::format_significant(p.std_sample, 17) + "\n";
  }
  return out;
}

std::string trim_bounds_to_text(std::span<const TrimBounds> bounds) {
  std::string out;
  for (const auto& b : bounds) {
    out += csv::escape(b.column) + "," + csv::format_significant(b.lower, 17) + "," +
           csv::format_significant(b.upper, 17) + "," + csv::format_double(b.fraction) + "\n";
  }
  return out;
}

}  // namespace cml
