#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "tabular.hpp"

namespace cml {

// --- label encoding --------------------------------------------------------

// Category text -> code, codes 0..n-1 in lexicographic (byte) order.
struct EncodingMap {
  std::string column;
  std::vector<std::string> categories;  // index == code

  int code_of(std::string_view category) const;  // throws Lookup
  const std::string& decode(int code) const;      // throws Lookup
};

struct EncodeResult {
  Table table;
  std::vector<EncodingMap> maps;
};

EncodeResult encode_labels(const Table& table, std::span<const std::string> columns);
// Codes not covered by a map throw Lookup.
Table apply_encoding(const Table& table, std::span<const EncodingMap> maps);
// Turns encoded numeric columns back into categorical text columns. Codes
// must be integral.
Table decode_labels(const Table& table, std::span<const EncodingMap> maps);

// --- standardization -------------------------------------------------------

struct Standardization {
  std::string column;
  double mean = 0.0;
  double std_sample = 1.0;
};

struct StandardizeResult {
  Table table;
  std::vector<Standardization> params;
};

StandardizeResult standardize(const Table& table, std::span<const std::string> columns);
Table apply_standardization(const Table& table, std::span<const Standardization> params);
Table unstandardize(const Table& table, std::span<const Standardization> params);

// --- quantile trimming -----------------------------------------------------

// Linear interpolation between order statistics (R type 7) on sorted data.
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::vector<double> values, double p);

enum class TrimMode { Drop, Winsorize };

struct TrimBounds {
  std::string column;
  double lower = 0.0;
  double upper = 0.0;
  double fraction = 0.1;
};

struct TrimResult {
  Table table;
  std::vector<TrimBounds> bounds;
  std::vector<std::size_t> kept_rows;  // indices into the input table
};

// Applies the columns in order, each against the already-filtered table.
// Drop removes rows whose present cell lies strictly outside
// [q_fraction, q_(1-fraction)]; rows missing that cell are kept. Winsorize
// clips instead and keeps every row.
TrimResult trim_outliers(const Table& table, std::span<const std::string> columns,
                         double fraction = 0.10, TrimMode mode = TrimMode::Drop);

// --- k-NN imputation -------------------------------------------------------

struct ImputeConfig {
  std::size_t k = 5;
  // Numeric columns holding label codes; these take the neighbour mode
  // instead of the mean. Categorical columns always take the mode.
  std::vector<std::string> mode_columns;
};

// Fills missing cells in every non-identifier column from the k nearest
// donor rows. Distances use standardized numeric features (label codes as
// is) and the nan-aware Euclidean form sqrt(D / D_obs * sum of squares over
// co-observed features). Ties in distance go to the lower row index; mode
// ties go to the lexicographically smallest category.
Table knn_impute(const Table& table, const ImputeConfig& config = {});

// Feature matrix used for imputation distances (NaN marks missing) and the
// nan-aware distance itself; exposed for tests and diagnostics.
Matrix imputation_features(const Table& table, std::span<const std::string> columns);
double nan_euclidean(std::span<const double> a, std::span<const double> b);

// --- correlation -----------------------------------------------------------

// Pairwise Pearson correlation over co-present rows. Symmetric, unit
// diagonal, entries clamped to [-1, 1].
Matrix correlation_matrix(const Table& table, std::span<const std::string> columns);

// --- manifest text ---------------------------------------------------------

std::string encodings_to_text(std::span<const EncodingMap> maps);
std::string standardization_to_text(std::span<const Standardization> params);
std::string trim_bounds_to_text(std::span<const TrimBounds> bounds);

}  // namespace cml
