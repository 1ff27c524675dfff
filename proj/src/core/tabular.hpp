#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cml {

enum class ColumnKind { Numeric, Categorical, Identifier };
enum class ColumnRole { Independent, Dependent, Identifier };

const char* to_string(ColumnKind kind) noexcept;
const char* to_string(ColumnRole role) noexcept;
ColumnKind parse_kind(std::string_view text);
ColumnRole parse_role(std::string_view text);

using NumericCells = std::vector<std::optional<double>>;
using TextCells = std::vector<std::optional<std::string>>;

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  ColumnRole role = ColumnRole::Independent;

  bool operator==(const ColumnSpec&) const = default;
};

using Schema = std::vector<ColumnSpec>;

// A named column of optional cells. Numeric columns hold doubles; categorical
// and identifier columns hold text. Missing cells are std::nullopt.
class Column {
 public:
  static Column numeric(std::string name, ColumnRole role, NumericCells cells);
  static Column text(std::string name, ColumnKind kind, ColumnRole role,
                     TextCells cells);

  const std::string& name() const noexcept { return name_; }
  ColumnKind kind() const noexcept { return kind_; }
  ColumnRole role() const noexcept { return role_; }
  ColumnSpec spec() const { return {name_, kind_, role_}; }
  bool is_numeric() const noexcept { return kind_ == ColumnKind::Numeric; }

  std::size_t size() const noexcept;
  bool is_missing(std::size_t row) const;
  std::size_t present_count() const noexcept;

  // Throw Kind when the column holds the other representation.
  const NumericCells& numbers() const;
  const TextCells& texts() const;

  // Present numeric values in row order.
  std::vector<double> present_values() const;

  Column renamed(std::string name) const;
  Column with_role(ColumnRole role) const;
  Column select_rows(std::span<const std::size_t> rows) const;

 private:
  Column(std::string name, ColumnKind kind, ColumnRole role,
         std::variant<NumericCells, TextCells> cells);

  std::string name_;
  ColumnKind kind_;
  ColumnRole role_;
  std::variant<NumericCells, TextCells> cells_;
};

// Immutable column-oriented table. Column names are unique and every column
// has row_count() cells.
class Table {
 public:
  Table() = default;
  explicit Table(std::vector<Column> columns);

  std::size_t row_count() const noexcept { return row_count_; }
  std::size_t column_count() const noexcept { return columns_.size(); }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Column& column(std::size_t index) const;
  const Column& column(std::string_view name) const;
  bool has_column(std::string_view name) const noexcept;
  std::optional<std::size_t> index_of(std::string_view name) const noexcept;
  Schema schema() const;

  std::vector<std::string> names_where(ColumnKind kind) const;
  std::vector<std::string> names_where(ColumnRole role) const;

  Table with_column(Column column) const;  // replaces by name or appends
  Table without_columns(std::span<const std::string> names) const;
  Table select_rows(std::span<const std::size_t> rows) const;
  Table select_columns(std::span<const std::string> names) const;

 private:
  std::vector<Column> columns_;
  std::size_t row_count_ = 0;
};

// --- CSV ingestion ---------------------------------------------------------

Table read_csv(std::string_view text, const Schema& schema);
Table load_csv(const std::string& path, const Schema& schema);
std::string to_csv(const Table& table);
void write_csv(const Table& table, const std::string& path);

// Schema files are CSV with a `name,kind,role` header.
Schema read_schema(std::string_view text);
Schema load_schema(const std::string& path);
std::string schema_to_csv(const Schema& schema);

// Kinds from the column naming convention ("categories"/"type" mark
// categoricals, "total" marks numerics), falling back to whether every
// present value parses as a number. `campaign`, `row_id`, `id` and names
// ending in `_id` are identifiers. Names listed in `dependents` get the
// Dependent role.
Schema infer_schema(std::string_view csv_text,
                    std::span<const std::string> dependents = {});

// Schema-less load: uses `<path minus .csv>.schema.csv` when it exists,
// otherwise infer_schema.
Table load_csv_auto(const std::string& path,
                    std::span<const std::string> dependents = {});
std::string schema_sidecar_path(const std::string& csv_path);
// write_csv plus the schema sidecar.
void write_csv_with_schema(const Table& table, const std::string& path);

// --- moment statistics -----------------------------------------------------

struct ColumnStats {
  std::string name;
  std::size_t count_present = 0;
  double mean = 0.0;
  double std_sample = 0.0;
  double min = 0.0;
  double max = 0.0;
  double skewness_population = 0.0;
  std::optional<double> skewness_sample;         // needs n >= 3
  double kurtosis_population = 0.0;
  std::optional<double> kurtosis_excess_sample;  // needs n >= 4
};

// Population skewness m3/m2^1.5 and kurtosis m4/m2^2 use n-denominator
// central moments; the sample-adjusted skewness (G1) and excess kurtosis
// (G2) are the usual bias-corrected estimators. Throws InsufficientData for
// fewer than two values and UndefinedMoments for a constant sample.
ColumnStats compute_stats(std::span<const double> values, std::string name = {});
ColumnStats column_stats(const Table& table, std::string_view name);

double sample_skewness(std::span<const double> values);
double sample_excess_kurtosis(std::span<const double> values);

std::string stats_to_csv(std::span<const ColumnStats> stats);

// Rows whose `dependent` cell is present.
std::size_t record_count_for_target(const Table& table, std::string_view dependent);

}  // namespace cml
