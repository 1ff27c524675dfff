#include "tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "csv.hpp"
#include "error.hpp"

namespace cml {

const char* to_string(ColumnKind kind) noexcept {
  switch (kind) {
    case ColumnKind::Numeric: return "numeric";
    case ColumnKind::Categorical: return "categorical";
    case ColumnKind::Identifier: return "identifier";
  }
  return "numeric";
}

const char* to_string(ColumnRole role) noexcept {
  switch (role) {
    case ColumnRole::Independent: return "independent";
    case ColumnRole::Dependent: return "dependent";
    case ColumnRole::Identifier: return "identifier";
  }
  return "independent";
}

ColumnKind parse_kind(std::string_view text) {
  text = csv::trim(text);
  if (text == "numeric") return ColumnKind::Numeric;
  if (text == "categorical") return ColumnKind::Categorical;
  if (text == "identifier") return ColumnKind::Identifier;
  throw Error(ErrorCode::Schema, "unknown column kind '" + std::string(text) + "'");
}

ColumnRole parse_role(std::string_view text) {
  text = csv::trim(text);
  if (text == "independent") return ColumnRole::Independent;
  if (text == "dependent") return ColumnRole::Dependent;
  if (text == "identifier") return ColumnRole::Identifier;
  throw Error(ErrorCode::Schema, "unknown column role '" + std::string(text) + "'");
}

// --- Column ----------------------------------------------------------------

Column::Column(std::string name, ColumnKind kind, ColumnRole role,
               std::variant<NumericCells, TextCells> cells)
    : name_(std::move(name)), kind_(kind), role_(role), cells_(std::move(cells)) {}

Column Column::numeric(std::string name, ColumnRole role, NumericCells cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] && !std::isfinite(*cells[i])) {
      throw Error(ErrorCode::Domain, "non-finite value in column '" + name +
                                         "' at row " + std::to_string(i));
    }
  }
  return Column(std::move(name), ColumnKind::Numeric, role, std::move(cells));
}

Column Column::text(std::string name, ColumnKind kind, ColumnRole role,
                    TextCells cells) {
  if (kind == ColumnKind::Numeric) {
    throw Error(ErrorCode::Kind, "text column '" + name + "' declared numeric");
  }
  return Column(std::move(name), kind, role, std::move(cells));
}

std::size_t Column::size() const noexcept {
  return std::visit([](const auto& cells) { return cells.size(); }, cells_);
}

bool Column::is_missing(std::size_t row) const {
  return std::visit([row](const auto& cells) { return !cells.at(row).has_value(); },
                    cells_);
}

std::size_t Column::present_count() const noexcept {
  return std::visit(
      [](const auto& cells) {
        return static_cast<std::size_t>(std::count_if(
            cells.begin(), cells.end(), [](const auto& c) { return c.has_value(); }));
      },
      cells_);
}

const NumericCells& Column::numbers() const {
  if (const auto* cells = std::get_if<NumericCells>(&cells_)) return *cells;
  throw Error(ErrorCode::Kind, "column '" + name_ + "' is not numeric");
}

const TextCells& Column::texts() const {
  if (const auto* cells = std::get_if<TextCells>(&cells_)) return *cells;
  throw Error(ErrorCode::Kind, "column '" + name_ + "' is not a text column");
}

std::vector<double> Column::present_values() const {
  std::vector<double> values;
  for (const auto& cell : numbers()) {
    if (cell) values.push_back(*cell);
  }
  return values;
}

Column Column::renamed(std::string name) const {
  Column copy = *this;
  copy.name_ = std::move(name);
  return copy;
}

Column Column::with_role(ColumnRole role) const {
  Column copy = *this;
  copy.role_ = role;
  return copy;
}

Column Column::select_rows(std::span<const std::size_t> rows) const {
  return std::visit(
      [&](const auto& cells) {
        std::decay_t<decltype(cells)> picked;
        picked.reserve(rows.size());
        for (std::size_t r : rows) picked.push_back(cells.at(r));
        return Column(name_, kind_, role_, std::move(picked));
      },
      cells_);
}

// --- Table -----------------------------------------------------------------

Table::Table(std::vector<Column> columns) : columns_(std::move(columns)) {
  std::set<std::string, std::less<>> seen;
  row_count_ = columns_.empty() ? 0 : columns_.front().size();
  for (const auto& column : columns_) {
    if (!seen.insert(column.name()).second) {
      throw Error(ErrorCode::Schema, "duplicate column name '" + column.name() + "'");
    }
    if (column.size() != row_count_) {
      throw Error(ErrorCode::Shape, "column '" + column.name() + "' has " +
                                        std::to_string(column.size()) +
                                        " cells, expected " + std::to_string(row_count_));
    }
  }
}

const Column& Table::column(std::size_t index) const {
  if (index >= columns_.size()) {
    throw Error(ErrorCode::Lookup, "column index " + std::to_string(index) + " out of range");
  }
  return columns_[index];
}

const Column& Table::column(std::string_view name) const {
  if (auto index = index_of(name)) return columns_[*index];
  throw Error(ErrorCode::Lookup, "no column named '" + std::string(name) + "'");
}

bool Table::has_column(std::string_view name) const noexcept {
  return index_of(name).has_value();
}

std::optional<std::size_t> Table::index_of(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name() == name) return i;
  }
  return std::nullopt;
}

Schema Table::schema() const {
  Schema schema;
  for (const auto& column : columns_) schema.push_back(column.spec());
  return schema;
}

std::vector<std::string> Table::names_where(ColumnKind kind) const {
  std::vector<std::string> names;
  for (const auto& column : columns_) {
    if (column.kind() == kind) names.push_back(column.name());
  }
  return names;
}

std::vector<std::string> Table::names_where(ColumnRole role) const {
  std::vector<std::string> names;
  for (const auto& column : columns_) {
    if (column.role() == role) names.push_back(column.name());
  }
  return names;
}

Table Table::with_column(Column column) const {
  auto columns = columns_;
  if (auto index = index_of(column.name())) {
    columns[*index] = std::move(column);
  } else {
    columns.push_back(std::move(column));
  }
  return Table(std::move(columns));
}

Table Table::without_columns(std::span<const std::string> names) const {
  std::vector<Column> kept;
  for (const auto& column : columns_) {
    if (std::find(names.begin(), names.end(), column.name()) == names.end()) {
      kept.push_back(column);
    }
  }
  return Table(std::move(kept));
}

Table Table::select_rows(std::span<const std::size_t> rows) const {
  for (std::size_t r : rows) {
    if (r >= row_count_) {
      throw Error(ErrorCode::Lookup, "row " + std::to_string(r) + " out of range");
    }
  }
  std::vector<Column> picked;
  picked.reserve(columns_.size());
  for (const auto& column : columns_) picked.push_back(column.select_rows(rows));
  return Table(std::move(picked));
}

Table Table::select_columns(std::span<const std::string> names) const {
  std::vector<Column> picked;
  for (const auto& name : names) picked.push_back(column(name));
  return Table(std::move(picked));
}

// --- CSV -------------------------------------------------------------------

namespace {

std::optional<double> parse_number(std::string_view text) {
  text = csv::trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size() ||
      !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

bool is_blank_record(const csv::Record& record) {
  return record.size() == 1 && !record[0].quoted && csv::trim(record[0].text).empty();
}

std::vector<csv::Record> data_records(std::vector<csv::Record> records,
                                      std::size_t width) {
  if (width > 1) {
    std::erase_if(records, is_blank_record);
  }
  return records;
}

}  // namespace

Table read_csv(std::string_view text, const Schema& schema) {
  auto records = csv::parse(text);
  if (records.empty()) throw Error(ErrorCode::Schema, "CSV input has no header row");
  const auto& header = records.front();
  for (std::size_t c = 0; c < std::max(header.size(), schema.size()); ++c) {
    if (c >= header.size()) {
      throw Error(ErrorCode::Schema, "header lacks column '" + schema[c].name + "'");
    }
    const std::string name(csv::trim(header[c].text));
    if (c >= schema.size()) {
      throw Error(ErrorCode::Schema, "header column '" + name + "' is not in the schema");
    }
    if (name != schema[c].name) {
      throw Error(ErrorCode::Schema, "header column " + std::to_string(c) + " is '" +
                                         name + "', schema expects '" +
                                         schema[c].name + "'");
    }
  }

  records.erase(records.begin());
  records = data_records(std::move(records), schema.size());
  const std::size_t rows = records.size();
  std::vector<Column> columns;
  columns.reserve(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto& spec = schema[c];
    if (spec.kind == ColumnKind::Numeric) {
      NumericCells cells(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        if (records[r].size() != schema.size()) {
          throw Error(ErrorCode::Parse, "row " + std::to_string(r + 1) + " has " +
                                            std::to_string(records[r].size()) +
                                            " fields, expected " +
                                            std::to_string(schema.size()));
        }
        const auto& field = records[r][c];
        if (!field.quoted && csv::trim(field.text).empty()) continue;
        cells[r] = parse_number(field.text);
        if (!cells[r]) {
          throw Error(ErrorCode::Parse, "row " + std::to_string(r + 1) + ", column '" +
                                            spec.name + "': cannot parse '" +
                                            field.text + "' as a number");
        }
      }
      columns.push_back(Column::numeric(spec.name, spec.role, std::move(cells)));
    } else {
      TextCells cells(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        if (records[r].size() != schema.size()) {
          throw Error(ErrorCode::Parse, "row " + std::to_string(r + 1) + " has " +
                                            std::to_string(records[r].size()) +
                                            " fields, expected " +
                                            std::to_string(schema.size()));
        }
        const auto& field = records[r][c];
        const auto value = csv::trim(field.text);
        if (!field.quoted && value.empty()) continue;
        cells[r] = std::string(value);
      }
      columns.push_back(Column::text(spec.name, spec.kind, spec.role, std::move(cells)));
    }
  }
  if (columns.empty()) return Table();
  return Table(std::move(columns));
}

Table load_csv(const std::string& path, const Schema& schema) {
  return read_csv(csv::read_file(path), schema);
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.column_count(); ++c) {
    if (c) out.push_back(',');
    out += csv::escape(table.column(c).name());
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    for (std::size_t c = 0; c < table.column_count(); ++c) {
      if (c) out.push_back(',');
      const auto& column = table.column(c);
      if (column.is_numeric()) {
        const auto& cell = column.numbers()[r];
        if (cell) out += csv::format_double(*cell);
      } else {
        const auto& cell = column.texts()[r];
        if (cell) out += csv::escape(*cell);
      }
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Table& table, const std::string& path) {
  csv::write_file(path, to_csv(table));
}

Schema read_schema(std::string_view text) {
  const auto records = csv::parse(text);
  if (records.empty()) throw Error(ErrorCode::Schema, "schema file is empty");
  const auto& header = records.front();
  if (header.size() != 3 || csv::trim(header[0].text) != "name" ||
      csv::trim(header[1].text) != "kind" || csv::trim(header[2].text) != "role") {
    throw Error(ErrorCode::Schema, "schema header must be 'name,kind,role'");
  }
  Schema schema;
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (is_blank_record(records[r])) continue;
    if (records[r].size() != 3) {
      throw Error(ErrorCode::Schema, "schema line " + std::to_string(r + 1) +
                                         " must have three fields");
    }
    schema.push_back({std::string(csv::trim(records[r][0].text)),
                      parse_kind(records[r][1].text), parse_role(records[r][2].text)});
  }
  return schema;
}

Schema load_schema(const std::string& path) { return read_schema(csv::read_file(path)); }

std::string schema_to_csv(const Schema& schema) {
  std::string out = "name,kind,role\n";
  for (const auto& spec : schema) {
    out += csv::escape(spec.name) + "," + to_string(spec.kind) + "," +
           to_string(spec.role) + "\n";
  }
  return out;
}

Schema infer_schema(std::string_view csv_text, std::span<const std::string> dependents) {
  const auto records = csv::parse(csv_text);
  if (records.empty()) throw Error(ErrorCode::Schema, "CSV input has no header row");
  const auto& header = records.front();
  Schema schema;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name(csv::trim(header[c].text));
    ColumnSpec spec{name, ColumnKind::Numeric, ColumnRole::Independent};
    const bool identifier = name == "campaign" || name == "row_id" || name == "id" ||
                            (name.size() > 3 && name.ends_with("_id"));
    if (identifier) {
      spec.kind = ColumnKind::Identifier;
      spec.role = ColumnRole::Identifier;
    } else if (name.find("categories") != std::string::npos ||
               name.find("type") != std::string::npos) {
      spec.kind = ColumnKind::Categorical;
    } else if (name.find("total") != std::string::npos) {
      spec.kind = ColumnKind::Numeric;
    } else {
      bool all_numeric = true;
      for (std::size_t r = 1; r < records.size() && all_numeric; ++r) {
        if (c >= records[r].size()) continue;
        const auto& field = records[r][c];
        if (!field.quoted && csv::trim(field.text).empty()) continue;
        all_numeric = parse_number(field.text).has_value();
      }
      spec.kind = all_numeric ? ColumnKind::Numeric : ColumnKind::Categorical;
    }
    if (!identifier &&
        std::find(dependents.begin(), dependents.end(), name) != dependents.end()) {
      spec.role = ColumnRole::Dependent;
    }
    schema.push_back(std::move(spec));
  }
  return schema;
}

std::string schema_sidecar_path(const std::string& csv_path) {
  std::string base = csv_path;
  if (base.ends_with(".csv")) base.resize(base.size() - 4);
  return base + ".schema.csv";
}

Table load_csv_auto(const std::string& path, std::span<const std::string> dependents) {
  const auto text = csv::read_file(path);
  const auto sidecar = schema_sidecar_path(path);
  if (std::filesystem::exists(sidecar)) return read_csv(text, load_schema(sidecar));
  return read_csv(text, infer_schema(text, dependents));
}

void write_csv_with_schema(const Table& table, const std::string& path) {
  write_csv(table, path);
  csv::write_file(schema_sidecar_path(path), schema_to_csv(table.schema()));
}

// --- statistics ------------------------------------------------------------

namespace {

struct Moments {
  double n = 0, mean = 0, m2 = 0, m3 = 0, m4 = 0;
};

Moments central_moments(std::span<const double> values) {
  Moments m;
  m.n = static_cast<double>(values.size());
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / m.n;
  for (double v : values) {
    const double d = v - m.mean;
    const double d2 = d * d;
    m.m2 += d2;
    m.m3 += d2 * d;
    m.m4 += d2 * d2;
  }
  m.m2 /= m.n;
  m.m3 /= m.n;
  m.m4 /= m.n;
  return m;
}

void require_non_constant(std::span<const double> values, std::string_view name) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) {
    throw Error(ErrorCode::UndefinedMoments,
                "column '" + std::string(name) + "' is constant; moments are undefined");
  }
}

}  // namespace

ColumnStats compute_stats(std::span<const double> values, std::string name) {
  if (values.size() < 2) {
    throw Error(ErrorCode::InsufficientData,
                "column '" + name + "' needs at least 2 present values, has " +
                    std::to_string(values.size()));
  }
  require_non_constant(values, name);
  const Moments m = central_moments(values);
  ColumnStats stats;
  stats.name = std::move(name);
  stats.count_present = values.size();
  stats.mean = m.mean;
  stats.std_sample = std::sqrt(m.m2 * m.n / (m.n - 1.0));
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  stats.min = *lo;
  stats.max = *hi;
  stats.skewness_population = m.m3 / std::pow(m.m2, 1.5);
  stats.kurtosis_population = m.m4 / (m.m2 * m.m2);
  if (values.size() >= 3) {
    stats.skewness_sample =
        stats.skewness_population * std::sqrt(m.n * (m.n - 1.0)) / (m.n - 2.0);
  }
  if (values.size() >= 4) {
    const double g2 = stats.kurtosis_population - 3.0;
    stats.kurtosis_excess_sample =
        (m.n - 1.0) / ((m.n - 2.0) * (m.n - 3.0)) * ((m.n + 1.0) * g2 + 6.0);
  }
  return stats;
}

ColumnStats column_stats(const Table& table, std::string_view name) {
  const auto& column = table.column(name);
  if (!column.is_numeric()) {
    throw Error(ErrorCode::Kind, "column '" + column.name() + "' is not numeric");
  }
  const auto values = column.present_values();
  return compute_stats(values, column.name());
}

double sample_skewness(std::span<const double> values) {
  if (values.size() < 3) {
    throw Error(ErrorCode::InsufficientData, "sample skewness needs at least 3 values");
  }
  return *compute_stats(values).skewness_sample;
}

double sample_excess_kurtosis(std::span<const double> values) {
  if (values.size() < 4) {
    throw Error(ErrorCode::InsufficientData,
                "sample excess kurtosis needs at least 4 values");
  }
  return *compute_stats(values).kurtosis_excess_sample;
}

std::string stats_to_csv(std::span<const ColumnStats> stats) {
  std::string out =
      "name,count_present,mean,std_sample,min,max,skewness_population,"
      "skewness_sample,kurtosis_population,kurtosis_excess_sample\n";
  const auto opt = [](const std::optional<double>& v) {
    return v ? csv::format_double(*v) : std::string();
  };
  for (const auto& s : stats) {
    out += csv::escape(s.name) + "," + std::to_string(s.count_present) + "," +
           csv::format_double(s.mean) + "," + csv::format_double(s.std_sample) + "," +
           csv::format_double(s.min) + "," + csv::format_double(s.max) + "," +
           csv::format_double(s.skewness_population) + "," + opt(s.skewness_sample) +
           "," + csv::format_double(s.kurtosis_population) + "," +
           opt(s.kurtosis_excess_sample) + "\n";
  }
  return out;
}

std::size_t record_count_for_target(const Table& table, std::string_view dependent) {
  return table.column(dependent).present_count();
}

}  // namespace cml
