#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "csv.hpp"
#include "error.hpp"

namespace cml {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw Error(ErrorCode::Config, "config key '" + std::string(key) + "': '" + std::string(value) +
                                     "' is not " + expected);
}

template <class T>
T parse_unsigned(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) {
    bad_value(key, value, "a non-negative integer");
  }
  return out;
}

int parse_int(std::string_view key, std::string_view value) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) {
    bad_value(key, value, "an integer");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty() ||
      !std::isfinite(out)) {
    bad_value(key, value, "a finite number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "a boolean");
}

std::string one_of(std::string_view key, std::string_view value,
                   std::initializer_list<const char*> options) {
  for (const char* option : options) {
    if (value == option) return std::string(value);
  }
  std::string expected = "one of";
  for (const char* option : options) expected += std::string(" ") + option;
  throw Error(ErrorCode::Config, "config key '" + std::string(key) + "': '" + std::string(value) +
                                     "' is not " + expected);
}

void require_range(bool ok, std::string_view key, const std::string& message) {
  if (!ok) throw Error(ErrorCode::Range, "config key '" + std::string(key) + "' " + message);
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const auto piece =
        csv::trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += items[i];
  }
  return out;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "input_path",     "schema_path",   "seed",          "dependent",
      "stage_order",    "impute_k",      "trim_fraction", "trim_mode",
      "variance_threshold", "pca_raw",   "k",             "k_min",
      "k_max",          "cluster_space", "restarts",      "max_iter",
      "tol",            "init",          "threads",       "summary_m",
      "nearest_m",      "compare_column", "compare_high", "compare_low",
      "bins",           "labels_path",   "points_path",   "assignments_path",
      "pred_path",      "true_path",     "synth_spec",    "synth_rows",
  };
  return keys;
}

void RunConfig::set(std::string_view key, std::string_view raw) {
  const std::string_view value = csv::trim(raw);
  if (key == "input_path") {
    input_path = value;
  } else if (key == "schema_path") {
    schema_path = value;
  } else if (key == "output_dir") {
    output_dir = value;
  } else if (key == "seed") {
    seed = parse_unsigned<std::uint64_t>(key, value);
  } else if (key == "dependent") {
    if (value.empty()) bad_value(key, value, "a column name");
    dependent = value;
  } else if (key == "stage_order") {
    stage_order = split_list(value);
  } else if (key == "impute_k") {
    impute_k = parse_unsigned<std::size_t>(key, value);
    require_range(impute_k >= 1, key, "must be at least 1");
  } else if (key == "trim_fraction") {
    trim_fraction = parse_real(key, value);
    require_range(trim_fraction > 0.0 && trim_fraction < 0.5, key, "must lie in (0, 0.5)");
  } else if (key == "trim_mode") {
    trim_mode = one_of(key, value, {"drop", "winsorize"});
  } else if (key == "variance_threshold") {
    variance_threshold = parse_real(key, value);
    require_range(variance_threshold > 0.0 && variance_threshold <= 1.0, key,
                  "must lie in (0, 1]");
  } else if (key == "pca_raw") {
    pca_raw = parse_bool(key, value);
  } else if (key == "k") {
    if (value == "auto") {
      k.reset();
    } else {
      k = parse_unsigned<std::size_t>(key, value);
      require_range(*k >= 1, key, "must be at least 1 or 'auto'");
    }
  } else if (key == "k_min") {
    k_min = parse_unsigned<std::size_t>(key, value);
    require_range(k_min >= 1, key, "must be at least 1");
  } else if (key == "k_max") {
    k_max = parse_unsigned<std::size_t>(key, value);
    require_range(k_max >= 2, key, "must be at least 2");
  } else if (key == "cluster_space") {
    cluster_space = one_of(key, value, {"pca", "full"});
  } else if (key == "restarts") {
    restarts = parse_int(key, value);
    require_range(restarts >= 1, key, "must be at least 1");
  } else if (key == "max_iter") {
    max_iter = parse_int(key, value);
    require_range(max_iter >= 1, key, "must be at least 1");
  } else if (key == "tol") {
    tol = parse_real(key, value);
    require_range(tol >= 0.0, key, "must be non-negative");
  } else if (key == "init") {
    init = one_of(key, value, {"random", "plusplus"});
  } else if (key == "threads") {
    threads = parse_unsigned<unsigned>(key, value);
    require_range(threads >= 1, key, "must be at least 1");
  } else if (key == "summary_m") {
    summary_m = parse_unsigned<std::size_t>(key, value);
    require_range(summary_m >= 1, key, "must be at least 1");
  } else if (key == "nearest_m") {
    nearest_m = parse_unsigned<std::size_t>(key, value);
    require_range(nearest_m >= 1, key, "must be at least 1");
  } else if (key == "compare_column") {
    compare_column = value;
  } else if (key == "compare_high") {
    compare_high = value;
  } else if (key == "compare_low") {
    compare_low = value;
  } else if (key == "bins") {
    bins = parse_unsigned<std::size_t>(key, value);
    require_range(bins >= 1, key, "must be at least 1");
  } else if (key == "labels_path") {
    labels_path = value;
  } else if (key == "points_path") {
    points_path = value;
  } else if (key == "assignments_path") {
    assignments_path = value;
  } else if (key == "pred_path") {
    pred_path = value;
  } else if (key == "true_path") {
    true_path = value;
  } else if (key == "synth_spec") {
    synth_spec = value;
  } else if (key == "synth_rows") {
    synth_rows = parse_unsigned<std::size_t>(key, value);
    require_range(synth_rows >= 1, key, "must be at least 1");
  } else {
    throw Error(ErrorCode::Config, "unknown config key '" + std::string(key) + "'");
  }
}

std::string RunConfig::get(std::string_view key) const {
  if (key == "input_path") return input_path;
  if (key == "schema_path") return schema_path;
  if (key == "output_dir") return output_dir;
  if (key == "seed") return std::to_string(seed);
  if (key == "dependent") return dependent;
  if (key == "stage_order") return join(stage_order);
  if (key == "impute_k") return std::to_string(impute_k);
  if (key == "trim_fraction") return csv::format_double(trim_fraction);
  if (key == "trim_mode") return trim_mode;
  if (key == "variance_threshold") return csv::format_double(variance_threshold);
  if (key == "pca_raw") return pca_raw ? "true" : "false";
  if (key == "k") return k ? std::to_string(*k) : "auto";
  if (key == "k_min") return std::to_string(k_min);
  if (key == "k_max") return std::to_string(k_max);
  if (key == "cluster_space") return cluster_space;
  if (key == "restarts") return std::to_string(restarts);
  if (key == "max_iter") return std::to_string(max_iter);
  if (key == "tol") return csv::format_double(tol);
  if (key == "init") return init;
  if (key == "threads") return std::to_string(threads);
  if (key == "summary_m") return std::to_string(summary_m);
  if (key == "nearest_m") return std::to_string(nearest_m);
  if (key == "compare_column") return compare_column;
  if (key == "compare_high") return compare_high;
  if (key == "compare_low") return compare_low;
  if (key == "bins") return std::to_string(bins);
  if (key == "labels_path") return labels_path;
  if (key == "points_path") return points_path;
  if (key == "assignments_path") return assignments_path;
  if (key == "pred_path") return pred_path;
  if (key == "true_path") return true_path;
  if (key == "synth_spec") return synth_spec;
  if (key == "synth_rows") return std::to_string(synth_rows);
  throw Error(ErrorCode::Config, "unknown config key '" + std::string(key) + "'");
}

void RunConfig::validate() const {
  if (k_min >= k_max) {
    throw Error(ErrorCode::Range, "k_min (" + std::to_string(k_min) + ") must be below k_max (" +
                                      std::to_string(k_max) + ")");
  }
  const std::set<std::string> expected = {"clean", "encode", "impute", "trim", "standardize"};
  const std::set<std::string> given(stage_order.begin(), stage_order.end());
  if (given != expected || stage_order.size() != expected.size()) {
    throw Error(ErrorCode::Config,
                "stage_order must list clean, encode, impute, trim and standardize once each");
  }
}

std::string RunConfig::to_text() const {
  std::string out = "[config]\n";
  for (const auto& key : config_keys()) out += key + "=" + get(key) + "\n";
  return out;
}

void apply_config_text(RunConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = csv::trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line == "[config]") continue;
      break;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::Config,
                  "config line " + std::to_string(line_no) + " is not key=value: '" +
                      std::string(line) + "'");
    }
    config.set(csv::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void load_config_file(RunConfig& config, const std::string& path) {
  std::string text;
  try {
    text = csv::read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, "cannot read config file: " + std::string(e.what()));
  }
  apply_config_text(config, text);
}

}  // namespace cml
