#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cml {

// Every knob of a run. Keys are the snake_case field names; the CLI flag for
// a key is the same name with dashes. Serialized in a fixed key order.
struct RunConfig {
  std::string input_path;
  std::string schema_path;
  std::string output_dir = "out";  // never serialized: runs into two directories compare equal
  std::uint64_t seed = 42;

  std::string dependent = "schp_total";
  std::vector<std::string> stage_order = {"clean", "encode", "impute", "trim", "standardize"};
  std::size_t impute_k = 5;
  double trim_fraction = 0.10;
  std::string trim_mode = "drop";  // drop | winsorize

  double variance_threshold = 0.95;
  bool pca_raw = false;  // fit PCA on original units instead of standardized features

  std::optional<std::size_t> k;  // empty means auto (elbow)
  std::size_t k_min = 1;
  std::size_t k_max = 10;
  std::string cluster_space = "pca";  // pca | full
  int restarts = 10;
  int max_iter = 300;
  double tol = 1e-4;
  std::string init = "random";  // random | plusplus
  unsigned threads = 1;

  std::size_t summary_m = 7;
  std::size_t nearest_m = 10;
  std::string compare_column = "giveaways_categories";
  std::string compare_high = "Delivery Network 1";
  std::string compare_low = "Delivery Network 3";

  std::size_t bins = 30;

  // Stage-specific inputs.
  std::string labels_path;
  std::string points_path;
  std::string assignments_path;
  std::string pred_path;
  std::string true_path;
  std::string synth_spec;
  std::size_t synth_rows = 900;

  // Throws Config for unknown keys and Config/Range for bad values.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  // Cross-field checks (k range, stage order) once every key is set.
  void validate() const;

  // `key=value` lines for every serialized key, preceded by `[config]`.
  std::string to_text() const;
};

// Keys in serialization order (output_dir excluded).
const std::vector<std::string>& config_keys();

// Flat `key=value` text; `#` starts a comment line. Reading stops at the
// first section header other than `[config]`, so a run manifest doubles as
// a config file.
void apply_config_text(RunConfig& config, std::string_view text);
void load_config_file(RunConfig& config, const std::string& path);

}  // namespace cml
