#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "cml/cml.h"

namespace {

struct Flag {
  const char* names;
  const char* key;
  const char* help;
};

// Every flag maps onto one config key; flags override --config values.
const Flag kFlags[] = {
    {"--input", "input_path", "input CSV (for report: a pipeline output directory)"},
    {"--schema", "schema_path", "schema CSV with name,kind,role columns"},
    {"--out", "output_dir", "output directory"},
    {"--seed", "seed", "random seed"},
    {"--k", "k", "number of clusters or 'auto' for the elbow sweep"},
    {"--k-min", "k_min", "smallest k of the elbow sweep"},
    {"--k-max", "k_max", "largest k of the elbow sweep"},
    {"--impute-k", "impute_k", "neighbours used by k-NN imputation"},
    {"--trim-fraction", "trim_fraction", "quantile trimmed from each tail"},
    {"--trim-mode", "trim_mode", "drop or winsorize"},
    {"--variance-threshold", "variance_threshold", "cumulative variance kept by PCA"},
    {"--pca-raw", "pca_raw", "fit PCA on original units (true/false)"},
    {"--summary-m", "summary_m", "rows per cluster summary"},
    {"--nearest-m", "nearest_m", "highlighted rows per cluster in the cluster plot"},
    {"--dependent", "dependent", "dependent column"},
    {"--stage-order", "stage_order", "comma-separated preprocessing order"},
    {"--cluster-space", "cluster_space", "pca or full"},
    {"--restarts", "restarts", "k-means restarts"},
    {"--max-iter", "max_iter", "Lloyd iterations per restart"},
    {"--tol", "tol", "centroid shift tolerance"},
    {"--init", "init", "random or plusplus"},
    {"--threads", "threads", "threads for k-means restarts"},
    {"--bins", "bins", "histogram bins"},
    {"--compare-column", "compare_column", "categorical column naming the compared clusters"},
    {"--compare-high", "compare_high", "category of the first compared cluster"},
    {"--compare-low", "compare_low", "category of the reference cluster"},
    {"--labels", "labels_path", "row_id,label CSV scored with the adjusted Rand index"},
    {"--points", "points_path", "points CSV for summarize"},
    {"--assignments", "assignments_path", "row_id,cluster CSV for summarize"},
    {"--pred", "pred_path", "predictions CSV for metrics"},
    {"--true", "true_path", "targets CSV for metrics"},
    {"--synth-spec", "synth_spec", "JSON generator spec for synth"},
    {"--rows", "synth_rows", "rows generated by synth with the default spec"},
};

const std::pair<const char*, const char*> kStages[] = {
    {"synth", "generate the planted synthetic dataset"},
    {"ingest", "load and type a CSV, count records per dependent"},
    {"stats", "moment statistics per numeric column"},
    {"preprocess", "clean, encode, impute, trim and standardize"},
    {"pca", "principal components of a feature CSV"},
    {"cluster", "k-means with optional elbow sweep on a points CSV"},
    {"summarize", "cluster profiles from the rows nearest each centroid"},
    {"metrics", "rmse, mae and r2 of predictions"},
    {"report", "figures and data tables from a pipeline output directory"},
    {"pipeline", "every stage in order with a run manifest"},
};

void log_to_console(int level, const char* message, void*) {
  if (level == 0) {
    std::printf("%s\n", message);
    std::fflush(stdout);
  } else {
    std::fprintf(stderr, "warning: %s\n", message);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustering and PCA pipeline for tabular campaign data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cml_version()));

  std::vector<std::string> values(std::size(kFlags));
  std::string config_file;
  bool quiet = false;
  std::vector<std::pair<CLI::Option*, const char*>> options;
  for (const auto& [name, help] : kStages) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_file, "key=value config file or run manifest");
    sub->add_flag("--quiet", quiet, "suppress log output");
    for (std::size_t i = 0; i < std::size(kFlags); ++i) {
      CLI::Option* option = sub->add_option(kFlags[i].names, values[i], kFlags[i].help);
      option->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
      options.emplace_back(option, kFlags[i].key);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : CML_ERR_CONFIG;
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  cml_config* config = nullptr;
  if (cml_config_create(&config) != CML_OK) {
    std::fprintf(stderr, "cml: %s\n", cml_last_error());
    return CML_ERR_INTERNAL;
  }
  auto fail = [&](cml_status status) {
    std::fprintf(stderr, "cml %s: error (%s): %s\n", stage.c_str(), cml_last_error_kind(),
                 cml_last_error());
    cml_config_destroy(config);
    return static_cast<int>(status);
  };

  if (!config_file.empty()) {
    if (cml_status s = cml_config_load(config, config_file.c_str()); s != CML_OK) return fail(s);
  }
  for (std::size_t i = 0; i < options.size(); ++i) {
    auto [option, key] = options[i];
    if (option->count() == 0) continue;
    const std::string& value = values[i % std::size(kFlags)];
    if (cml_status s = cml_config_set(config, key, value.c_str()); s != CML_OK) return fail(s);
  }

  cml_set_log_callback(quiet ? nullptr : log_to_console, nullptr);
  if (cml_status s = cml_run_stage(config, stage.c_str()); s != CML_OK) return fail(s);
  cml_config_destroy(config);
  return 0;
}
