#include "stages.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <set>

#include "cluster.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "interpret.hpp"
#include "metrics.hpp"
#include "pca.hpp"
#include "preprocess.hpp"
#include "report.hpp"
#include "synth.hpp"
#include "tabular.hpp"

namespace cml {

namespace fs = std::filesystem;

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"synth",     "ingest",  "stats",
                                                 "preprocess", "pca",     "cluster",
                                                 "summarize",  "metrics", "report",
                                                 "pipeline"};
  return names;
}

namespace {

class Run {
 public:
  Run(const RunConfig& config, const LogSink& sink) : config(config), sink_(sink) {}

  const RunConfig& config;
  std::string step = "setup";

  void info(const std::string& message) { emit(LogLevel::Info, message); }
  void warn(const std::string& message) { emit(LogLevel::Warning, message); }

  std::string path(const std::string& name) const {
    return (fs::path(config.output_dir) / name).string();
  }

  void write(const std::string& name, std::string_view content) {
    csv::write_file(path(name), content);
    remember(name);
  }

  // Registers a file written under output_dir by other means.
  void remember(const std::string& name) {
    if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end()) {
      artifacts_.push_back(name);
    }
  }

  void write_table(const std::string& name, const Table& table) {
    write(name, to_csv(table));
    write(schema_sidecar_path(name), schema_to_csv(table.schema()));
  }

  const std::vector<std::string>& artifacts() const { return artifacts_; }
  const std::string& log_text() const { return log_; }

 private:
  void emit(LogLevel level, const std::string& message) {
    log_ += (level == LogLevel::Info ? "[info] " : "[warn] ") + message + "\n";
    if (sink_) sink_(level, message);
  }

  const LogSink& sink_;
  std::vector<std::string> artifacts_;
  std::string log_;
};

// --- input helpers ---------------------------------------------------------

void require_input(const std::string& path, const std::string& key) {
  if (path.empty()) throw Error(ErrorCode::Config, key + " is required for this stage");
  if (!fs::exists(path)) {
    throw Error(ErrorCode::Dependency, "missing upstream artifact '" + path + "' (" + key + ")");
  }
}

Table load_table(const RunConfig& config, const std::string& path, const std::string& key,
                 bool use_schema) {
  require_input(path, key);
  if (use_schema && !config.schema_path.empty()) {
    require_input(config.schema_path, "schema_path");
    return load_csv(path, load_schema(config.schema_path));
  }
  const std::vector<std::string> dependents = {config.dependent};
  return load_csv_auto(path, dependents);
}

Table mark_dependent(const Table& table, const std::string& dependent, bool required) {
  if (!table.has_column(dependent)) {
    if (required) throw Error(ErrorCode::Lookup, "dependent column '" + dependent + "' not found");
    return table;
  }
  const Column& column = table.column(dependent);
  if (column.kind() != ColumnKind::Numeric) {
    throw Error(ErrorCode::Kind, "dependent column '" + dependent + "' is not numeric");
  }
  if (column.role() == ColumnRole::Dependent) return table;
  return table.with_column(column.with_role(ColumnRole::Dependent));
}

Table with_row_ids(const Table& table) {
  if (table.has_column("row_id")) return table;
  TextCells ids(table.row_count());
  for (std::size_t r = 0; r < ids.size(); ++r) ids[r] = std::to_string(r);
  std::vector<Column> columns = {
      Column::text("row_id", ColumnKind::Identifier, ColumnRole::Identifier, std::move(ids))};
  columns.insert(columns.end(), table.columns().begin(), table.columns().end());
  return Table(std::move(columns));
}

std::vector<std::size_t> row_ids(const Table& table) {
  std::vector<std::size_t> ids(table.row_count());
  if (!table.has_column("row_id")) {
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    return ids;
  }
  const Column& column = table.column("row_id");
  for (std::size_t r = 0; r < ids.size(); ++r) {
    std::optional<std::string> text;
    if (column.is_numeric()) {
      if (const auto& v = column.numbers()[r]) text = csv::format_double(*v);
    } else {
      text = column.texts()[r];
    }
    std::size_t value = 0;
    const bool ok =
        text && std::from_chars(text->data(), text->data() + text->size(), value).ptr ==
                    text->data() + text->size();
    if (!ok || text->empty()) {
      throw Error(ErrorCode::Parse, "row_id in row " + std::to_string(r + 1) +
                                        " is not a non-negative integer");
    }
    ids[r] = value;
  }
  return ids;
}

double parse_real(std::string_view text, const std::string& where) {
  double value = 0.0;
  const auto trimmed = csv::trim(text);
  const auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), value);
  if (ec != std::errc{} || ptr != trimmed.data() + trimmed.size() || trimmed.empty()) {
    throw Error(ErrorCode::Parse, where + ": '" + std::string(text) + "' is not a number");
  }
  return value;
}

std::vector<std::string> numeric_names(const Table& table, bool independent_only) {
  std::vector<std::string> names;
  for (const auto& column : table.columns()) {
    if (column.kind() != ColumnKind::Numeric) continue;
    if (independent_only ? column.role() != ColumnRole::Independent
                         : column.role() == ColumnRole::Identifier) {
      continue;
    }
    names.push_back(column.name());
  }
  return names;
}

Table matrix_table(std::span<const std::size_t> ids, std::span<const std::string> names,
                   const Matrix& m) {
  TextCells id_cells(ids.size());
  for (std::size_t r = 0; r < ids.size(); ++r) id_cells[r] = std::to_string(ids[r]);
  std::vector<Column> columns = {Column::text("row_id", ColumnKind::Identifier,
                                              ColumnRole::Identifier, std::move(id_cells))};
  for (std::size_t c = 0; c < names.size(); ++c) {
    NumericCells cells(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) cells[r] = m(r, c);
    columns.push_back(Column::numeric(names[c], ColumnRole::Independent, std::move(cells)));
  }
  return Table(std::move(columns));
}

std::vector<std::string> pc_names(std::size_t count) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < count; ++i) names.push_back("PC" + std::to_string(i + 1));
  return names;
}

std::string stats_csv(const Table& table, Run& run) {
  std::vector<ColumnStats> stats;
  for (const auto& name : numeric_names(table, false)) {
    try {
      stats.push_back(compute_stats(table.column(name).present_values(), name));
    } catch (const Error& e) {
      run.warn("stats: column '" + name + "' skipped (" + e.what() + ")");
    }
  }
  return stats_to_csv(stats);
}

void log_config(Run& run, std::string_view stage) {
  run.info("stage: " + std::string(stage));
  std::string order;
  for (const auto& s : run.config.stage_order) order += (order.empty() ? "" : ",") + s;
  run.info("stage order: " + order);
  for (const auto& key : config_keys()) run.info("config " + key + "=" + run.config.get(key));
}

std::map<std::size_t, std::size_t> read_id_map(const std::string& path, const std::string& key,
                                               const std::string& value_column) {
  require_input(path, key);
  const Table table = load_csv_auto(path);
  if (!table.has_column(value_column)) {
    throw Error(ErrorCode::Lookup, "'" + path + "' has no '" + value_column + "' column");
  }
  const auto ids = row_ids(table);
  const Column& column = table.column(value_column);
  std::map<std::size_t, std::size_t> out;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    double v = 0.0;
    if (column.is_numeric()) {
      if (!column.numbers()[r]) throw Error(ErrorCode::IncompleteData, path + ": missing label");
      v = *column.numbers()[r];
    } else {
      if (!column.texts()[r]) throw Error(ErrorCode::IncompleteData, path + ": missing label");
      v = parse_real(*column.texts()[r], path);
    }
    if (v < 0 || v != std::floor(v)) {
      throw Error(ErrorCode::Parse, path + ": labels must be non-negative integers");
    }
    out[ids[r]] = static_cast<std::size_t>(v);
  }
  return out;
}

// --- preprocessing ---------------------------------------------------------

struct Preprocessed {
  Table units;  // original units; encoded columns hold label codes
  Table trimmed;  // original-units snapshot taken by the trim step
  std::vector<EncodingMap> encodings;
  std::vector<Standardization> scaling;
  std::vector<TrimBounds> bounds;
  std::vector<std::string> features;

  Table original() const { return decode_labels(units, encodings); }
  Table standardized() const { return apply_standardization(units, scaling); }
};

std::size_t missing_cells(const Table& table) {
  std::size_t missing = 0;
  for (const auto& column : table.columns()) missing += column.size() - column.present_count();
  return missing;
}

Preprocessed preprocess(const Table& raw, Run& run) {
  const RunConfig& config = run.config;
  Preprocessed p;
  p.units = raw;
  std::vector<std::string> encoded;
  for (const auto& step : config.stage_order) {
    run.step = step;
    if (step == "clean") {
      const Column& dependent = p.units.column(config.dependent);
      std::vector<std::size_t> keep;
      for (std::size_t r = 0; r < p.units.row_count(); ++r) {
        if (!dependent.is_missing(r)) keep.push_back(r);
      }
      run.info("clean: kept " + std::to_string(keep.size()) + " of " +
               std::to_string(p.units.row_count()) + " rows with '" + config.dependent + "'");
      if (keep.size() < 2) {
        throw Error(ErrorCode::InsufficientData,
                    "fewer than 2 rows have the dependent '" + config.dependent + "'");
      }
      p.units = p.units.select_rows(keep);
      run.write_table("cleaned.csv", p.original());
    } else if (step == "encode") {
      std::vector<std::string> columns;
      for (const auto& column : p.units.columns()) {
        if (column.kind() == ColumnKind::Categorical && column.role() == ColumnRole::Independent) {
          columns.push_back(column.name());
        }
      }
      auto result = encode_labels(p.units, columns);
      p.units = std::move(result.table);
      p.encodings = std::move(result.maps);
      for (const auto& map : p.encodings) {
        run.info("encode: '" + map.column + "' -> " + std::to_string(map.categories.size()) +
                 " codes");
        encoded.push_back(map.column);
      }
    } else if (step == "impute") {
      const std::size_t before = missing_cells(p.units);
      p.units = knn_impute(p.units, ImputeConfig{config.impute_k, encoded});
      run.info("impute: filled " + std::to_string(before - missing_cells(p.units)) +
               " cells with k=" + std::to_string(config.impute_k));
      run.write_table("imputed.csv", p.original());
    } else if (step == "trim") {
      std::vector<std::string> columns;
      for (const auto& name : numeric_names(p.units, true)) {
        if (std::find(encoded.begin(), encoded.end(), name) == encoded.end()) {
          columns.push_back(name);
        }
      }
      const std::size_t before = p.units.row_count();
      auto result = trim_outliers(p.units, columns, config.trim_fraction,
                                  config.trim_mode == "drop" ? TrimMode::Drop : TrimMode::Winsorize);
      p.units = std::move(result.table);
      p.bounds = std::move(result.bounds);
      run.info("trim: " + config.trim_mode + " at " + csv::format_double(config.trim_fraction) +
               " over " + std::to_string(columns.size()) + " columns kept " +
               std::to_string(p.units.row_count()) + " of " + std::to_string(before) + " rows");
      if (p.units.row_count() < 2) {
        throw Error(ErrorCode::InsufficientData, "trimming left fewer than 2 rows");
      }
      p.trimmed = p.original();
      run.write_table("trimmed.csv", p.trimmed);
    } else if (step == "standardize") {
      for (const auto& name : numeric_names(p.units, true)) {
        const auto values = p.units.column(name).present_values();
        const bool constant =
            values.size() < 2 || std::all_of(values.begin(), values.end(),
                                             [&](double v) { return v == values.front(); });
        if (constant) {
          run.warn("standardize: constant column '" + name + "' dropped from the features");
          continue;
        }
        p.features.push_back(name);
      }
      if (p.features.empty()) {
        throw Error(ErrorCode::ConstantColumn, "every feature column is constant");
      }
      p.scaling = standardize(p.units, p.features).params;
      run.info("standardize: " + std::to_string(p.features.size()) + " feature columns");
    }
  }
  run.step = "features";
  run.write_table("features.csv", p.standardized().select_columns([&] {
    std::vector<std::string> names = {"row_id"};
    names.insert(names.end(), p.features.begin(), p.features.end());
    return names;
  }()));
  run.write("preprocess.txt", encodings_to_text(p.encodings) +
                                  standardization_to_text(p.scaling) +
                                  trim_bounds_to_text(p.bounds));
  return p;
}

// --- PCA -------------------------------------------------------------------

struct PcaStep {
  PcaModel model;
  Matrix input;
  Matrix scores;
  std::size_t q = 0;
};

PcaStep run_pca(const Matrix& input, const std::vector<std::string>& features,
                std::span<const std::size_t> ids, Run& run) {
  PcaStep out;
  out.input = input;
  out.model = fit_pca(input, features);
  out.q = components_for_threshold(out.model, run.config.variance_threshold);
  out.scores = project(out.model, input, out.q);
  const auto cumulative = cumulative_ratio(out.model);
  run.info("pca: " + std::to_string(out.q) + " of " + std::to_string(features.size()) +
           " components reach " + csv::format_double(run.config.variance_threshold) +
           " of the variance (cumulative " + csv::format_significant(cumulative[out.q - 1], 6) +
           ")");

  run.write("pca_model.txt", pca_model_to_text(out.model));
  std::string variance = "component,explained_variance,ratio,cumulative\n";
  for (std::size_t i = 0; i < features.size(); ++i) {
    variance += "PC" + std::to_string(i + 1) + "," +
                csv::format_double(out.model.explained_variance[i]) + "," +
                csv::format_double(out.model.explained_variance_ratio[i]) + "," +
                csv::format_double(cumulative[i]) + "\n";
  }
  run.write("pca_variance.csv", variance);
  std::string loadings = "feature";
  for (const auto& name : pc_names(features.size())) loadings += "," + name;
  loadings += "\n";
  for (std::size_t f = 0; f < features.size(); ++f) {
    loadings += csv::escape(features[f]);
    for (std::size_t c = 0; c < features.size(); ++c) {
      loadings += "," + csv::format_double(out.model.components(c, f));
    }
    loadings += "\n";
  }
  run.write("pca_loadings.csv", loadings);
  run.write_table("pca_scores.csv", matrix_table(ids, pc_names(out.q), out.scores));
  return out;
}

// --- clustering ------------------------------------------------------------

struct Clustering {
  KMeansModel model;
  std::optional<ElbowCurve> elbow;
};

Clustering run_clustering(const Matrix& points, const std::vector<std::string>& names,
                          std::span<const std::size_t> ids, Run& run) {
  const RunConfig& config = run.config;
  KMeansOptions options;
  options.restarts = config.restarts;
  options.max_iter = config.max_iter;
  options.tol = config.tol;
  options.init = config.init == "plusplus" ? KMeansInit::PlusPlus : KMeansInit::RandomPoints;
  options.threads = config.threads;

  Clustering out;
  if (config.k) {
    out.model = kmeans_fit(points, *config.k, config.seed, options);
    run.info("cluster: k forced to " + std::to_string(*config.k) + ", elbow sweep skipped");
  } else {
    const std::size_t k_max = std::min(config.k_max, points.rows());
    if (k_max <= config.k_min) {
      throw Error(ErrorCode::Range, "elbow sweep needs k_max above k_min; only " +
                                        std::to_string(points.rows()) + " points");
    }
    auto sweep = elbow_sweep(points, config.k_min, k_max, config.seed, options);
    const auto& ks = sweep.curve.ks;
    const auto at = static_cast<std::size_t>(
        std::find(ks.begin(), ks.end(), sweep.curve.chosen_k) - ks.begin());
    out.model = std::move(sweep.models[at]);
    out.elbow = std::move(sweep.curve);
    run.info("cluster: elbow over k=" + std::to_string(config.k_min) + ".." +
             std::to_string(k_max) + " chose k=" + std::to_string(out.model.k));
    run.write("elbow.csv", elbow_to_csv(*out.elbow));
  }
  const auto sizes = out.model.cluster_sizes();
  std::string size_text;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    size_text += (c ? ", " : "") + std::to_string(sizes[c]);
  }
  run.info("cluster: inertia " + csv::format_significant(out.model.inertia, 10) + ", sizes " +
           size_text);

  std::string assignments = "row_id,cluster\n";
  for (std::size_t r = 0; r < ids.size(); ++r) {
    assignments += std::to_string(ids[r]) + "," + std::to_string(out.model.assignments[r]) + "\n";
  }
  run.write("assignments.csv", assignments);
  std::string centroids = "cluster";
  for (const auto& name : names) centroids += "," + csv::escape(name);
  centroids += "\n";
  for (std::size_t c = 0; c < out.model.k; ++c) {
    centroids += std::to_string(c);
    for (double x : out.model.centroids.row(c)) centroids += "," + csv::format_double(x);
    centroids += "\n";
  }
  run.write("centroids.csv", centroids);
  run.write("kmeans.txt", kmeans_model_to_text(out.model));

  if (!config.labels_path.empty()) {
    const auto labels = read_id_map(config.labels_path, "labels_path", "label");
    std::vector<std::size_t> truth, found;
    for (std::size_t r = 0; r < ids.size(); ++r) {
      const auto it = labels.find(ids[r]);
      if (it == labels.end()) continue;
      truth.push_back(it->second);
      found.push_back(out.model.assignments[r]);
    }
    if (truth.size() >= 2) {
      run.info("cluster: adjusted Rand index vs labels " +
               csv::format_significant(adjusted_rand_index(found, truth), 6) + " over " +
               std::to_string(truth.size()) + " rows");
    } else {
      run.warn("cluster: labels cover fewer than 2 clustered rows; ARI skipped");
    }
  }
  return out;
}

// --- summaries -------------------------------------------------------------

std::string improvement_row(const std::string& name, std::size_t a, std::size_t b, double mean_a,
                            double mean_b, double percent) {
  return name + "," + std::to_string(a) + "," + std::to_string(b) + "," +
         csv::format_double(mean_a) + "," + csv::format_double(mean_b) + "," +
         csv::format_double(percent) + "," + csv::format_double(percent - 100.0) + "\n";
}

void run_summaries(const Table& original, const KMeansModel& model, const Matrix& points,
                   Run& run) {
  const RunConfig& config = run.config;
  const auto summaries = summarize_clusters(original, model, points, config.summary_m);
  for (const auto& s : summaries) {
    if (s.truncated()) {
      run.warn("summarize: cluster " + std::to_string(s.cluster) + " has only " +
               std::to_string(s.m_used) + " rows, fewer than m=" + std::to_string(s.m_requested));
    }
  }
  run.write("summary.csv", summary_to_csv(summaries));

  std::string table = "comparison,cluster_a,cluster_b,mean_a,mean_b,percent,increase_percent\n";
  std::optional<std::size_t> best, worst;
  for (const auto& s : summaries) {
    const double* mean = s.mean_of(config.dependent);
    if (!mean || std::isnan(*mean)) continue;
    if (!best || *mean > *summaries[*best].mean_of(config.dependent)) best = s.cluster;
    if (!worst || *mean < *summaries[*worst].mean_of(config.dependent)) worst = s.cluster;
  }
  auto report = [&](const std::string& name, std::size_t a, std::size_t b,
                    const std::string& what) {
    const double mean_a = *summaries[a].mean_of(config.dependent);
    const double mean_b = *summaries[b].mean_of(config.dependent);
    if (!(mean_b > 0.0)) {
      run.warn("improvement " + what + " skipped: reference mean is not positive");
      return;
    }
    const double percent = improvement_percent(mean_a, mean_b);
    run.info("improvement " + what + ": cluster " + std::to_string(a) + " vs cluster " +
             std::to_string(b) + " mean " + config.dependent + " " +
             csv::format_significant(mean_a, 6) + " / " + csv::format_significant(mean_b, 6) +
             " = " + csv::format_significant(percent, 4) + " percent (increase " +
             csv::format_significant(percent - 100.0, 4) + " percent)");
    table += improvement_row(name, a, b, mean_a, mean_b, percent);
  };
  if (best && worst && *best != *worst) report("max_vs_min", *best, *worst, "(highest vs lowest)");

  if (!config.compare_column.empty() && original.has_column(config.compare_column)) {
    std::optional<std::size_t> high, low;
    for (const auto& s : summaries) {
      const std::string* mode = s.mode_of(config.compare_column);
      if (!mode) continue;
      if (!high && *mode == config.compare_high) high = s.cluster;
      if (!low && *mode == config.compare_low) low = s.cluster;
    }
    if (high && low && *high != *low) {
      report("compare", *high, *low,
             "(" + config.compare_column + " '" + config.compare_high + "' vs '" +
                 config.compare_low + "')");
    } else {
      run.warn("improvement: no pair of clusters with " + config.compare_column + " modes '" +
               config.compare_high + "' and '" + config.compare_low + "'");
    }
  }
  run.write("improvement.csv", table);
}

// --- report ----------------------------------------------------------------

struct ReportInputs {
  Table raw;
  Table trimmed;
  std::vector<std::string> correlation_names;
  Matrix correlation;
  PcaModel pca;
  Matrix pca_input;
  std::size_t q = 0;
  std::optional<ElbowCurve> elbow;
  Matrix points;
  std::vector<std::string> point_names;
  KMeansModel model;
};

std::vector<Series> histogram_series(const Table& table) {
  std::vector<Series> out;
  for (const auto& name : numeric_names(table, false)) {
    auto values = table.column(name).present_values();
    if (!values.empty()) out.push_back({name, std::move(values)});
  }
  return out;
}

void write_report(const ReportInputs& in, Run& run) {
  run.step = "report";
  const RunConfig& config = run.config;
  std::vector<std::string> files;
  auto emit = [&](const std::string& name, ChartSpec spec) {
    spec.output_path = run.path("report/" + name + ".svg");
    spec.options.bins = config.bins;
    write_chart(spec);
    for (const char* ext : {".svg", ".csv"}) {
      files.push_back(name + ext);
      run.remember("report/" + name + ext);
    }
  };

  ChartSpec raw{ChartKind::Histogram, "Distribution of the raw data", histogram_series(in.raw),
                {}, {}};
  if (!raw.series.empty()) emit("fig1_raw_histograms", raw);
  ChartSpec trimmed{ChartKind::Histogram, "Distribution after outlier trimming",
                    histogram_series(in.trimmed), {}, {}};
  if (!trimmed.series.empty()) emit("fig2_trimmed_histograms", trimmed);

  ChartSpec heat{ChartKind::Heatmap, "Correlation of features and dependent", {}, {}, {}};
  for (std::size_t c = 0; c < in.correlation_names.size(); ++c) {
    heat.series.push_back({in.correlation_names[c], in.correlation.column(c)});
  }
  heat.options.labels = in.correlation_names;
  emit("fig3_correlation", heat);

  if (in.pca.feature_count() >= 2) {
    const BiplotData bi = biplot_data(in.pca, in.pca_input);
    ChartSpec biplot{ChartKind::Scatter, "PCA biplot", {}, {}, {}};
    biplot.series = {{"x", bi.scores.column(0)},
                     {"y", bi.scores.column(1)},
                     {"arrow_x", bi.loadings.column(0)},
                     {"arrow_y", bi.loadings.column(1)}};
    biplot.options.labels = in.pca.feature_names;
    biplot.options.x_label = "PC1";
    biplot.options.y_label = "PC2";
    emit("fig4_biplot", biplot);
  } else {
    run.warn("report: biplot skipped, PCA has a single component");
  }

  ChartSpec variance{ChartKind::Bar, "Explained variance ratio", {}, {}, {}};
  variance.series = {{"explained_variance_ratio", in.pca.explained_variance_ratio},
                     {"cumulative", cumulative_ratio(in.pca)}};
  variance.options.labels = pc_names(in.pca.feature_count());
  variance.options.y_label = "ratio";
  emit("fig5_variance_ratio", variance);

  if (in.elbow) {
    ChartSpec elbow{ChartKind::Line, "Elbow curve", {}, {}, {}};
    std::vector<double> ks(in.elbow->ks.begin(), in.elbow->ks.end());
    elbow.series = {{"k", ks}, {"inertia", in.elbow->inertias}};
    elbow.options.x_label = "k";
    elbow.options.y_label = "inertia";
    emit("fig6_elbow", elbow);
  }

  {
    ChartSpec scatter{ChartKind::Scatter,
                      "Clusters with the " + std::to_string(config.nearest_m) +
                          " points nearest each centroid",
                      {}, {}, {}};
    std::vector<double> x = in.points.column(0);
    std::vector<double> y =
        in.points.cols() > 1 ? in.points.column(1) : std::vector<double>(in.points.rows(), 0.0);
    std::vector<double> group(in.points.rows()), highlight(in.points.rows(), 0.0);
    for (std::size_t r = 0; r < group.size(); ++r) {
      group[r] = static_cast<double>(in.model.assignments[r]);
    }
    const auto sizes = in.model.cluster_sizes();
    for (std::size_t c = 0; c < in.model.k; ++c) {
      if (sizes[c] == 0) continue;
      for (std::size_t r : nearest_to_centroid(in.model, in.points, c,
                                               std::min(config.nearest_m, sizes[c]))) {
        highlight[r] = 1.0;
      }
    }
    scatter.series = {{"x", x}, {"y", y}, {"group", group}, {"highlight", highlight}};
    scatter.options.x_label = in.point_names[0];
    scatter.options.y_label = in.point_names.size() > 1 ? in.point_names[1] : "";
    emit("fig7_clusters", scatter);
  }

  {
    ChartSpec pair{ChartKind::Pairplot, "Pairplot of the retained principal components", {}, {},
                   {}};
    const Matrix scores = project(in.pca, in.pca_input, in.q);
    const auto names = pc_names(in.q);
    for (std::size_t c = 0; c < in.q; ++c) pair.series.push_back({names[c], scores.column(c)});
    std::vector<double> group(scores.rows());
    for (std::size_t r = 0; r < group.size(); ++r) {
      group[r] = static_cast<double>(in.model.assignments[r]);
    }
    pair.series.push_back({"group", group});
    emit("fig8_pairplot", pair);
  }

  run.write("report/manifest.txt", report_manifest(run.path("report"), files));
  run.info("report: " + std::to_string(files.size()) + " files under report/");
}

Matrix read_numeric_csv(const std::string& path, std::vector<std::string>* header,
                        std::vector<std::string>* labels) {
  const auto records = csv::parse(csv::read_file(path));
  if (records.empty()) throw Error(ErrorCode::Parse, "'" + path + "' is empty");
  const std::size_t cols = records.front().size() - 1;
  if (header) {
    header->clear();
    for (std::size_t c = 1; c < records.front().size(); ++c) {
      header->push_back(records.front()[c].text);
    }
  }
  Matrix m(records.size() - 1, cols);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != cols + 1) {
      throw Error(ErrorCode::Parse, "'" + path + "' row " + std::to_string(r) + " has " +
                                        std::to_string(records[r].size()) + " fields");
    }
    if (labels) labels->push_back(records[r][0].text);
    for (std::size_t c = 0; c < cols; ++c) {
      m(r - 1, c) = parse_real(records[r][c + 1].text, path);
    }
  }
  return m;
}

ReportInputs load_report_inputs(const std::string dir, RunConfig& config) {
  auto file = [&](const std::string& name) {
    const std::string path = (fs::path(dir) / name).string();
    require_input(path, "input_path");
    return path;
  };
  const std::string output_dir = config.output_dir;
  config = RunConfig{};
  load_config_file(config, file("manifest.txt"));
  config.output_dir = output_dir;

  ReportInputs in;
  in.raw = load_csv_auto(file("ingested.csv"));
  in.trimmed = load_csv_auto(file("trimmed.csv"));
  in.correlation = read_numeric_csv(file("correlation.csv"), &in.correlation_names, nullptr);
  in.pca = read_pca_model(csv::read_file(file("pca_model.txt")));
  const Table input = load_csv_auto(file(config.pca_raw ? "pca_input.csv" : "features.csv"));
  in.pca_input = to_matrix(input, in.pca.feature_names);
  const Table scores = load_csv_auto(file("pca_scores.csv"));
  in.q = numeric_names(scores, false).size();
  if (!config.k) {
    const Matrix elbow = read_numeric_csv(file("elbow.csv"), nullptr, nullptr);
    // elbow.csv is k,inertia: the k column comes back as the row label.
    const auto records = csv::parse(csv::read_file(file("elbow.csv")));
    ElbowCurve curve;
    for (std::size_t r = 1; r < records.size(); ++r) {
      curve.ks.push_back(static_cast<std::size_t>(parse_real(records[r][0].text, "elbow.csv")));
      curve.inertias.push_back(elbow(r - 1, 0));
    }
    curve.chosen_k = choose_elbow(curve.ks, curve.inertias);
    in.elbow = std::move(curve);
  }
  const Table points = load_csv_auto(file(config.cluster_space == "pca" ? "pca_scores.csv"
                                                                        : "features.csv"));
  in.point_names = numeric_names(points, false);
  in.points = to_matrix(points, in.point_names);
  in.model.centroids = read_numeric_csv(file("centroids.csv"), nullptr, nullptr);
  in.model.k = in.model.centroids.rows();
  const auto assignments = read_id_map(file("assignments.csv"), "assignments", "cluster");
  for (std::size_t id : row_ids(points)) {
    const auto it = assignments.find(id);
    if (it == assignments.end()) {
      throw Error(ErrorCode::Assignment, "row " + std::to_string(id) + " has no assignment");
    }
    in.model.assignments.push_back(it->second);
  }
  return in;
}

// --- stages ----------------------------------------------------------------

void stage_synth(Run& run) {
  const RunConfig& config = run.config;
  SynthSpec spec;
  if (config.synth_spec.empty()) {
    spec = default_fcd_spec(config.synth_rows, config.seed);
  } else {
    require_input(config.synth_spec, "synth_spec");
    spec = synth_spec_from_json(csv::read_file(config.synth_spec));
  }
  const SynthResult result = generate(spec);
  run.write_table("synth.csv", result.table);
  std::string labels = "row_id,label\n";
  for (std::size_t r = 0; r < result.labels.size(); ++r) {
    labels += std::to_string(r) + "," + std::to_string(result.labels[r]) + "\n";
  }
  run.write("synth_labels.csv", labels);
  run.write("synth_spec.json", synth_spec_to_json(spec));
  run.info("synth: " + std::to_string(result.table.row_count()) + " rows from " +
           std::to_string(spec.archetypes.size()) + " archetypes, seed " +
           std::to_string(spec.seed));
}

Table load_primary(Run& run, bool dependent_required) {
  run.step = "load";
  Table table = load_table(run.config, run.config.input_path, "input_path", true);
  table = with_row_ids(mark_dependent(table, run.config.dependent, dependent_required));
  run.info("load: " + std::to_string(table.row_count()) + " rows, " +
           std::to_string(table.column_count()) + " columns");
  for (const auto& name : table.names_where(ColumnRole::Dependent)) {
    run.info("load: " + std::to_string(record_count_for_target(table, name)) + " records for '" +
             name + "'");
  }
  return table;
}

void stage_ingest(Run& run) {
  const Table table = load_primary(run, false);
  run.write_table("ingested.csv", table);
  std::string counts = "dependent,records\n";
  for (const auto& name : table.names_where(ColumnRole::Dependent)) {
    counts += csv::escape(name) + "," + std::to_string(record_count_for_target(table, name)) + "\n";
  }
  run.write("record_counts.csv", counts);
}

void stage_stats(Run& run) {
  const Table table = load_primary(run, false);
  run.step = "stats";
  run.write("stats.csv", stats_csv(table, run));
}

void stage_preprocess(Run& run) {
  const Table raw = load_primary(run, true);
  preprocess(raw, run);
}

void stage_pca(Run& run) {
  run.step = "load";
  const Table table = load_table(run.config, run.config.input_path, "input_path", false);
  auto features = numeric_names(table, true);
  if (features.empty()) throw Error(ErrorCode::Schema, "input has no numeric feature columns");
  run.step = "pca";
  run_pca(to_matrix(table, features), features, row_ids(table), run);
}

void stage_cluster(Run& run) {
  run.step = "load";
  const Table table = load_table(run.config, run.config.input_path, "input_path", false);
  const auto names = numeric_names(table, false);
  if (names.empty()) throw Error(ErrorCode::Schema, "input has no numeric point columns");
  run.step = "cluster";
  run_clustering(to_matrix(table, names), names, row_ids(table), run);
}

void stage_summarize(Run& run) {
  run.step = "load";
  const RunConfig& config = run.config;
  const Table original = mark_dependent(
      load_table(config, config.input_path, "input_path", true), config.dependent, false);
  require_input(config.points_path, "points_path");
  const Table points_table = load_csv_auto(config.points_path);
  const auto assignments = read_id_map(config.assignments_path, "assignments_path", "cluster");

  const auto point_ids = row_ids(points_table);
  std::map<std::size_t, std::size_t> position;
  for (std::size_t r = 0; r < point_ids.size(); ++r) position[point_ids[r]] = r;
  std::vector<std::size_t> rows, point_rows;
  std::vector<std::size_t> labels;
  const auto ids = row_ids(original);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto p = position.find(ids[r]);
    const auto a = assignments.find(ids[r]);
    if (p == position.end() || a == assignments.end()) continue;
    rows.push_back(r);
    point_rows.push_back(p->second);
    labels.push_back(a->second);
  }
  if (rows.empty()) throw Error(ErrorCode::Assignment, "no row_id shared by the three inputs");
  if (rows.size() < ids.size()) {
    run.warn("summarize: " + std::to_string(ids.size() - rows.size()) +
             " rows without points or assignments ignored");
  }

  run.step = "summarize";
  const auto names = numeric_names(points_table, false);
  const Matrix points = to_matrix(points_table, names).select_rows(point_rows);
  KMeansModel model;
  model.k = *std::max_element(labels.begin(), labels.end()) + 1;
  model.assignments = labels;
  model.centroids = Matrix(model.k, points.cols());
  std::vector<std::size_t> sizes(model.k, 0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    ++sizes[labels[r]];
    for (std::size_t c = 0; c < points.cols(); ++c) model.centroids(labels[r], c) += points(r, c);
  }
  for (std::size_t c = 0; c < model.k; ++c) {
    if (sizes[c] == 0) {
      throw Error(ErrorCode::Assignment, "cluster " + std::to_string(c) + " has no rows");
    }
    for (double& x : model.centroids.row(c)) x /= static_cast<double>(sizes[c]);
  }
  model.inertia = inertia(points, model.centroids, model.assignments);
  run_summaries(original.select_rows(rows), model, points, run);
}

std::vector<double> single_column(const RunConfig& config, const std::string& path,
                                  const std::string& key) {
  const Table table = load_table(config, path, key, false);
  const auto names = numeric_names(table, false);
  if (names.empty()) throw Error(ErrorCode::Schema, "'" + path + "' has no numeric column");
  const Column& column = table.column(names.front());
  if (column.present_count() != column.size()) {
    throw Error(ErrorCode::IncompleteData, "'" + path + "' has missing values");
  }
  return column.present_values();
}

void stage_metrics(Run& run) {
  run.step = "metrics";
  const auto pred = single_column(run.config, run.config.pred_path, "pred_path");
  const auto truth = single_column(run.config, run.config.true_path, "true_path");
  const RegressionMetrics m = evaluate(pred, truth);
  run.write("metrics.csv", metrics_to_csv(m));
  run.info("metrics: rmse=" + csv::format_significant(m.rmse, 10) +
           " mae=" + csv::format_significant(m.mae, 10) +
           " r2=" + csv::format_significant(m.r2, 10));
}

void stage_report(Run& run, RunConfig& config) {
  run.step = "load";
  require_input(config.input_path, "input_path");
  const ReportInputs in = load_report_inputs(config.input_path, config);
  write_report(in, run);
}

void stage_pipeline(Run& run) {
  const RunConfig& config = run.config;
  const Table raw = load_primary(run, true);
  run.write_table("ingested.csv", raw);
  run.step = "stats";
  run.write("stats_raw.csv", stats_csv(raw, run));

  const Preprocessed pre = preprocess(raw, run);
  const Table original = pre.original();
  const Table standardized = pre.standardized();
  const auto ids = row_ids(original);
  run.step = "stats";
  run.write("stats_trimmed.csv", stats_csv(original, run));

  run.step = "correlate";
  std::vector<std::string> corr_names = pre.features;
  corr_names.push_back(config.dependent);
  const Matrix corr = correlation_matrix(standardized, corr_names);
  std::string corr_csv = "variable";
  for (const auto& name : corr_names) corr_csv += "," + csv::escape(name);
  corr_csv += "\n";
  for (std::size_t r = 0; r < corr_names.size(); ++r) {
    corr_csv += csv::escape(corr_names[r]);
    for (std::size_t c = 0; c < corr_names.size(); ++c) {
      corr_csv += "," + csv::format_double(corr(r, c));
    }
    corr_csv += "\n";
  }
  run.write("correlation.csv", corr_csv);

  run.step = "pca";
  const Matrix features = to_matrix(standardized, pre.features);
  Matrix pca_input = features;
  if (config.pca_raw) {
    pca_input = to_matrix(original.select_columns(pre.features), pre.features);
    run.write_table("pca_input.csv", matrix_table(ids, pre.features, pca_input));
  }
  const PcaStep pca = run_pca(pca_input, pre.features, ids, run);

  run.step = "cluster";
  const bool in_pca = config.cluster_space == "pca";
  const Matrix& points = in_pca ? pca.scores : features;
  const std::vector<std::string> point_names = in_pca ? pc_names(pca.q) : pre.features;
  Clustering clustering = run_clustering(points, point_names, ids, run);

  run.step = "summarize";
  run_summaries(original, clustering.model, points, run);

  ReportInputs in{raw,        pre.trimmed, corr_names, corr,
                  pca.model,  pca_input,   pca.q,      clustering.elbow,
                  points,     point_names, clustering.model};
  write_report(in, run);

  run.step = "manifest";
  std::string manifest = config.to_text();
  manifest += "[results]\n";
  manifest += "rows=" + std::to_string(original.row_count()) + "\n";
  manifest += "features=" + std::to_string(pre.features.size()) + "\n";
  manifest += "components=" + std::to_string(pca.q) + "\n";
  manifest += "k=" + std::to_string(clustering.model.k) + "\n";
  manifest += "inertia=" + csv::format_double(clustering.model.inertia) + "\n";
  manifest += "[artifacts]\n";
  manifest += report_manifest(config.output_dir, run.artifacts());
  run.write("manifest.txt", manifest);
}

}  // namespace

void run_stage(std::string_view stage, const RunConfig& input_config, const LogSink& sink) {
  const auto& names = stage_names();
  if (std::find(names.begin(), names.end(), stage) == names.end()) {
    throw Error(ErrorCode::Config, "unknown stage '" + std::string(stage) + "'");
  }
  RunConfig config = input_config;
  config.validate();
  if (config.output_dir.empty()) throw Error(ErrorCode::Config, "output_dir is required");
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) {
    throw Error(ErrorCode::Io, "cannot create output directory '" + config.output_dir +
                                   "': " + ec.message());
  }
  fs::remove(fs::path(config.output_dir) / "FAILED", ec);

  Run run(config, sink);
  auto finish_log = [&] { csv::write_file(run.path("run.log"), run.log_text()); };
  auto fail = [&](const std::string& what) {
    try {
      csv::write_file(run.path("FAILED"), "stage=" + std::string(stage) + "\nstep=" + run.step +
                                              "\nerror=" + what + "\n");
      finish_log();
    } catch (...) {
      // The original error matters more than a failed marker write.
    }
  };

  try {
    log_config(run, stage);
    if (stage == "synth") stage_synth(run);
    else if (stage == "ingest") stage_ingest(run);
    else if (stage == "stats") stage_stats(run);
    else if (stage == "preprocess") stage_preprocess(run);
    else if (stage == "pca") stage_pca(run);
    else if (stage == "cluster") stage_cluster(run);
    else if (stage == "summarize") stage_summarize(run);
    else if (stage == "metrics") stage_metrics(run);
    else if (stage == "report") stage_report(run, config);
    else stage_pipeline(run);
  } catch (const Error& e) {
    const std::string what = std::string(error_code_name(e.code())) + ": " + e.what();
    fail(what);
    throw Error(e.code(), std::string(stage) + " failed at step '" + run.step + "': " + e.what());
  } catch (const std::exception& e) {
    fail(std::string("internal: ") + e.what());
    throw;
  }
  finish_log();
}

}  // namespace cml
