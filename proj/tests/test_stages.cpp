#include "doctest.h"

#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "oracle.hpp"
#include "stages.hpp"

using namespace cml;
namespace fs = std::filesystem;

namespace {

struct Capture {
  std::vector<std::string> info, warnings;
  LogSink sink() {
    return [this](LogLevel level, std::string_view message) {
      (level == LogLevel::Info ? info : warnings).emplace_back(message);
    };
  }
  bool has(const std::string& prefix) const {
    for (const auto& line : info)
      if (line.rfind(prefix, 0) == 0) return true;
    return false;
  }
};

RunConfig config_in(const fs::path& dir) {
  RunConfig c;
  c.output_dir = dir.string();
  return c;
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

// Synthetic dataset shared by the stage tests.
fs::path synth_dir() {
  static const fs::path dir = [] {
    const fs::path d = oracle::scratch_dir("stages_synth");
    RunConfig c = config_in(d);
    c.synth_rows = 300;
    run_stage("synth", c);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("config keys round trip through text") {
  RunConfig c;
  c.set("seed", "7");
  c.set("k", "4");
  c.set("trim_fraction", "0.05");
  c.set("stage_order", "clean,encode,trim,impute,standardize");
  c.set("compare_high", "Delivery Network 1, 2");
  RunConfig back;
  apply_config_text(back, c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK(back.get("k") == "4");
  CHECK(back.get("compare_high") == "Delivery Network 1, 2");
  for (const auto& key : config_keys()) CHECK_NOTHROW(c.get(key));
  CHECK(c.to_text().find("output_dir") == std::string::npos);
}

TEST_CASE("config rejects unknown keys and bad values") {
  RunConfig c;
  CHECK(code_of([&] { c.set("nope", "1"); }) == ErrorCode::Config);
  CHECK_THROWS_AS(c.set("seed", "abc"), Error);
  CHECK(code_of([&] { c.set("k", "0"); }) == ErrorCode::Range);
  CHECK(code_of([&] { c.set("trim_fraction", "0.7"); }) == ErrorCode::Range);
  CHECK_THROWS_AS(c.set("trim_mode", "shave"), Error);
  c.set("k", "auto");
  CHECK_FALSE(c.k.has_value());
  c.set("k_min", "5");
  c.set("k_max", "5");
  CHECK_THROWS_AS(c.validate(), Error);
  RunConfig order;
  order.set("stage_order", "clean,encode,impute,trim");
  CHECK_THROWS_AS(order.validate(), Error);
}

TEST_CASE("config text stops at the next section and skips comments") {
  RunConfig c;
  apply_config_text(c, "# comment\n[config]\nseed=9\n[results]\nseed=10\nbogus=1\n");
  CHECK(c.seed == 9);
}

TEST_CASE("synth writes the dataset, labels and spec") {
  const fs::path d = synth_dir();
  for (const char* f : {"synth.csv", "synth.schema.csv", "synth_labels.csv", "synth_spec.json", "run.log"}) {
    CHECK(fs::exists(d / f));
  }
  const auto labels = csv::parse(oracle::slurp(d / "synth_labels.csv"));
  CHECK(labels.size() == 301);
  CHECK(labels[0][0].text == "row_id");
}

TEST_CASE("ingest and stats on the synthetic table") {
  const fs::path out = oracle::scratch_dir("stages_ingest");
  RunConfig c = config_in(out);
  c.input_path = (synth_dir() / "synth.csv").string();
  Capture log;
  run_stage("ingest", c, log.sink());
  CHECK(fs::exists(out / "ingested.csv"));
  const auto counts = csv::parse(oracle::slurp(out / "record_counts.csv"));
  CHECK(counts.size() >= 2);
  CHECK(log.has("config seed=42"));
  CHECK(log.has("stage order: clean,encode,impute,trim,standardize"));
  run_stage("stats", c);
  const auto stats = csv::parse(oracle::slurp(out / "stats.csv"));
  CHECK(stats.size() > 5);
}

TEST_CASE("cluster with a forced k skips the elbow sweep") {
  const fs::path out = oracle::scratch_dir("stages_cluster");
  csv::write_file((out / "points.csv").string(),
                  "row_id,x,y\n1,0,0\n2,0.1,0\n3,10,10\n4,10.2,10\n5,20,0\n6,20,0.3\n");
  RunConfig c = config_in(out / "run");
  c.input_path = (out / "points.csv").string();
  c.k = 3;
  c.k_max = 5;
  run_stage("cluster", c);
  CHECK(fs::exists(out / "run" / "assignments.csv"));
  CHECK_FALSE(fs::exists(out / "run" / "elbow.csv"));
  c.k.reset();
  c.output_dir = (out / "auto").string();
  run_stage("cluster", c);
  CHECK(fs::exists(out / "auto" / "elbow.csv"));
  const auto elbow = csv::parse(oracle::slurp(out / "auto" / "elbow.csv"));
  CHECK(elbow[0][0].text == "k");
  CHECK(elbow.size() == 6);
}

TEST_CASE("metrics stage writes one record") {
  const fs::path out = oracle::scratch_dir("stages_metrics");
  csv::write_file((out / "p.csv").string(), "value\n0\n0\n");
  csv::write_file((out / "y.csv").string(), "value\n3\n4\n");
  RunConfig c = config_in(out);
  c.pred_path = (out / "p.csv").string();
  c.true_path = (out / "y.csv").string();
  run_stage("metrics", c);
  const auto records = csv::parse(oracle::slurp(out / "metrics.csv"));
  REQUIRE(records.size() == 2);
  CHECK(std::stod(records[1][1].text) == 3.5);
}

TEST_CASE("a missing upstream artifact is a dependency error with a FAILED marker") {
  const fs::path out = oracle::scratch_dir("stages_missing");
  RunConfig c = config_in(out);
  c.input_path = (out / "absent.csv").string();
  try {
    run_stage("pipeline", c);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Dependency);
    CHECK(std::string(e.what()).find("absent.csv") != std::string::npos);
    CHECK(std::string(e.what()).find("pipeline") != std::string::npos);
  }
  CHECK(fs::exists(out / "FAILED"));
  CHECK(fs::exists(out / "run.log"));
  CHECK(code_of([&] { run_stage("bogus", c); }) == ErrorCode::Config);
}

TEST_CASE("pipeline on the synthetic table writes the full artifact set") {
  const fs::path out = oracle::scratch_dir("stages_pipeline");
  RunConfig c = config_in(out);
  c.input_path = (synth_dir() / "synth.csv").string();
  c.labels_path = (synth_dir() / "synth_labels.csv").string();
  Capture log;
  run_stage("pipeline", c, log.sink());
  for (const char* f : {"manifest.txt", "summary.csv", "improvement.csv", "elbow.csv",
                        "pca_model.txt", "correlation.csv", "stats_raw.csv", "stats_trimmed.csv",
                        "report/manifest.txt", "report/fig1_raw_histograms.svg", "report/fig8_pairplot.svg"}) {
    CAPTURE(f);
    CHECK(fs::exists(out / f));
  }
  CHECK_FALSE(fs::exists(out / "FAILED"));
  CHECK(log.has("improvement"));

  // The report stage regenerates the same figures from the run directory.
  const fs::path again = oracle::scratch_dir("stages_report");
  RunConfig r = config_in(again);
  r.input_path = out.string();
  run_stage("report", r);
  CHECK(oracle::slurp(again / "report" / "manifest.txt") ==
        oracle::slurp(out / "report" / "manifest.txt"));
}
