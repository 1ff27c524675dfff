#include "doctest.h"

#include <cmath>
#include <vector>

#include "error.hpp"
#include "oracle.hpp"
#include "synth.hpp"

using namespace cml;

namespace {

SynthSpec one_column_spec(std::size_t n, double mean, double sd) {
  SynthSpec spec;
  spec.n_rows = n;
  spec.columns = {{"id", ColumnKind::Identifier, ColumnRole::Identifier, false},
                  {"x", ColumnKind::Numeric, ColumnRole::Independent, false},
                  {"g", ColumnKind::Categorical, ColumnRole::Independent, false}};
  for (std::size_t a = 0; a < 3; ++a) {
    ClusterArchetype arch;
    arch.label = a;
    arch.weight = 1.0 / 3.0;
    arch.numeric_means["x"] = mean + 1000.0 * double(a);
    arch.numeric_stds["x"] = sd;
    arch.categorical_values["g"] = "group " + std::to_string(a);
    spec.archetypes.push_back(arch);
  }
  return spec;
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

TEST_CASE("equal weights give balanced cluster counts") {
  const SynthResult r = generate(default_fcd_spec(900, 42));
  std::vector<std::size_t> counts(3, 0);
  for (std::size_t label : r.labels) ++counts[label];
  for (std::size_t c : counts) {
    CHECK(c >= 270);
    CHECK(c <= 330);
  }
}

TEST_CASE("cluster sample means converge to the archetype mean") {
  const SynthResult r = generate(one_column_spec(3000, 3367.0, 50.0));
  std::vector<double> first;
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    if (r.labels[i] == 0) first.push_back(*r.table.column("x").numbers()[i]);
  }
  CHECK(std::abs(oracle::mean(first) - 3367.0) <= 5.0);
}

TEST_CASE("without noise every categorical cell is its archetype value") {
  const SynthResult r = generate(one_column_spec(300, 10.0, 1.0));
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    CHECK(*r.table.column("g").texts()[i] == "group " + std::to_string(r.labels[i]));
    CHECK(*r.table.column("id").texts()[i] == "id_" + std::string(i + 1 < 10 ? "000" : i + 1 < 100 ? "00" : "0") + std::to_string(i + 1));
  }
}

TEST_CASE("generation is bit-deterministic") {
  const SynthResult a = generate(default_fcd_spec(500, 9));
  const SynthResult b = generate(default_fcd_spec(500, 9));
  CHECK(to_csv(a.table) == to_csv(b.table));
  CHECK(a.labels == b.labels);
  const SynthResult c = generate(default_fcd_spec(500, 10));
  CHECK(to_csv(a.table) != to_csv(c.table));
}

TEST_CASE("count-like columns are never negative") {
  SynthSpec spec = one_column_spec(600, 0.0, 5.0);
  spec.columns[1].count_like = true;
  const SynthResult r = generate(spec);
  for (double v : r.table.column("x").present_values()) CHECK(v >= 0.0);
}

TEST_CASE("missing injection rates") {
  const Table t = generate(one_column_spec(907, 10.0, 1.0)).table;
  const Table same = inject_missing(t, {{"x", 0.0}}, 1);
  CHECK(to_csv(same) == to_csv(t));
  const Table gappy = inject_missing(t, {{"x", 0.2878}}, 1);
  const std::size_t present = gappy.column("x").present_count();
  CHECK(present >= 620);
  CHECK(present <= 672);
  CHECK(gappy.column("g").present_count() == 907);
  CHECK(code_of([&] { inject_missing(t, {{"nope", 0.1}}, 1); }) == ErrorCode::Spec);
  CHECK(code_of([&] { inject_missing(t, {{"x", 1.0}}, 1); }) == ErrorCode::Spec);
}

TEST_CASE("injection never touches unlisted columns") {
  const Table t = generate(default_fcd_spec(400, 5)).table;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Table gappy = inject_missing(t, {{"fm_total", 0.5}}, seed);
    for (const auto& column : t.columns()) {
      if (column.name() == "fm_total") continue;
      CHECK(gappy.column(column.name()).present_count() == column.present_count());
    }
  }
}

TEST_CASE("spec validation") {
  SynthSpec empty = one_column_spec(10, 1.0, 1.0);
  empty.archetypes.clear();
  CHECK(code_of([&] { generate(empty); }) == ErrorCode::Spec);

  SynthSpec weights = one_column_spec(10, 1.0, 1.0);
  weights.archetypes[0].weight = 0.9;
  CHECK(code_of([&] { validate(weights); }) == ErrorCode::Spec);

  SynthSpec sd = one_column_spec(10, 1.0, 1.0);
  sd.archetypes[1].numeric_stds["x"] = 0.0;
  CHECK(code_of([&] { validate(sd); }) == ErrorCode::Spec);

  SynthSpec dependent = default_fcd_spec(10, 1);
  dependent.missing_rates["schp_total"] = 0.1;
  CHECK(code_of([&] { validate(dependent); }) == ErrorCode::Spec);
  dependent.allow_dependent_missing = true;
  CHECK_NOTHROW(validate(dependent));

  const SynthSpec fcd = default_fcd_spec();
  double total = 0.0;
  for (const auto& a : fcd.archetypes) total += a.weight;
  CHECK(std::abs(total - 1.0) <= 1e-9);
}

TEST_CASE("default spec mirrors the reference cluster profile") {
  const SynthSpec spec = default_fcd_spec();
  REQUIRE(spec.archetypes.size() == 3);
  CHECK(spec.archetypes[0].categorical_values.at("fm_categories") == "Delivery");
  CHECK(spec.archetypes[1].categorical_values.at("fm_categories") == "Delivery + Mailed");
  CHECK(spec.archetypes[2].categorical_values.at("fm_categories") == "Delivery");
  CHECK(spec.archetypes[0].numeric_means.at("schp_total") == 3367.0);
  CHECK(spec.archetypes[2].numeric_means.at("schp_total") == 1018.28);
}

TEST_CASE("spec json round trip") {
  const SynthSpec spec = default_fcd_spec(123, 77);
  const std::string json = synth_spec_to_json(spec);
  const SynthSpec back = synth_spec_from_json(json);
  CHECK(synth_spec_to_json(back) == json);
  CHECK(to_csv(generate(back).table) == to_csv(generate(spec).table));
  CHECK_THROWS_AS(synth_spec_from_json("{not json"), Error);
}

TEST_CASE("latent generator honours variance shares") {
  LatentSpec spec;
  spec.n_rows = 4000;
  spec.variance_shares = {0.7, 0.2, 0.1};
  const Table t = generate_latent(spec);
  CHECK(t.row_count() == 4000);
  CHECK(t.column_count() == 3);
  double total = 0.0;
  for (const auto& c : t.columns()) total += std::pow(oracle::sample_std(c.present_values()), 2);
  CHECK(total == doctest::Approx(3.0).epsilon(0.1));
}
