#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tabular.hpp"

namespace cml {

struct SynthColumn {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  ColumnRole role = ColumnRole::Independent;
  bool count_like = false;  // numeric draws are truncated at zero
};

struct ClusterArchetype {
  std::size_t label = 0;
  double weight = 1.0;
  std::map<std::string, std::string> categorical_values;
  std::map<std::string, double> numeric_means;
  std::map<std::string, double> numeric_stds;
};

struct SynthSpec {
  std::size_t n_rows = 900;
  std::vector<SynthColumn> columns;
  std::vector<ClusterArchetype> archetypes;
  std::map<std::string, double> missing_rates;
  double categorical_noise = 0.0;  // chance a categorical cell is redrawn uniformly
  std::uint64_t seed = 42;
  bool allow_dependent_missing = false;
};

// Throws Spec on any inconsistency: no archetypes, weights not summing to 1,
// archetypes lacking a column, non-positive stds, unknown or out-of-range
// missing rates, or a missing rate on a dependent column without opt-in.
void validate(const SynthSpec& spec);

struct SynthResult {
  Table table;
  std::vector<std::size_t> labels;  // planted archetype label per row
};

// Rows draw an archetype by weight, then each column in order: numeric
// cells ~ Normal(mean, std) (truncated at 0 when count-like), categorical
// cells take the archetype value unless redrawn by categorical_noise.
// Identifier columns get `<name>_<row>`. Missingness is injected last from
// an independent stream.
SynthResult generate(const SynthSpec& spec);

// Blanks each cell of every listed column independently with that column's
// rate. Rates must lie in [0, 1) and name existing columns.
Table inject_missing(const Table& table, const std::map<std::string, double>& rates,
                     std::uint64_t seed);

// Three archetypes with the reference cluster profile (fulfillment method,
// giveaway network, campaign days, allocated deliveries, participations)
// and column missingness matching the reference non-null counts.
SynthSpec default_fcd_spec(std::size_t n_rows = 900, std::uint64_t seed = 42);

// Missing rates reproducing the reference per-target record counts on the
// three dependent columns (messages, participations, engagements).
std::map<std::string, double> dependent_missing_rates();

std::string synth_spec_to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(std::string_view text);

// Gaussian table whose covariance has prescribed eigenvalue shares along a
// random orthonormal basis.
struct LatentSpec {
  std::size_t n_rows = 2000;
  std::vector<double> variance_shares;
  std::uint64_t seed = 7;
  std::string prefix = "x";
};

Table generate_latent(const LatentSpec& spec);

// Reference variance profile: the first two components explain about 88%,
// four components pass 95%.
LatentSpec variance_profile_spec();

}  // namespace cml
