#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <tuple>

#include "error.hpp"
#include "json.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace cml {

void validate(const SynthSpec& spec) {
  if (spec.archetypes.empty()) throw Error(ErrorCode::Spec, "synthetic spec has no archetypes");
  if (spec.n_rows == 0) throw Error(ErrorCode::Spec, "synthetic spec needs n_rows > 0");
  if (!(spec.categorical_noise >= 0.0 && spec.categorical_noise < 1.0)) {
    throw Error(ErrorCode::Spec, "categorical_noise must lie in [0, 1)");
  }
  std::set<std::string> names;
  for (const auto& column : spec.columns) {
    if (!names.insert(column.name).second) {
      throw Error(ErrorCode::Spec, "duplicate synthetic column '" + column.name + "'");
    }
  }
  double total = 0.0;
  for (const auto& a : spec.archetypes) {
    if (!(a.weight > 0.0 && a.weight <= 1.0)) {
      throw Error(ErrorCode::Spec, "archetype " + std::to_string(a.label) +
                                       " weight must lie in (0, 1]");
    }
    total += a.weight;
    for (const auto& column : spec.columns) {
      const std::string where =
          "archetype " + std::to_string(a.label) + " column '" + column.name + "'";
      if (column.kind == ColumnKind::Categorical && !a.categorical_values.contains(column.name)) {
        throw Error(ErrorCode::Spec, where + " has no category");
      }
      if (column.kind == ColumnKind::Numeric) {
        if (!a.numeric_means.contains(column.name) || !a.numeric_stds.contains(column.name)) {
          throw Error(ErrorCode::Spec, where + " needs a mean and a std");
        }
        if (!(a.numeric_stds.at(column.name) > 0.0)) {
          throw Error(ErrorCode::Spec, where + " std must be positive");
        }
      }
    }
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::Spec, "archetype weights sum to " + std::to_string(total) + ", not 1");
  }
  for (const auto& [name, rate] : spec.missing_rates) {
    const auto it = std::find_if(spec.columns.begin(), spec.columns.end(),
                                 [&](const SynthColumn& c) { return c.name == name; });
    if (it == spec.columns.end()) {
      throw Error(ErrorCode::Spec, "missing rate for unknown column '" + name + "'");
    }
    if (!(rate >= 0.0 && rate < 1.0)) {
      throw Error(ErrorCode::Spec, "missing rate for '" + name + "' must lie in [0, 1)");
    }
    if (it->role == ColumnRole::Dependent && rate > 0.0 && !spec.allow_dependent_missing) {
      throw Error(ErrorCode::Spec, "dependent column '" + name +
                                       "' has a missing rate but allow_dependent_missing is off");
    }
  }
}

Table inject_missing(const Table& table, const std::map<std::string, double>& rates,
                     std::uint64_t seed) {
  for (const auto& [name, rate] : rates) {
    if (!table.has_column(name)) {
      throw Error(ErrorCode::Spec, "missing rate for unknown column '" + name + "'");
    }
    if (!(rate >= 0.0 && rate < 1.0)) {
      throw Error(ErrorCode::Spec, "missing rate for '" + name + "' must lie in [0, 1)");
    }
  }
  SplitMix64 rng(seed);
  std::vector<Column> columns;
  for (const auto& column : table.columns()) {
    const auto it = rates.find(column.name());
    if (it == rates.end()) {
      columns.push_back(column);
      continue;
    }
    const double rate = it->second;
    if (column.is_numeric()) {
      NumericCells cells = column.numbers();
      for (auto& cell : cells) {
        if (rng.uniform() < rate) cell.reset();
      }
      columns.push_back(Column::numeric(column.name(), column.role(), std::move(cells)));
    } else {
      TextCells cells = column.texts();
      for (auto& cell : cells) {
        if (rng.uniform() < rate) cell.reset();
      }
      columns.push_back(
          Column::text(column.name(), column.kind(), column.role(), std::move(cells)));
    }
  }
  return Table(std::move(columns));
}

SynthResult generate(const SynthSpec& spec) {
  validate(spec);
  const std::size_t n = spec.n_rows;
  SplitMix64 rng(derive_seed(spec.seed, 0));

  std::map<std::string, std::vector<std::string>> pools;
  for (const auto& column : spec.columns) {
    if (column.kind != ColumnKind::Categorical) continue;
    std::set<std::string> values;
    for (const auto& a : spec.archetypes) values.insert(a.categorical_values.at(column.name));
    pools[column.name] = {values.begin(), values.end()};
  }

  std::vector<NumericCells> numeric(spec.columns.size());
  std::vector<TextCells> text(spec.columns.size());
  for (std::size_t c = 0; c < spec.columns.size(); ++c) {
    if (spec.columns[c].kind == ColumnKind::Numeric) {
      numeric[c].resize(n);
    } else {
      text[c].resize(n);
    }
  }

  SynthResult result;
  result.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    double u = rng.uniform();
    std::size_t pick = spec.archetypes.size() - 1;
    for (std::size_t a = 0; a < spec.archetypes.size(); ++a) {
      if (u < spec.archetypes[a].weight) {
        pick = a;
        break;
      }
      u -= spec.archetypes[a].weight;
    }
    const auto& archetype = spec.archetypes[pick];
    result.labels[r] = archetype.label;

    for (std::size_t c = 0; c < spec.columns.size(); ++c) {
      const auto& column = spec.columns[c];
      switch (column.kind) {
        case ColumnKind::Identifier: {
          char id[32];
          std::snprintf(id, sizeof id, "_%04zu", r + 1);
          text[c][r] = column.name + id;
          break;
        }
        case ColumnKind::Numeric: {
          double x = rng.normal(archetype.numeric_means.at(column.name),
                                archetype.numeric_stds.at(column.name));
          if (column.count_like) x = std::max(0.0, x);
          numeric[c][r] = x;
          break;
        }
        case ColumnKind::Categorical: {
          const auto& pool = pools.at(column.name);
          std::string value = archetype.categorical_values.at(column.name);
          if (spec.categorical_noise > 0.0 && rng.uniform() < spec.categorical_noise) {
            value = pool[static_cast<std::size_t>(rng.below(pool.size()))];
          }
          text[c][r] = std::move(value);
          break;
        }
      }
    }
  }

  std::vector<Column> columns;
  for (std::size_t c = 0; c < spec.columns.size(); ++c) {
    const auto& column = spec.columns[c];
    if (column.kind == ColumnKind::Numeric) {
      columns.push_back(Column::numeric(column.name, column.role, std::move(numeric[c])));
    } else {
      columns.push_back(Column::text(column.name, column.kind, column.role, std::move(text[c])));
    }
  }
  result.table = inject_missing(Table(std::move(columns)), spec.missing_rates,
                                derive_seed(spec.seed, 1));
  return result;
}

SynthSpec default_fcd_spec(std::size_t n_rows, std::uint64_t seed) {
  using K = ColumnKind;
  using R = ColumnRole;
  SynthSpec spec;
  spec.n_rows = n_rows;
  spec.seed = seed;
  spec.categorical_noise = 0.05;
  spec.columns = {
      {"campaign", K::Identifier, R::Identifier, false},
      {"cf_total_days", K::Numeric, R::Independent, true},
      {"cf_total_seconds", K::Numeric, R::Independent, true},
      {"cf_type", K::Categorical, R::Independent, false},
      {"giveaways_categories", K::Categorical, R::Independent, false},
      {"giveaways_totals", K::Numeric, R::Independent, true},
      {"pt_categories", K::Categorical, R::Independent, false},
      {"pt_totals", K::Numeric, R::Independent, true},
      {"fm_categories", K::Categorical, R::Independent, false},
      {"fm_total", K::Numeric, R::Independent, true},
      {"sch_categories", K::Categorical, R::Independent, false},
      {"sch_total", K::Numeric, R::Independent, true},
      {"ad_categories", K::Categorical, R::Independent, false},
      {"ad_total", K::Numeric, R::Independent, true},
      {"schm_total", K::Numeric, R::Dependent, true},
      {"schp_total", K::Numeric, R::Dependent, true},
      {"sche_total", K::Numeric, R::Dependent, true},
  };

  struct Profile {
    const char* fm;
    const char* giveaways;
    const char* cf_type;
    const char* ad_category;
    double days, giveaways_totals, pt_totals, fm_total, ad_total;
    double messages, participations, engagements;
  };
  // Campaign days, allocated deliveries and participations follow the
  // reference cluster profile; the remaining columns are free parameters,
  // placed so each archetype owns a similar number of column tails and
  // sequential trimming thins the archetypes evenly.
  const Profile profiles[3] = {
      {"Delivery", "Delivery Network 1", "Standard", "Local", 3.00, 150.0, 25.0, 120.0, 791.66, 5200.0,
       3367.00, 2100.0},
      {"Delivery + Mailed", "Delivery Network 1, 2", "Flash", "National", 1.57, 400.0, 12.0, 350.0,
       1267.14, 6100.0, 3984.71, 2500.0},
      {"Delivery", "Delivery Network 3", "Standard", "Local", 2.14, 900.0, 40.0, 800.0, 379.33, 1600.0,
       1018.28, 700.0},
  };
  constexpr double feature_sd = 0.02;
  constexpr double dependent_sd = 0.002;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& p = profiles[i];
    ClusterArchetype a;
    a.label = i;
    a.weight = 1.0 / 3.0;
    a.categorical_values = {{"cf_type", p.cf_type},
                            {"giveaways_categories", p.giveaways},
                            {"pt_categories", "Delivery"},
                            {"fm_categories", p.fm},
                            {"sch_categories", "Twitter"},
                            {"ad_categories", p.ad_category}};
    const std::tuple<const char*, double, double> columns[] = {
        {"cf_total_days", p.days, feature_sd},
        {"cf_total_seconds", p.days * 86400.0, feature_sd},
        {"giveaways_totals", p.giveaways_totals, feature_sd},
        {"pt_totals", p.pt_totals, feature_sd},
        {"fm_total", p.fm_total, feature_sd},
        {"ad_total", p.ad_total, feature_sd},
        {"schm_total", p.messages, dependent_sd},
        {"schp_total", p.participations, dependent_sd},
        {"sche_total", p.engagements, dependent_sd},
    };
    for (const auto& [name, mean, relative_sd] : columns) {
      a.numeric_means[name] = mean;
      a.numeric_stds[name] = relative_sd * mean;
    }
    // Shared across archetypes: this column carries no cluster signal.
    a.numeric_means["sch_total"] = 2.0;
    a.numeric_stds["sch_total"] = 0.2;
    spec.archetypes.push_back(std::move(a));
  }
  // Non-null counts 646, 729 and 591 of 907 for the giveaway, fulfillment
  // and allocated-delivery column pairs.
  spec.missing_rates = {
      {"giveaways_categories", 1.0 - 646.0 / 907.0}, {"giveaways_totals", 1.0 - 646.0 / 907.0},
      {"fm_categories", 1.0 - 729.0 / 907.0},        {"fm_total", 1.0 - 729.0 / 907.0},
      {"ad_categories", 1.0 - 591.0 / 907.0},        {"ad_total", 1.0 - 591.0 / 907.0},
  };
  return spec;
}

std::map<std::string, double> dependent_missing_rates() {
  // 907 message, 654 participation and 612 engagement records.
  return {{"schm_total", 0.0},
          {"schp_total", 1.0 - 654.0 / 907.0},
          {"sche_total", 1.0 - 612.0 / 907.0}};
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  nlohmann::ordered_json j;
  j["n_rows"] = spec.n_rows;
  j["seed"] = spec.seed;
  j["categorical_noise"] = spec.categorical_noise;
  j["allow_dependent_missing"] = spec.allow_dependent_missing;
  j["columns"] = nlohmann::ordered_json::array();
  for (const auto& c : spec.columns) {
    j["columns"].push_back({{"name", c.name},
                            {"kind", to_string(c.kind)},
                            {"role", to_string(c.role)},
                            {"count_like", c.count_like}});
  }
  j["archetypes"] = nlohmann::ordered_json::array();
  for (const auto& a : spec.archetypes) {
    j["archetypes"].push_back({{"label", a.label},
                               {"weight", a.weight},
                               {"categorical_values", a.categorical_values},
                               {"numeric_means", a.numeric_means},
                               {"numeric_stds", a.numeric_stds}});
  }
  j["missing_rates"] = spec.missing_rates;
  return j.dump(2) + "\n";
}

SynthSpec synth_spec_from_json(std::string_view text) {
  SynthSpec spec;
  try {
    const auto j = nlohmann::json::parse(text);
    spec.n_rows = j.at("n_rows").get<std::size_t>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.categorical_noise = j.value("categorical_noise", 0.0);
    spec.allow_dependent_missing = j.value("allow_dependent_missing", false);
    for (const auto& c : j.at("columns")) {
      spec.columns.push_back({c.at("name").get<std::string>(),
                              parse_kind(c.at("kind").get<std::string>()),
                              parse_role(c.at("role").get<std::string>()),
                              c.value("count_like", false)});
    }
    for (const auto& a : j.at("archetypes")) {
      ClusterArchetype archetype;
      archetype.label = a.at("label").get<std::size_t>();
      archetype.weight = a.at("weight").get<double>();
      archetype.categorical_values =
          a.value("categorical_values", std::map<std::string, std::string>{});
      archetype.numeric_means = a.value("numeric_means", std::map<std::string, double>{});
      archetype.numeric_stds = a.value("numeric_stds", std::map<std::string, double>{});
      spec.archetypes.push_back(std::move(archetype));
    }
    spec.missing_rates = j.value("missing_rates", std::map<std::string, double>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Spec, std::string("invalid synthetic spec: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::Spec, std::string("invalid synthetic spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

Table generate_latent(const LatentSpec& spec) {
  const std::size_t p = spec.variance_shares.size();
  if (p == 0) throw Error(ErrorCode::Spec, "latent spec needs at least one variance share");
  if (spec.n_rows < 2) throw Error(ErrorCode::Spec, "latent spec needs at least 2 rows");
  for (double s : spec.variance_shares) {
    if (!(s >= 0.0)) throw Error(ErrorCode::Spec, "variance shares must be non-negative");
  }
  SplitMix64 rng(derive_seed(spec.seed, 0));

  // Random orthonormal basis by Gram-Schmidt on Gaussian vectors.
  Matrix basis(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (;;) {
      auto row = basis.row(i);
      for (double& x : row) x = rng.normal();
      for (std::size_t j = 0; j < i; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < p; ++c) dot += row[c] * basis(j, c);
        for (std::size_t c = 0; c < p; ++c) row[c] -= dot * basis(j, c);
      }
      double norm = 0.0;
      for (double x : row) norm += x * x;
      norm = std::sqrt(norm);
      if (norm < 1e-8) continue;
      for (double& x : row) x /= norm;
      break;
    }
  }

  std::vector<double> scale(p);
  for (std::size_t k = 0; k < p; ++k) {
    scale[k] = std::sqrt(spec.variance_shares[k] * static_cast<double>(p));
  }
  std::vector<NumericCells> cells(p, NumericCells(spec.n_rows));
  std::vector<double> latent(p);
  for (std::size_t r = 0; r < spec.n_rows; ++r) {
    for (std::size_t k = 0; k < p; ++k) latent[k] = scale[k] * rng.normal();
    for (std::size_t c = 0; c < p; ++c) {
      double x = 0.0;
      for (std::size_t k = 0; k < p; ++k) x += latent[k] * basis(k, c);
      cells[c][r] = x;
    }
  }
  std::vector<Column> columns;
  for (std::size_t c = 0; c < p; ++c) {
    columns.push_back(Column::numeric(spec.prefix + "_" + std::to_string(c + 1),
                                      ColumnRole::Independent, std::move(cells[c])));
  }
  return Table(std::move(columns));
}

LatentSpec variance_profile_spec() {
  LatentSpec spec;
  spec.n_rows = 2000;
  spec.variance_shares = {0.55, 0.33, 0.05, 0.03, 0.02, 0.01, 0.01};
  spec.seed = 7;
  spec.prefix = "feature";
  return spec;
}

}  // namespace cml
