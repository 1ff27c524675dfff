#include "pca.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include "csv.hpp"
#include "error.hpp"

namespace cml {

namespace {

void apply_sign_convention(Matrix& components) {
  for (std::size_t i = 0; i < components.rows(); ++i) {
    auto row = components.row(i);
    double largest = 0.0;
    for (double x : row) largest = std::max(largest, std::abs(x));
    // Near-equal magnitudes count as a tie and resolve to the lowest index.
    const double tie = largest * (1.0 - 1e-12);
    for (double x : row) {
      if (std::abs(x) >= tie) {
        if (x < 0.0) {
          for (double& y : row) y = -y;
        }
        break;
      }
    }
  }
}

}  // namespace

PcaModel fit_pca(const Matrix& data, std::vector<std::string> feature_names) {
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  if (feature_names.size() != p) {
    throw Error(ErrorCode::Shape, "feature name count does not match data columns");
  }
  if (n < 2) {
    throw Error(ErrorCode::InsufficientData,
                "PCA needs at least 2 rows, got " + std::to_string(n));
  }
  if (p == 0) throw Error(ErrorCode::Dimensionality, "PCA needs at least one feature");

  bool any_spread = false;
  for (std::size_t c = 0; c < p && !any_spread; ++c) {
    for (std::size_t r = 1; r < n; ++r) {
      if (data(r, c) != data(0, c)) {
        any_spread = true;
        break;
      }
    }
  }
  if (!any_spread) {
    throw Error(ErrorCode::InsufficientVariance, "all rows are identical; no variance to explain");
  }

  PcaModel model;
  model.feature_names = std::move(feature_names);
  model.sample_count = n;
  model.center.assign(p, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < p; ++c) model.center[c] += data(r, c);
  }
  for (double& m : model.center) m /= static_cast<double>(n);

  Matrix centered(n, p);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < p; ++c) centered(r, c) = data(r, c) - model.center[c];
  }

  const SvdResult svd = jacobi_svd(centered);
  model.components = svd.right_vectors.transposed();
  apply_sign_convention(model.components);

  model.explained_variance.resize(p);
  for (std::size_t k = 0; k < p; ++k) {
    const double s = svd.singular_values[k];
    model.explained_variance[k] = s * s / static_cast<double>(n - 1);
  }
  const double total =
      std::accumulate(model.explained_variance.begin(), model.explained_variance.end(), 0.0);
  model.explained_variance_ratio.resize(p);
  for (std::size_t k = 0; k < p; ++k) {
    model.explained_variance_ratio[k] = model.explained_variance[k] / total;
  }
  return model;
}

Matrix to_matrix(const Table& table, std::span<const std::string> columns) {
  Matrix out(table.row_count(), columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& column = table.column(columns[c]);
    if (!column.is_numeric()) {
      throw Error(ErrorCode::Kind, "column '" + column.name() + "' is not numeric");
    }
    const auto& cells = column.numbers();
    for (std::size_t r = 0; r < cells.size(); ++r) {
      if (!cells[r]) {
        throw Error(ErrorCode::IncompleteData, "column '" + column.name() +
                                                   "' has a missing cell at row " +
                                                   std::to_string(r));
      }
      out(r, c) = *cells[r];
    }
  }
  return out;
}

PcaModel fit_pca(const Table& table, std::span<const std::string> columns) {
  return fit_pca(to_matrix(table, columns),
                 std::vector<std::string>(columns.begin(), columns.end()));
}

Matrix project(const PcaModel& model, const Matrix& data, std::size_t q) {
  const std::size_t p = model.feature_count();
  if (data.cols() != p) {
    throw Error(ErrorCode::Schema, "data has " + std::to_string(data.cols()) +
                                       " features, model expects " + std::to_string(p));
  }
  if (q == 0 || q > p) {
    throw Error(ErrorCode::Dimensionality,
                "q must be in [1, " + std::to_string(p) + "], got " + std::to_string(q));
  }
  Matrix scores(data.rows(), q);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t k = 0; k < q; ++k) {
      double sum = 0.0;
      for (std::size_t c = 0; c < p; ++c) {
        sum += (data(r, c) - model.center[c]) * model.components(k, c);
      }
      scores(r, k) = sum;
    }
  }
  return scores;
}

Matrix project(const PcaModel& model, const Table& table, std::size_t q) {
  for (const auto& name : model.feature_names) {
    if (!table.has_column(name)) {
      throw Error(ErrorCode::Schema, "table lacks model feature '" + name + "'");
    }
  }
  return project(model, to_matrix(table, model.feature_names), q);
}

Matrix reconstruct(const PcaModel& model, const Matrix& scores) {
  const std::size_t p = model.feature_count();
  const std::size_t q = scores.cols();
  if (q > p) throw Error(ErrorCode::Dimensionality, "more scores than components");
  Matrix out(scores.rows(), p);
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    for (std::size_t c = 0; c < p; ++c) {
      double sum = model.center[c];
      for (std::size_t k = 0; k < q; ++k) sum += scores(r, k) * model.components(k, c);
      out(r, c) = sum;
    }
  }
  return out;
}

std::vector<double> cumulative_ratio(const PcaModel& model) {
  // Partial sums of eigenvalues over their total, so the final entry is
  // exactly 1 and trailing zero eigenvalues never move it.
  const auto& ev = model.explained_variance;
  std::vector<double> partial(ev.size());
  std::partial_sum(ev.begin(), ev.end(), partial.begin());
  if (partial.empty()) return partial;
  const double total = partial.back();
  if (total <= 0.0) return model.explained_variance_ratio;
  for (double& x : partial) x /= total;
  return partial;
}

std::size_t components_for_threshold(const PcaModel& model, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::Domain, "variance threshold must lie in (0, 1]");
  }
  const auto cumulative = cumulative_ratio(model);
  for (std::size_t q = 0; q < cumulative.size(); ++q) {
    if (cumulative[q] >= threshold) return q + 1;
  }
  return cumulative.size();
}

BiplotData biplot_data(const PcaModel& model, const Matrix& data) {
  const std::size_t p = model.feature_count();
  if (p < 2) {
    throw Error(ErrorCode::Dimensionality, "biplot needs at least two features");
  }
  BiplotData out;
  out.scores = project(model, data, 2);
  out.loadings = Matrix(p, 2);
  for (std::size_t k = 0; k < 2; ++k) {
    const double scale = std::sqrt(std::max(0.0, model.explained_variance[k]));
    for (std::size_t c = 0; c < p; ++c) out.loadings(c, k) = model.components(k, c) * scale;
  }
  return out;
}

BiplotData biplot_data(const PcaModel& model, const Table& table) {
  if (model.feature_count() < 2) {
    throw Error(ErrorCode::Dimensionality, "biplot needs at least two features");
  }
  return biplot_data(model, to_matrix(table, model.feature_names));
}

namespace {

std::string join_numbers(std::span<const double> values) {
  std::string out;
  for (double v : values) {
    out.push_back(',');
    out += csv::format_significant(v, 17);
  }
  return out;
}

std::vector<double> parse_numbers(const csv::Record& record, std::size_t expected) {
  if (record.size() != expected + 1) {
    throw Error(ErrorCode::Parse, "PCA model line '" + record[0].text + "' has " +
                                      std::to_string(record.size() - 1) +
                                      " values, expected " + std::to_string(expected));
  }
  std::vector<double> values;
  for (std::size_t i = 1; i < record.size(); ++i) {
    const auto text = csv::trim(record[i].text);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
      throw Error(ErrorCode::Parse, "bad number '" + std::string(text) + "' in PCA model");
    }
    values.push_back(v);
  }
  return values;
}

}  // namespace

std::string pca_model_to_text(const PcaModel& model) {
  std::string out = "features";
  for (const auto& name : model.feature_names) out += "," + csv::escape(name);
  out += "\nsamples," + std::to_string(model.sample_count) + "\n";
  out += "center" + join_numbers(model.center) + "\n";
  out += "explained_variance" + join_numbers(model.explained_variance) + "\n";
  out += "explained_variance_ratio" + join_numbers(model.explained_variance_ratio) + "\n";
  for (std::size_t k = 0; k < model.components.rows(); ++k) {
    out += "component_" + std::to_string(k + 1) + join_numbers(model.components.row(k)) + "\n";
  }
  return out;
}

PcaModel read_pca_model(std::string_view text) {
  const auto records = csv::parse(text);
  std::map<std::string, csv::Record> lines;
  for (const auto& record : records) {
    if (record.empty() || record[0].text.empty()) continue;
    lines[record[0].text] = record;
  }
  auto require = [&](const std::string& key) -> const csv::Record& {
    auto it = lines.find(key);
    if (it == lines.end()) throw Error(ErrorCode::Parse, "PCA model lacks '" + key + "'");
    return it->second;
  };
  PcaModel model;
  const auto& features = require("features");
  for (std::size_t i = 1; i < features.size(); ++i) {
    model.feature_names.push_back(features[i].text);
  }
  const std::size_t p = model.feature_names.size();
  const auto samples = parse_numbers(require("samples"), 1);
  model.sample_count = static_cast<std::size_t>(samples[0]);
  model.center = parse_numbers(require("center"), p);
  model.explained_variance = parse_numbers(require("explained_variance"), p);
  model.explained_variance_ratio = parse_numbers(require("explained_variance_ratio"), p);
  model.components = Matrix(p, p);
  for (std::size_t k = 0; k < p; ++k) {
    const auto row = parse_numbers(require("component_" + std::to_string(k + 1)), p);
    std::copy(row.begin(), row.end(), model.components.row(k).begin());
  }
  return model;
}

}  // namespace cml
