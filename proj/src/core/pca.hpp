#pragma once

#include <span>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "tabular.hpp"

namespace cml {

// Principal components of a centered data matrix.
//
// `components` holds one loading vector per row, ordered by decreasing
// eigenvalue; in each row the largest-magnitude loading is positive (ties go
// to the lowest feature index). Eigenvalues are squared singular values of
// the centered data divided by n - 1.
struct PcaModel {
  std::vector<std::string> feature_names;
  std::vector<double> center;
  Matrix components;
  std::vector<double> explained_variance;
  std::vector<double> explained_variance_ratio;
  std::size_t sample_count = 0;

  std::size_t feature_count() const noexcept { return feature_names.size(); }
};

PcaModel fit_pca(const Matrix& data, std::vector<std::string> feature_names);
PcaModel fit_pca(const Table& table, std::span<const std::string> columns);

// Rows of `table` as a dense matrix over `columns`. Throws IncompleteData
// when a cell is missing and Kind for non-numeric columns.
Matrix to_matrix(const Table& table, std::span<const std::string> columns);

// Scores on the first q components: (X - center) * components^T.
Matrix project(const PcaModel& model, const Matrix& data, std::size_t q);
Matrix project(const PcaModel& model, const Table& table, std::size_t q);

// Inverse map of `scores` (n x q) back into feature space.
Matrix reconstruct(const PcaModel& model, const Matrix& scores);

// Smallest q whose cumulative explained-variance ratio reaches `threshold`.
std::size_t components_for_threshold(const PcaModel& model, double threshold);

std::vector<double> cumulative_ratio(const PcaModel& model);

struct BiplotData {
  Matrix scores;    // n x 2
  Matrix loadings;  // p x 2, loading scaled by sqrt(eigenvalue)
};

BiplotData biplot_data(const PcaModel& model, const Matrix& data);
BiplotData biplot_data(const PcaModel& model, const Table& table);

// Text form with 17 significant digits; read_pca_model inverts it.
std::string pca_model_to_text(const PcaModel& model);
PcaModel read_pca_model(std::string_view text);

}  // namespace cml
