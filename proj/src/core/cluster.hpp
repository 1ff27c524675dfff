#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "linalg.hpp"

namespace cml {

enum class KMeansInit { RandomPoints, PlusPlus };

struct KMeansOptions {
  int restarts = 10;
  int max_iter = 300;
  double tol = 1e-4;
  KMeansInit init = KMeansInit::RandomPoints;
  // Restarts run on this many threads; results do not depend on it.
  unsigned threads = 1;
};

struct KMeansModel {
  std::size_t k = 0;
  Matrix centroids;                      // k x d
  std::vector<std::size_t> assignments;  // one cluster index per row
  double inertia = 0.0;
  std::uint64_t seed = 0;
  int iterations_run = 0;
  int restarts = 0;
  int best_restart = 0;

  std::vector<std::size_t> cluster_sizes() const;
};

// One Lloyd run from fixed starting centroids. `inertia_trace` records the
// inertia after every assignment step, which never increases.
struct LloydRun {
  Matrix centroids;
  std::vector<std::size_t> assignments;
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> inertia_trace;
};

LloydRun lloyd(const Matrix& points, Matrix initial_centroids, int max_iter = 300,
               double tol = 1e-4);

// Best-of-restarts Lloyd. Restart r draws k distinct rows (or k-means++
// seeds) from the stream derive_seed(seed, r); the lowest-inertia restart
// wins, ties to the lower restart index.
KMeansModel kmeans_fit(const Matrix& points, std::size_t k, std::uint64_t seed,
                       const KMeansOptions& options = {});

// Index of the nearest centroid, ties to the lowest index.
std::size_t nearest_centroid(std::span<const double> point, const Matrix& centroids);

double inertia(const Matrix& points, const Matrix& centroids,
               std::span<const std::size_t> assignments);

std::size_t distinct_point_count(const Matrix& points);

struct ElbowCurve {
  std::vector<std::size_t> ks;
  std::vector<double> inertias;
  std::size_t chosen_k = 0;
};

struct ElbowSweep {
  ElbowCurve curve;
  std::vector<KMeansModel> models;  // parallel to curve.ks
};

// Interior k with the largest perpendicular distance from (k, inertia) to the
// chord through the first and last points; ties (relative 1e-12) go to the
// smaller k. With no interior point the first k is returned.
std::size_t choose_elbow(std::span<const std::size_t> ks, std::span<const double> inertias);

// Fits every k in [k_min, k_max]. From the second k on, one extra candidate
// starts from the previous best centroids plus the point farthest from its
// centroid, so the curve is non-increasing.
ElbowSweep elbow_sweep(const Matrix& points, std::size_t k_min, std::size_t k_max,
                       std::uint64_t seed, const KMeansOptions& options = {});

// The m rows of `cluster` closest to its centroid, nearest first, ties to
// the lower row index.
std::vector<std::size_t> nearest_to_centroid(const KMeansModel& model, const Matrix& points,
                                             std::size_t cluster, std::size_t m);

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

std::string elbow_to_csv(const ElbowCurve& curve);
std::string kmeans_model_to_text(const KMeansModel& model);

}  // namespace cml
