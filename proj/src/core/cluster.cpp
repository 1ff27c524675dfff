#include "cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "csv.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace cml {

std::vector<std::size_t> KMeansModel::cluster_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t a : assignments) ++sizes.at(a);
  return sizes;
}

std::size_t nearest_centroid(std::span<const double> point, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(point, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double inertia(const Matrix& points, const Matrix& centroids,
               std::span<const std::size_t> assignments) {
  if (assignments.size() != points.rows()) {
    throw Error(ErrorCode::Shape, "assignment count does not match point count");
  }
  if (centroids.cols() != points.cols()) {
    throw Error(ErrorCode::Shape, "centroid dimension does not match point dimension");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (assignments[i] >= centroids.rows()) {
      throw Error(ErrorCode::Assignment, "row " + std::to_string(i) + " is assigned to cluster " +
                                             std::to_string(assignments[i]) + " of " +
                                             std::to_string(centroids.rows()));
    }
    sum += squared_distance(points.row(i), centroids.row(assignments[i]));
  }
  return sum;
}

std::size_t distinct_point_count(const Matrix& points) {
  std::set<std::vector<double>> distinct;
  for (std::size_t r = 0; r < points.rows(); ++r) {
    const auto row = points.row(r);
    distinct.emplace(row.begin(), row.end());
  }
  return distinct.size();
}

namespace {

// Returns true when any assignment changed.
bool assign_all(const Matrix& points, const Matrix& centroids,
                std::vector<std::size_t>& assignments) {
  bool changed = false;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const std::size_t c = nearest_centroid(points.row(i), centroids);
    if (c != assignments[i]) {
      assignments[i] = c;
      changed = true;
    }
  }
  return changed;
}

// Reseeds one empty cluster at the point farthest from its own centroid
// (among clusters with at least two members). Returns false when nothing
// was empty.
bool repair_one_empty(const Matrix& points, Matrix& centroids,
                      std::vector<std::size_t>& assignments) {
  const std::size_t k = centroids.rows();
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t a : assignments) ++sizes[a];
  const auto empty = std::find(sizes.begin(), sizes.end(), std::size_t{0});
  if (empty == sizes.end()) return false;
  const auto target = static_cast<std::size_t>(empty - sizes.begin());

  std::size_t far = points.rows();
  double far_d = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (sizes[assignments[i]] < 2) continue;
    const double d = squared_distance(points.row(i), centroids.row(assignments[i]));
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  if (far == points.rows()) {
    throw Error(ErrorCode::Cardinality,
                "cannot repair an empty cluster: fewer distinct points than clusters");
  }
  std::copy_n(points.row(far).begin(), points.cols(), centroids.row(target).begin());
  assignments[far] = target;
  return true;
}

bool assign_and_repair(const Matrix& points, Matrix& centroids,
                       std::vector<std::size_t>& assignments) {
  bool changed = assign_all(points, centroids, assignments);
  while (repair_one_empty(points, centroids, assignments)) {
    assign_all(points, centroids, assignments);
    changed = true;
  }
  return changed;
}

double update_centroids(const Matrix& points, Matrix& centroids,
                        const std::vector<std::size_t>& assignments) {
  const std::size_t k = centroids.rows();
  const std::size_t d = points.cols();
  Matrix sums(k, d);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto target = sums.row(assignments[i]);
    const auto point = points.row(i);
    for (std::size_t j = 0; j < d; ++j) target[j] += point[j];
    ++counts[assignments[i]];
  }
  double max_shift = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    auto row = sums.row(c);
    for (double& x : row) x /= static_cast<double>(counts[c]);
    max_shift = std::max(max_shift, std::sqrt(squared_distance(row, centroids.row(c))));
    std::copy(row.begin(), row.end(), centroids.row(c).begin());
  }
  return max_shift;
}

Matrix random_point_init(const Matrix& points, std::size_t k, SplitMix64& rng) {
  std::vector<std::size_t> indices(points.rows());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(indices.size() - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(k);
  return points.select_rows(indices);
}

Matrix plus_plus_init(const Matrix& points, std::size_t k, SplitMix64& rng) {
  const std::size_t n = points.rows();
  std::vector<std::size_t> chosen{static_cast<std::size_t>(rng.below(n))};
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (chosen.size() < k) {
    const auto last = points.row(chosen.back());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), last));
      total += d2[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        target -= d2[i];
        pick = i;
        if (target < 0.0) break;
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(n));
    }
    chosen.push_back(pick);
  }
  return points.select_rows(chosen);
}

void validate_points(const Matrix& points) {
  for (double x : points.data()) {
    if (!std::isfinite(x)) throw Error(ErrorCode::Domain, "points contain a non-finite value");
  }
}

}  // namespace

LloydRun lloyd(const Matrix& points, Matrix initial_centroids, int max_iter, double tol) {
  if (initial_centroids.cols() != points.cols()) {
    throw Error(ErrorCode::Shape, "centroid dimension does not match point dimension");
  }
  LloydRun run;
  run.centroids = std::move(initial_centroids);
  run.assignments.assign(points.rows(), std::numeric_limits<std::size_t>::max());
  for (;;) {
    const bool changed = assign_and_repair(points, run.centroids, run.assignments);
    run.inertia = inertia(points, run.centroids, run.assignments);
    run.inertia_trace.push_back(run.inertia);
    if (run.iterations > 0 && !changed) break;
    if (run.iterations >= max_iter) break;
    const double shift = update_centroids(points, run.centroids, run.assignments);
    ++run.iterations;
    if (shift < tol) {
      assign_and_repair(points, run.centroids, run.assignments);
      run.inertia = inertia(points, run.centroids, run.assignments);
      run.inertia_trace.push_back(run.inertia);
      break;
    }
  }
  return run;
}

KMeansModel kmeans_fit(const Matrix& points, std::size_t k, std::uint64_t seed,
                       const KMeansOptions& options) {
  if (k == 0) throw Error(ErrorCode::Domain, "k must be positive");
  if (k > points.rows()) {
    throw Error(ErrorCode::Cardinality, "k=" + std::to_string(k) + " exceeds the " +
                                            std::to_string(points.rows()) + " points");
  }
  if (options.restarts < 1) throw Error(ErrorCode::Domain, "restarts must be positive");
  validate_points(points);
  if (distinct_point_count(points) < k) {
    throw Error(ErrorCode::Cardinality,
                "k=" + std::to_string(k) + " exceeds the number of distinct points");
  }

  const auto restarts = static_cast<std::size_t>(options.restarts);
  std::vector<LloydRun> runs(restarts);
  auto run_one = [&](std::size_t r) {
    SplitMix64 rng(derive_seed(seed, r));
    Matrix init = options.init == KMeansInit::PlusPlus ? plus_plus_init(points, k, rng)
                                                       : random_point_init(points, k, rng);
    runs[r] = lloyd(points, std::move(init), options.max_iter, options.tol);
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads,
                                                           static_cast<unsigned>(restarts)));
  if (threads == 1) {
    for (std::size_t r = 0; r < restarts; ++r) run_one(r);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t r = t; r < restarts; r += threads) run_one(r);
        } catch (...) {
          failures[t] = std::current_exception();
        }
      });
    }
    for (auto& worker : pool) worker.join();
    for (auto& failure : failures) {
      if (failure) std::rethrow_exception(failure);
    }
  }

  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r) {
    if (runs[r].inertia < runs[best].inertia) best = r;
  }
  KMeansModel model;
  model.k = k;
  model.centroids = std::move(runs[best].centroids);
  model.assignments = std::move(runs[best].assignments);
  model.inertia = runs[best].inertia;
  model.seed = seed;
  model.iterations_run = runs[best].iterations;
  model.restarts = options.restarts;
  model.best_restart = static_cast<int>(best);
  return model;
}

std::size_t choose_elbow(std::span<const std::size_t> ks, std::span<const double> inertias) {
  if (ks.size() != inertias.size() || ks.empty()) {
    throw Error(ErrorCode::Shape, "elbow curve needs matching, non-empty k and inertia lists");
  }
  if (ks.size() < 3) return ks.front();
  const double x0 = static_cast<double>(ks.front());
  const double y0 = inertias.front();
  const double x1 = static_cast<double>(ks.back());
  const double y1 = inertias.back();
  // |cross| / chord length; the length is shared, so compare the cross term.
  const double tie = 1e-12 * (std::abs(y0) + std::abs(y1)) * (x1 - x0);
  std::size_t best = 1;
  double best_d = -1.0;
  for (std::size_t i = 1; i + 1 < ks.size(); ++i) {
    const double x = static_cast<double>(ks[i]);
    const double d = std::abs((y1 - y0) * x - (x1 - x0) * inertias[i] + x1 * y0 - y1 * x0);
    if (d > best_d + tie) {
      best_d = d;
      best = i;
    }
  }
  return ks[best];
}

ElbowSweep elbow_sweep(const Matrix& points, std::size_t k_min, std::size_t k_max,
                       std::uint64_t seed, const KMeansOptions& options) {
  if (k_min == 0) throw Error(ErrorCode::Domain, "k_min must be positive");
  if (k_min >= k_max) {
    throw Error(ErrorCode::Range, "elbow sweep needs k_min < k_max, got " +
                                      std::to_string(k_min) + " and " + std::to_string(k_max));
  }
  if (k_max > points.rows()) {
    throw Error(ErrorCode::Cardinality, "k_max=" + std::to_string(k_max) + " exceeds the " +
                                            std::to_string(points.rows()) + " points");
  }
  ElbowSweep sweep;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    KMeansModel model = kmeans_fit(points, k, seed, options);
    if (!sweep.models.empty()) {
      const KMeansModel& prev = sweep.models.back();
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.rows(); ++i) {
        const double d = squared_distance(points.row(i), prev.centroids.row(prev.assignments[i]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      Matrix init(k, points.cols());
      for (std::size_t c = 0; c < prev.k; ++c) {
        std::copy_n(prev.centroids.row(c).begin(), points.cols(), init.row(c).begin());
      }
      std::copy_n(points.row(far).begin(), points.cols(), init.row(k - 1).begin());
      LloydRun warm = lloyd(points, std::move(init), options.max_iter, options.tol);
      if (warm.inertia < model.inertia) {
        model.centroids = std::move(warm.centroids);
        model.assignments = std::move(warm.assignments);
        model.inertia = warm.inertia;
        model.iterations_run = warm.iterations;
        model.best_restart = options.restarts;  // the warm-start candidate
      }
    }
    sweep.curve.ks.push_back(k);
    sweep.curve.inertias.push_back(model.inertia);
    sweep.models.push_back(std::move(model));
  }
  sweep.curve.chosen_k = choose_elbow(sweep.curve.ks, sweep.curve.inertias);
  return sweep;
}

std::vector<std::size_t> nearest_to_centroid(const KMeansModel& model, const Matrix& points,
                                             std::size_t cluster, std::size_t m) {
  if (cluster >= model.k) {
    throw Error(ErrorCode::Lookup, "cluster " + std::to_string(cluster) + " out of range");
  }
  if (m == 0) throw Error(ErrorCode::Domain, "m must be positive");
  if (points.rows() != model.assignments.size()) {
    throw Error(ErrorCode::Shape, "points do not match the model's assignments");
  }
  std::vector<std::pair<double, std::size_t>> members;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (model.assignments[i] == cluster) {
      members.emplace_back(squared_distance(points.row(i), model.centroids.row(cluster)), i);
    }
  }
  if (m > members.size()) {
    throw Error(ErrorCode::Cardinality, "requested " + std::to_string(m) +
                                            " rows from cluster " + std::to_string(cluster) +
                                            " of size " + std::to_string(members.size()));
  }
  std::sort(members.begin(), members.end());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < m; ++i) rows.push_back(members[i].second);
  return rows;
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::Shape, "label vectors differ in length");
  const auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> left, right;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    left[a[i]] += 1.0;
    right[b[i]] += 1.0;
  }
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, count] : joint) index += pairs(count);
  for (const auto& [key, count] : left) sum_a += pairs(count);
  for (const auto& [key, count] : right) sum_b += pairs(count);
  const double total = pairs(static_cast<double>(a.size()));
  if (total == 0.0) return 1.0;
  const double expected = sum_a * sum_b / total;
  const double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

std::string elbow_to_csv(const ElbowCurve& curve) {
  std::string out = "k,inertia\n";
  for (std::size_t i = 0; i < curve.ks.size(); ++i) {
    out += std::to_string(curve.ks[i]) + "," + csv::format_double(curve.inertias[i]) + "\n";
  }
  return out;
}

std::string kmeans_model_to_text(const KMeansModel& model) {
  std::string out = "k," + std::to_string(model.k) + "\n";
  out += "seed," + std::to_string(model.seed) + "\n";
  out += "restarts," + std::to_string(model.restarts) + "\n";
  out += "best_restart," + std::to_string(model.best_restart) + "\n";
  out += "iterations_run," + std::to_string(model.iterations_run) + "\n";
  out += "inertia," + csv::format_significant(model.inertia, 17) + "\n";
  const auto sizes = model.cluster_sizes();
  for (std::size_t c = 0; c < model.k; ++c) {
    out += "centroid_" + std::to_string(c);
    for (double x : model.centroids.row(c)) out += "," + csv::format_significant(x, 17);
    out += "\nsize_" + std::to_string(c) + "," + std::to_string(sizes[c]) + "\n";
  }
  return out;
}

}  // namespace cml
