#include "doctest.h"

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "cluster.hpp"
#include "error.hpp"
#include "oracle.hpp"
#include "rng.hpp"

using namespace cml;

namespace {

Matrix from_points(const oracle::Points& pts) { return Matrix::from_rows(pts); }

oracle::Points random_points(SplitMix64& rng, std::size_t n, std::size_t d) {
  oracle::Points pts(n, std::vector<double>(d));
  for (auto& p : pts)
    for (double& x : p) x = std::round(rng.normal() * 40.0) / 4.0;
  return pts;
}

double naive_inertia(const Matrix& x, const Matrix& c, const std::vector<std::size_t>& a) {
  double s = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j) s += std::pow(x(r, j) - c(a[r], j), 2);
  return s;
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

TEST_CASE("four one-dimensional points split into two pairs") {
  const oracle::Points pts = {{0}, {1}, {10}, {11}};
  const KMeansModel m = kmeans_fit(from_points(pts), 2, 42);
  CHECK(m.inertia == doctest::Approx(oracle::exhaustive_kmeans(pts, 2)).epsilon(1e-12));
  CHECK(m.inertia == doctest::Approx(1.0).epsilon(1e-12));
  std::set<double> centroids = {m.centroids(0, 0), m.centroids(1, 0)};
  CHECK(centroids == std::set<double>{0.5, 10.5});
  CHECK(inertia(from_points(pts), m.centroids, m.assignments) == doctest::Approx(0.25 * 4));
}

TEST_CASE("k equal to n gives zero inertia") {
  const oracle::Points pts = {{0, 1}, {3, 4}, {-2, 7}, {5, 5}, {1, 1}};
  const KMeansModel m = kmeans_fit(from_points(pts), 5, 1);
  CHECK(m.inertia == 0.0);
  for (std::size_t r = 0; r < 5; ++r) {
    CHECK(m.centroids(m.assignments[r], 0) == pts[r][0]);
  }
}

TEST_CASE("kmeans argument errors") {
  const Matrix x = Matrix::from_rows({{0}, {1}});
  CHECK(code_of([&] { kmeans_fit(x, 3, 1); }) == ErrorCode::Cardinality);
  CHECK(code_of([&] { kmeans_fit(x, 0, 1); }) == ErrorCode::Domain);
  const std::vector<std::size_t> bad = {0, 5};
  CHECK(code_of([&] { inertia(x, Matrix::from_rows({{0}}), bad); }) == ErrorCode::Assignment);
}

TEST_CASE("inertia of trivial configurations") {
  const Matrix x = Matrix::from_rows({{1, 1}, {2, 2}});
  const std::vector<std::size_t> a = {0, 1};
  CHECK(inertia(x, x, a) == 0.0);
  const std::vector<std::size_t> single = {0};
  CHECK(inertia(Matrix::from_rows({{2, 0}}), Matrix::from_rows({{0, 0}}), single) == 4.0);
}

TEST_CASE("kmeans never beats and usually matches the exhaustive optimum on tiny inputs") {
  SplitMix64 rng(101);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 3 + rng.below(8);
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(3, n));
    const auto pts = random_points(rng, n, 1 + rng.below(2));
    const Matrix x = from_points(pts);
    const KMeansModel m = kmeans_fit(x, k, rng.next());
    const double optimum = oracle::exhaustive_kmeans(pts, int(k));
    CHECK(m.inertia >= optimum - 1e-9);
  }
}

TEST_CASE("model invariants") {
  SplitMix64 rng(202);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 5 + rng.below(60), k = 1 + rng.below(5);
    const Matrix x = from_points(random_points(rng, n, 1 + rng.below(4)));
    if (distinct_point_count(x) < k) continue;
    const KMeansModel m = kmeans_fit(x, k, rng.next());
    CHECK(std::abs(m.inertia - naive_inertia(x, m.centroids, m.assignments)) <=
          1e-9 * std::max(1.0, m.inertia));
    for (std::size_t r = 0; r < n; ++r) {
      // Nearest centroid, ties to the lower index.
      std::size_t best = 0;
      double best_d = INFINITY;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(x.row(r), m.centroids.row(c));
        if (d < best_d) best_d = d, best = c;
      }
      CHECK(m.assignments[r] == best);
    }
    for (std::size_t size : m.cluster_sizes()) CHECK(size > 0);
  }
}

TEST_CASE("lloyd inertia never increases") {
  SplitMix64 rng(303);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 10 + rng.below(40), k = 1 + rng.below(5);
    const Matrix x = from_points(random_points(rng, n, 2));
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    shuffle(rows, rng);
    rows.resize(k);
    const LloydRun run = lloyd(x, x.select_rows(rows));
    for (std::size_t i = 1; i < run.inertia_trace.size(); ++i) {
      CHECK(run.inertia_trace[i] <= run.inertia_trace[i - 1] + 1e-9);
    }
  }
}

TEST_CASE("adding restarts never raises the best inertia") {
  // Restart r draws from derive_seed(seed, r), so a fit with R restarts
  // contains every restart of a fit with fewer.
  SplitMix64 rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = from_points(random_points(rng, 60, 2));
    const std::uint64_t seed = rng.next();
    double previous = INFINITY;
    for (int restarts = 1; restarts <= 10; ++restarts) {
      KMeansOptions options;
      options.restarts = restarts;
      const KMeansModel m = kmeans_fit(x, 4, seed, options);
      CHECK(m.inertia <= previous);
      previous = m.inertia;
    }
  }
}

TEST_CASE("results do not depend on thread count") {
  SplitMix64 rng(505);
  const Matrix x = from_points(random_points(rng, 80, 3));
  KMeansOptions serial, parallel;
  parallel.threads = 4;
  const KMeansModel a = kmeans_fit(x, 3, 77, serial);
  const KMeansModel b = kmeans_fit(x, 3, 77, parallel);
  const KMeansModel c = kmeans_fit(x, 3, 77, serial);
  CHECK(a.centroids == b.centroids);
  CHECK(a.assignments == b.assignments);
  CHECK(a.inertia == b.inertia);
  CHECK(a.centroids == c.centroids);
}

TEST_CASE("elbow on a hand-checked curve") {
  const std::vector<std::size_t> ks = {1, 2, 3, 4, 5};
  const std::vector<double> curve = {100, 20, 18, 16, 14};
  CHECK(choose_elbow(ks, curve) == 2);
  const std::vector<double> linear = {50, 40, 30, 20, 10};
  CHECK(choose_elbow(ks, linear) == 2);
}

TEST_CASE("elbow choice is invariant to scaling the inertias") {
  SplitMix64 rng(606);
  const std::vector<std::size_t> ks = {1, 2, 3, 4, 5, 6, 7};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> curve(ks.size());
    double v = 1000.0;
    for (double& c : curve) c = (v *= 0.3 + 0.7 * rng.uniform());
    const double scale = 1e-3 + rng.uniform() * 1e3;
    std::vector<double> scaled = curve;
    for (double& c : scaled) c *= scale;
    CHECK(choose_elbow(ks, curve) == choose_elbow(ks, scaled));
  }
}

TEST_CASE("elbow sweep is non-increasing and validates its range") {
  SplitMix64 rng(707);
  const Matrix x = from_points(random_points(rng, 60, 2));
  const ElbowSweep sweep = elbow_sweep(x, 1, 8, 3);
  CHECK(sweep.curve.ks.size() == 8);
  for (std::size_t i = 1; i < sweep.curve.inertias.size(); ++i) {
    CHECK(sweep.curve.inertias[i] <= sweep.curve.inertias[i - 1]);
  }
  CHECK(code_of([&] { elbow_sweep(x, 4, 4, 3); }) == ErrorCode::Range);
  CHECK(code_of([&] { elbow_sweep(x, 1, 61, 3); }) == ErrorCode::Cardinality);
}

TEST_CASE("three separated blobs give an elbow at three") {
  SplitMix64 rng(808);
  oracle::Points pts;
  std::vector<std::size_t> truth;
  const double centers[3][2] = {{0, 0}, {20, 0}, {0, 20}};
  for (std::size_t i = 0; i < 150; ++i) {
    const std::size_t c = i % 3;
    pts.push_back({centers[c][0] + rng.normal(), centers[c][1] + rng.normal()});
    truth.push_back(c);
  }
  const ElbowSweep sweep = elbow_sweep(from_points(pts), 1, 10, 42);
  CHECK(sweep.curve.chosen_k == 3);
  const KMeansModel& m = sweep.models[2];
  CHECK(adjusted_rand_index(m.assignments, truth) == doctest::Approx(1.0));
}

TEST_CASE("nearest to centroid ordering and ties") {
  const Matrix x = Matrix::from_rows({{0}, {1}, {10}, {11}});
  const KMeansModel m = kmeans_fit(x, 2, 42);
  const std::size_t low = m.assignments[0];
  const auto one = nearest_to_centroid(m, x, low, 1);
  CHECK(one == std::vector<std::size_t>{0});
  const auto both = nearest_to_centroid(m, x, low, 2);
  CHECK(both == std::vector<std::size_t>{0, 1});
  CHECK(code_of([&] { nearest_to_centroid(m, x, low, 3); }) == ErrorCode::Cardinality);

  SplitMix64 rng(909);
  const Matrix y = from_points(random_points(rng, 40, 2));
  const KMeansModel my = kmeans_fit(y, 3, 1);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto rows = nearest_to_centroid(my, y, c, my.cluster_sizes()[c]);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(my.assignments[rows[i]] == c);
      if (i > 0) {
        const double a = squared_distance(y.row(rows[i - 1]), my.centroids.row(c));
        const double b = squared_distance(y.row(rows[i]), my.centroids.row(c));
        CHECK((a < b || (a == b && rows[i - 1] < rows[i])));
      }
    }
  }
}

TEST_CASE("adjusted rand index matches pair counting") {
  SplitMix64 rng(111);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<std::size_t> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.below(4);
      b[i] = rng.uniform() < 0.6 ? a[i] : rng.below(4);
    }
    CHECK(adjusted_rand_index(a, b) == doctest::Approx(oracle::adjusted_rand(a, b)).epsilon(1e-9));
  }
  const std::vector<std::size_t> x = {0, 0, 1, 1}, y = {5, 5, 2, 2};
  CHECK(adjusted_rand_index(x, y) == doctest::Approx(1.0));
}
