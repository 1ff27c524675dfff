#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "cml/cml.h"
#include "oracle.hpp"

namespace fs = std::filesystem;

TEST_CASE("config handle set, get and validation") {
  cml_config* c = nullptr;
  REQUIRE(cml_config_create(&c) == CML_OK);
  CHECK(cml_config_set(c, "seed", "123") == CML_OK);
  char buffer[8];
  size_t needed = 0;
  CHECK(cml_config_get(c, "seed", buffer, sizeof buffer, &needed) == CML_OK);
  CHECK(std::string(buffer) == "123");
  CHECK(needed == 4);
  CHECK(cml_config_get(c, "compare_high", buffer, sizeof buffer, &needed) == CML_OK);
  CHECK(std::strlen(buffer) == 7);
  CHECK(needed == std::strlen("Delivery Network 1") + 1);

  CHECK(cml_config_set(c, "no_such_key", "1") == CML_ERR_CONFIG);
  CHECK(std::string(cml_last_error()).find("no_such_key") != std::string::npos);
  CHECK(std::string(cml_last_error_kind()) == "config");
  CHECK(cml_config_set(c, "k", "0") == CML_ERR_CONFIG);
  CHECK(cml_config_validate(c) == CML_OK);
  CHECK(std::string(cml_last_error()).empty());
  CHECK(cml_config_set(nullptr, "seed", "1") == CML_ERR_CONFIG);
  cml_config_destroy(c);
}

TEST_CASE("errors are per thread") {
  cml_config* c = nullptr;
  REQUIRE(cml_config_create(&c) == CML_OK);
  CHECK(cml_config_set(c, "bogus", "1") != CML_OK);
  std::string other;
  std::thread([&] { other = cml_last_error(); }).join();
  CHECK(other.empty());
  CHECK_FALSE(std::string(cml_last_error()).empty());
  cml_config_destroy(c);
}

TEST_CASE("metrics through the C interface") {
  const double h[] = {0, 0}, y[] = {3, 4};
  double out = 0;
  CHECK(cml_rmse(h, y, 2, &out) == CML_OK);
  CHECK(std::abs(out - std::sqrt(12.5)) <= 1e-12);
  CHECK(cml_mae(h, y, 2, &out) == CML_OK);
  CHECK(out == 3.5);
  CHECK(cml_r2(y, y, 2, &out) == CML_OK);
  CHECK(out == 1.0);
  const double flat[] = {1, 1};
  CHECK(cml_r2(h, flat, 2, &out) == CML_ERR_NUMERIC);
  CHECK(cml_improvement_percent(3367.0, 1018.28, &out) == CML_OK);
  CHECK(std::abs(out - 330.66) <= 0.1);
  CHECK(cml_improvement_percent(1.0, 0.0, &out) != CML_OK);
}

TEST_CASE("k-means through the C interface") {
  const double data[] = {0, 1, 10, 11};
  cml_kmeans* m = nullptr;
  REQUIRE(cml_kmeans_fit(data, 4, 1, 2, 42, 10, &m) == CML_OK);
  CHECK(cml_kmeans_k(m) == 2);
  CHECK(cml_kmeans_inertia(m) == doctest::Approx(1.0));
  size_t a[4];
  CHECK(cml_kmeans_assignments(m, a, 4) == CML_OK);
  CHECK(a[0] == a[1]);
  CHECK(a[2] == a[3]);
  CHECK(a[0] != a[2]);
  CHECK(cml_kmeans_assignments(m, a, 3) != CML_OK);
  double centroids[2];
  CHECK(cml_kmeans_centroids(m, centroids, 2) == CML_OK);
  CHECK(centroids[a[0]] == 0.5);
  cml_kmeans_destroy(m);

  CHECK(cml_kmeans_fit(data, 4, 1, 5, 42, 10, &m) == CML_ERR_DATA);
  CHECK(std::string(cml_last_error_kind()) == "cardinality");

  const size_t ks[] = {1, 2, 3, 4, 5};
  const double inertias[] = {100, 20, 18, 16, 14};
  size_t k = 0;
  CHECK(cml_elbow_choose(ks, inertias, 5, &k) == CML_OK);
  CHECK(k == 2);
  const size_t x[] = {0, 0, 1, 1}, z[] = {1, 1, 0, 0};
  double ari = 0;
  CHECK(cml_adjusted_rand_index(x, z, 4, &ari) == CML_OK);
  CHECK(ari == doctest::Approx(1.0));
}

TEST_CASE("pca through the C interface") {
  const double s = std::sqrt(6.0), t = std::sqrt(1.5);
  const double data[] = {s, 0, -s, 0, 0, t, 0, -t};
  cml_pca* m = nullptr;
  REQUIRE(cml_pca_fit(data, 4, 2, &m) == CML_OK);
  CHECK(cml_pca_feature_count(m) == 2);
  double ratios[2], comps[4];
  CHECK(cml_pca_ratios(m, ratios, 2) == CML_OK);
  CHECK(ratios[0] == doctest::Approx(0.8));
  CHECK(cml_pca_components(m, comps, 4) == CML_OK);
  CHECK(comps[0] == doctest::Approx(1.0));
  size_t q = 0;
  CHECK(cml_pca_components_for_threshold(m, 0.95, &q) == CML_OK);
  CHECK(q == 2);
  cml_pca_destroy(m);
  const double same[] = {1, 1, 1, 1};
  CHECK(cml_pca_fit(same, 2, 2, &m) == CML_ERR_NUMERIC);
}

TEST_CASE("tables and stages through the C interface") {
  const fs::path dir = oracle::scratch_dir("capi");
  {
    std::ofstream f(dir / "t.csv");
    f << "campaign,fm_total,schp_total\nc1,1,\nc2,2,20\nc3,4,30\nc4,8,40\n";
  }
  cml_table* t = nullptr;
  REQUIRE(cml_table_load((dir / "t.csv").c_str(), nullptr, &t) == CML_OK);
  CHECK(cml_table_rows(t) == 4);
  CHECK(cml_table_cols(t) == 3);
  CHECK(std::string(cml_table_column_name(t, 1)) == "fm_total");
  CHECK(cml_table_column_name(t, 9) == nullptr);
  size_t records = 0;
  CHECK(cml_table_record_count(t, "schp_total", &records) == CML_OK);
  CHECK(records == 3);
  cml_column_stats stats{};
  CHECK(cml_table_column_stats(t, "fm_total", &stats) == CML_OK);
  CHECK(stats.count_present == 4);
  CHECK(stats.mean == 3.75);
  CHECK(stats.has_kurtosis_excess_sample == 1);
  CHECK(cml_table_record_count(t, "absent", &records) != CML_OK);
  cml_table_destroy(t);
  CHECK(cml_table_load((dir / "none.csv").c_str(), nullptr, &t) == CML_ERR_CONFIG);

  std::vector<std::string> lines;
  cml_set_log_callback(
      [](int, const char* message, void* user) {
        static_cast<std::vector<std::string>*>(user)->emplace_back(message);
      },
      &lines);
  cml_config* c = nullptr;
  REQUIRE(cml_config_create(&c) == CML_OK);
  cml_config_set(c, "output_dir", (dir / "run").c_str());
  cml_config_set(c, "input_path", (dir / "t.csv").c_str());
  CHECK(cml_run_stage(c, "stats") == CML_OK);
  CHECK(fs::exists(dir / "run" / "stats.csv"));
  CHECK_FALSE(lines.empty());
  CHECK(cml_run_stage(c, "nonsense") == CML_ERR_CONFIG);
  cml_set_log_callback(nullptr, nullptr);
  cml_config_destroy(c);
}
