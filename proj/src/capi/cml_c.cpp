#include "cml/cml.h"

#include <algorithm>
#include <cstring>
#include <mutex>
#include <new>
#include <string>
#include <vector>

#include "cluster.hpp"
#include "config.hpp"
#include "error.hpp"
#include "interpret.hpp"
#include "metrics.hpp"
#include "pca.hpp"
#include "stages.hpp"
#include "tabular.hpp"

struct cml_config {
  cml::RunConfig config;
};

struct cml_table {
  cml::Table table;
};

struct cml_kmeans {
  cml::KMeansModel model;
};

struct cml_pca {
  cml::PcaModel model;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_error_kind;

std::mutex log_mutex;
cml_log_fn log_fn = nullptr;
void* log_user = nullptr;

cml_status fail(cml_status status, const char* kind, const std::string& message) {
  last_error = message;
  last_error_kind = kind;
  return status;
}

// Runs `body`, translating exceptions into a status and the thread-local
// error text.
template <class F>
cml_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    last_error_kind.clear();
    return CML_OK;
  } catch (const cml::Error& e) {
    return fail(static_cast<cml_status>(cml::error_class(e.code())),
                cml::error_code_name(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(CML_ERR_INTERNAL, "internal", "out of memory");
  } catch (const std::exception& e) {
    return fail(CML_ERR_INTERNAL, "internal", e.what());
  } catch (...) {
    return fail(CML_ERR_INTERNAL, "internal", "unknown failure");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw cml::Error(cml::ErrorCode::Config, std::string("invalid argument: ") + what);
}

cml::Matrix matrix_from(const double* data, std::size_t n, std::size_t d) {
  require(data != nullptr || n * d == 0, "data is NULL");
  cml::Matrix m(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) m(r, c) = data[r * d + c];
  }
  return m;
}

}  // namespace

extern "C" {

const char* cml_version(void) { return "0.1.0"; }

const char* cml_last_error(void) { return last_error.c_str(); }

const char* cml_last_error_kind(void) { return last_error_kind.c_str(); }

void cml_set_log_callback(cml_log_fn fn, void* user) {
  std::lock_guard lock(log_mutex);
  log_fn = fn;
  log_user = user;
}

cml_status cml_config_create(cml_config** out) {
  return guarded([&] {
    require(out != nullptr, "out is NULL");
    *out = new cml_config{};
  });
}

void cml_config_destroy(cml_config* config) { delete config; }

cml_status cml_config_set(cml_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config && key && value, "NULL argument");
    config->config.set(key, value);
  });
}

cml_status cml_config_load(cml_config* config, const char* path) {
  return guarded([&] {
    require(config && path, "NULL argument");
    cml::load_config_file(config->config, path);
  });
}

cml_status cml_config_get(const cml_config* config, const char* key, char* buffer, size_t size,
                          size_t* needed) {
  return guarded([&] {
    require(config && key, "NULL argument");
    const std::string value = config->config.get(key);
    if (needed) *needed = value.size() + 1;
    if (buffer && size > 0) {
      const std::size_t count = std::min(size - 1, value.size());
      std::memcpy(buffer, value.data(), count);
      buffer[count] = '\0';
    }
  });
}

cml_status cml_config_validate(const cml_config* config) {
  return guarded([&] {
    require(config != nullptr, "config is NULL");
    config->config.validate();
  });
}

cml_status cml_run_stage(const cml_config* config, const char* stage) {
  return guarded([&] {
    require(config && stage, "NULL argument");
    cml::LogSink sink = [](cml::LogLevel level, std::string_view message) {
      std::lock_guard lock(log_mutex);
      if (log_fn) log_fn(static_cast<int>(level), std::string(message).c_str(), log_user);
    };
    cml::run_stage(stage, config->config, sink);
  });
}

cml_status cml_table_load(const char* csv_path, const char* schema_path, cml_table** out) {
  return guarded([&] {
    require(csv_path && out, "NULL argument");
    auto table = schema_path ? cml::load_csv(csv_path, cml::load_schema(schema_path))
                             : cml::load_csv_auto(csv_path);
    *out = new cml_table{std::move(table)};
  });
}

void cml_table_destroy(cml_table* table) { delete table; }

size_t cml_table_rows(const cml_table* table) { return table ? table->table.row_count() : 0; }

size_t cml_table_cols(const cml_table* table) { return table ? table->table.column_count() : 0; }

const char* cml_table_column_name(const cml_table* table, size_t index) {
  if (!table || index >= table->table.column_count()) return nullptr;
  return table->table.column(index).name().c_str();
}

cml_status cml_table_record_count(const cml_table* table, const char* dependent, size_t* out) {
  return guarded([&] {
    require(table && dependent && out, "NULL argument");
    *out = cml::record_count_for_target(table->table, dependent);
  });
}

cml_status cml_table_column_stats(const cml_table* table, const char* column,
                                  cml_column_stats* out) {
  return guarded([&] {
    require(table && column && out, "NULL argument");
    const cml::ColumnStats s = cml::column_stats(table->table, column);
    *out = cml_column_stats{s.count_present,
                            s.mean,
                            s.std_sample,
                            s.min,
                            s.max,
                            s.skewness_population,
                            s.skewness_sample.value_or(0.0),
                            s.kurtosis_population,
                            s.kurtosis_excess_sample.value_or(0.0),
                            s.skewness_sample.has_value() ? 1 : 0,
                            s.kurtosis_excess_sample.has_value() ? 1 : 0};
  });
}

cml_status cml_rmse(const double* pred, const double* truth, size_t n, double* out) {
  return guarded([&] {
    require(pred && truth && out, "NULL argument");
    *out = cml::rmse({pred, n}, {truth, n});
  });
}

cml_status cml_mae(const double* pred, const double* truth, size_t n, double* out) {
  return guarded([&] {
    require(pred && truth && out, "NULL argument");
    *out = cml::mae({pred, n}, {truth, n});
  });
}

cml_status cml_r2(const double* pred, const double* truth, size_t n, double* out) {
  return guarded([&] {
    require(pred && truth && out, "NULL argument");
    *out = cml::r2({pred, n}, {truth, n});
  });
}

cml_status cml_improvement_percent(double mean_a, double mean_b, double* out) {
  return guarded([&] {
    require(out != nullptr, "out is NULL");
    *out = cml::improvement_percent(mean_a, mean_b);
  });
}

cml_status cml_kmeans_fit(const double* data, size_t n, size_t d, size_t k, uint64_t seed,
                          int restarts, cml_kmeans** out) {
  return guarded([&] {
    require(out != nullptr, "out is NULL");
    require(restarts >= 1, "restarts must be at least 1");
    cml::KMeansOptions options;
    options.restarts = restarts;
    *out = new cml_kmeans{cml::kmeans_fit(matrix_from(data, n, d), k, seed, options)};
  });
}

void cml_kmeans_destroy(cml_kmeans* model) { delete model; }

size_t cml_kmeans_k(const cml_kmeans* model) { return model ? model->model.k : 0; }

double cml_kmeans_inertia(const cml_kmeans* model) { return model ? model->model.inertia : 0.0; }

cml_status cml_kmeans_assignments(const cml_kmeans* model, size_t* out, size_t n) {
  return guarded([&] {
    require(model && out, "NULL argument");
    const auto& a = model->model.assignments;
    if (n != a.size()) {
      throw cml::Error(cml::ErrorCode::Shape, "expected " + std::to_string(a.size()) +
                                                  " assignment slots, got " + std::to_string(n));
    }
    std::copy(a.begin(), a.end(), out);
  });
}

cml_status cml_kmeans_centroids(const cml_kmeans* model, double* out, size_t len) {
  return guarded([&] {
    require(model && out, "NULL argument");
    const auto& data = model->model.centroids.data();
    if (len != data.size()) {
      throw cml::Error(cml::ErrorCode::Shape, "expected " + std::to_string(data.size()) +
                                                  " centroid slots, got " + std::to_string(len));
    }
    std::copy(data.begin(), data.end(), out);
  });
}

cml_status cml_elbow_choose(const size_t* ks, const double* inertias, size_t n, size_t* out) {
  return guarded([&] {
    require(ks && inertias && out, "NULL argument");
    *out = cml::choose_elbow({ks, n}, {inertias, n});
  });
}

cml_status cml_adjusted_rand_index(const size_t* a, const size_t* b, size_t n, double* out) {
  return guarded([&] {
    require(a && b && out, "NULL argument");
    *out = cml::adjusted_rand_index({a, n}, {b, n});
  });
}

cml_status cml_pca_fit(const double* data, size_t n, size_t p, cml_pca** out) {
  return guarded([&] {
    require(out != nullptr, "out is NULL");
    std::vector<std::string> names;
    for (std::size_t i = 0; i < p; ++i) names.push_back("x" + std::to_string(i + 1));
    *out = new cml_pca{cml::fit_pca(matrix_from(data, n, p), std::move(names))};
  });
}

void cml_pca_destroy(cml_pca* model) { delete model; }

size_t cml_pca_feature_count(const cml_pca* model) {
  return model ? model->model.feature_count() : 0;
}

cml_status cml_pca_ratios(const cml_pca* model, double* out, size_t len) {
  return guarded([&] {
    require(model && out, "NULL argument");
    const auto& r = model->model.explained_variance_ratio;
    if (len != r.size()) throw cml::Error(cml::ErrorCode::Shape, "ratio buffer size mismatch");
    std::copy(r.begin(), r.end(), out);
  });
}

cml_status cml_pca_components(const cml_pca* model, double* out, size_t len) {
  return guarded([&] {
    require(model && out, "NULL argument");
    const auto& c = model->model.components.data();
    if (len != c.size()) {
      throw cml::Error(cml::ErrorCode::Shape, "component buffer size mismatch");
    }
    std::copy(c.begin(), c.end(), out);
  });
}

cml_status cml_pca_components_for_threshold(const cml_pca* model, double threshold,
                                            size_t* out) {
  return guarded([&] {
    require(model && out, "NULL argument");
    *out = cml::components_for_threshold(model->model, threshold);
  });
}

}  // extern "C"
