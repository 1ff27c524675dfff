#ifndef CML_CML_H
#define CML_CML_H

#include <stddef.h>
#include <stdint.h>

#if defined(CML_BUILDING_LIBRARY)
#define CML_API __attribute__((visibility("default")))
#else
#define CML_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes. */
typedef enum cml_status {
  CML_OK = 0,
  CML_ERR_CONFIG = 2,
  CML_ERR_DATA = 3,
  CML_ERR_NUMERIC = 4,
  CML_ERR_INTERNAL = 5
} cml_status;

typedef struct cml_config cml_config;
typedef struct cml_table cml_table;
typedef struct cml_kmeans cml_kmeans;
typedef struct cml_pca cml_pca;

CML_API const char* cml_version(void);

/* Message and kebab-case kind ("dependency", "constant-column", ...) of the
 * last failure on the calling thread; empty strings after a success. */
CML_API const char* cml_last_error(void);
CML_API const char* cml_last_error_kind(void);

/* level 0 is info, 1 is warning. The callback may run on any thread that
 * calls cml_run_stage. Pass NULL to silence logging. */
typedef void (*cml_log_fn)(int level, const char* message, void* user);
CML_API void cml_set_log_callback(cml_log_fn fn, void* user);

/* --- run configuration -------------------------------------------------- */

CML_API cml_status cml_config_create(cml_config** out);
CML_API void cml_config_destroy(cml_config* config);
CML_API cml_status cml_config_set(cml_config* config, const char* key, const char* value);
/* Flat key=value file; a run manifest is also accepted. */
CML_API cml_status cml_config_load(cml_config* config, const char* path);
/* Copies the value with a terminating NUL when it fits; *needed (optional)
 * receives the buffer size required. */
CML_API cml_status cml_config_get(const cml_config* config, const char* key, char* buffer,
                                  size_t size, size_t* needed);
CML_API cml_status cml_config_validate(const cml_config* config);

/* One of synth, ingest, stats, preprocess, pca, cluster, summarize,
 * metrics, report, pipeline. */
CML_API cml_status cml_run_stage(const cml_config* config, const char* stage);

/* --- tables ------------------------------------------------------------- */

/* schema_path may be NULL to use the sidecar or inference. */
CML_API cml_status cml_table_load(const char* csv_path, const char* schema_path, cml_table** out);
CML_API void cml_table_destroy(cml_table* table);
CML_API size_t cml_table_rows(const cml_table* table);
CML_API size_t cml_table_cols(const cml_table* table);
/* NULL when index is out of range. Valid until the table is destroyed. */
CML_API const char* cml_table_column_name(const cml_table* table, size_t index);
CML_API cml_status cml_table_record_count(const cml_table* table, const char* dependent,
                                          size_t* out);

typedef struct cml_column_stats {
  size_t count_present;
  double mean;
  double std_sample;
  double min;
  double max;
  double skewness_population;
  double skewness_sample;
  double kurtosis_population;
  double kurtosis_excess_sample;
  int has_skewness_sample;
  int has_kurtosis_excess_sample;
} cml_column_stats;

CML_API cml_status cml_table_column_stats(const cml_table* table, const char* column,
                                          cml_column_stats* out);

/* --- metrics ------------------------------------------------------------ */

CML_API cml_status cml_rmse(const double* pred, const double* truth, size_t n, double* out);
CML_API cml_status cml_mae(const double* pred, const double* truth, size_t n, double* out);
CML_API cml_status cml_r2(const double* pred, const double* truth, size_t n, double* out);
CML_API cml_status cml_improvement_percent(double mean_a, double mean_b, double* out);

/* --- clustering (row-major n x d data) ---------------------------------- */

CML_API cml_status cml_kmeans_fit(const double* data, size_t n, size_t d, size_t k,
                                  uint64_t seed, int restarts, cml_kmeans** out);
CML_API void cml_kmeans_destroy(cml_kmeans* model);
CML_API size_t cml_kmeans_k(const cml_kmeans* model);
CML_API double cml_kmeans_inertia(const cml_kmeans* model);
/* Copies n assignments. */
CML_API cml_status cml_kmeans_assignments(const cml_kmeans* model, size_t* out, size_t n);
/* Copies k x d centroids row-major. */
CML_API cml_status cml_kmeans_centroids(const cml_kmeans* model, double* out, size_t len);

CML_API cml_status cml_elbow_choose(const size_t* ks, const double* inertias, size_t n,
                                    size_t* out);
CML_API cml_status cml_adjusted_rand_index(const size_t* a, const size_t* b, size_t n,
                                           double* out);

/* --- principal components (row-major n x p data) ------------------------ */

CML_API cml_status cml_pca_fit(const double* data, size_t n, size_t p, cml_pca** out);
CML_API void cml_pca_destroy(cml_pca* model);
CML_API size_t cml_pca_feature_count(const cml_pca* model);
/* Copies p explained-variance ratios, largest first. */
CML_API cml_status cml_pca_ratios(const cml_pca* model, double* out, size_t len);
/* Copies p x p components, one component per row. */
CML_API cml_status cml_pca_components(const cml_pca* model, double* out, size_t len);
CML_API cml_status cml_pca_components_for_threshold(const cml_pca* model, double threshold,
                                                    size_t* out);

#ifdef __cplusplus
}
#endif

#endif
