/* C interface to the connectome tree library. All handles are opaque; every
 * fallible call returns a ctree_status and, on failure, leaves a message in
 * ctree_last_error() for the calling thread. Strings returned through char**
 * are heap allocated and must be released with ctree_string_free. */
#ifndef CTREE_CTREE_H
#define CTREE_CTREE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CTREE_BUILDING_LIBRARY)
#    define CTREE_API __declspec(dllexport)
#  else
#    define CTREE_API __declspec(dllimport)
#  endif
#else
#  define CTREE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ctree_status {
  CTREE_OK = 0,
  CTREE_ERR_VALIDATION = 1,
  CTREE_ERR_COMPUTATION = 2,
  CTREE_ERR_IO = 3,
  CTREE_ERR_ARGUMENT = 4
} ctree_status;

CTREE_API const char* ctree_version(void);
CTREE_API const char* ctree_last_error(void);
CTREE_API const char* ctree_status_name(ctree_status status);
CTREE_API void ctree_string_free(char* s);

/* ---- hierarchy ---- */
typedef struct ctree_hierarchy ctree_hierarchy;

CTREE_API ctree_status ctree_hierarchy_default(ctree_hierarchy** out);
CTREE_API ctree_status ctree_hierarchy_load(const char* path, ctree_hierarchy** out);
CTREE_API ctree_status ctree_hierarchy_parse(const char* text, ctree_hierarchy** out);
CTREE_API void ctree_hierarchy_free(ctree_hierarchy* h);
CTREE_API size_t ctree_hierarchy_size(const ctree_hierarchy* h);
CTREE_API size_t ctree_hierarchy_leaf_count(const ctree_hierarchy* h);
CTREE_API size_t ctree_hierarchy_internal_count(const ctree_hierarchy* h);
CTREE_API int ctree_hierarchy_max_level(const ctree_hierarchy* h);
/* Node at file position `index`. The name pointer lives as long as the handle. */
CTREE_API ctree_status ctree_hierarchy_node(const ctree_hierarchy* h, size_t index, int* node_id, const char** name,
                                            int* level);
/* Internal node ids in feature order; `ids` must hold internal_count entries. */
CTREE_API ctree_status ctree_hierarchy_internal_nodes(const ctree_hierarchy* h, int* ids, size_t len);
CTREE_API ctree_status ctree_hierarchy_lca(const ctree_hierarchy* h, int roi_a, int roi_b, int* node_id);

/* ---- adjacency ---- */
typedef struct ctree_adjacency ctree_adjacency;

CTREE_API ctree_status ctree_adjacency_load(const char* path, const char* subject_id, ctree_adjacency** out);
/* Row-major p*p counts, copied. */
CTREE_API ctree_status ctree_adjacency_from_counts(size_t p, const int64_t* counts, const char* subject_id,
                                                   ctree_adjacency** out);
CTREE_API void ctree_adjacency_free(ctree_adjacency* a);
CTREE_API size_t ctree_adjacency_size(const ctree_adjacency* a);

/* ---- tree ---- */
typedef struct ctree_tree ctree_tree;

/* The hierarchy must outlive the tree. */
CTREE_API ctree_status ctree_tree_build(const ctree_hierarchy* h, const ctree_adjacency* a, ctree_tree** out);
CTREE_API void ctree_tree_free(ctree_tree* t);
/* Weights by node file position; `weights` must hold hierarchy_size entries. */
CTREE_API ctree_status ctree_tree_weights(const ctree_tree* t, int64_t* weights, size_t len);
CTREE_API ctree_status ctree_tree_weight_of(const ctree_tree* t, int node_id, int64_t* weight);
CTREE_API ctree_status ctree_tree_to_csv(const ctree_tree* t, char** csv);
/* 1 when internal sum = upper-triangle sum and leaf sum = trace. */
CTREE_API ctree_status ctree_tree_conservation(const ctree_tree* t, const ctree_adjacency* a, int* holds);

/* Exact homology oracle; `report_csv` may be NULL. */
CTREE_API ctree_status ctree_verify_theorem(const ctree_hierarchy* h, const ctree_adjacency* a, size_t cell_budget,
                                            int threads, int* all_pass, char** report_csv);

/* ---- feature tables ---- */
typedef struct ctree_table ctree_table;

CTREE_API ctree_status ctree_table_load(const char* path, ctree_table** out);
/* Row-major n*d values; NaN marks missing. Labels may be NULL. */
CTREE_API ctree_status ctree_table_from_values(size_t n, size_t d, const double* values, const char* const* row_ids,
                                               const char* const* column_labels, ctree_table** out);
CTREE_API void ctree_table_free(ctree_table* t);
CTREE_API size_t ctree_table_rows(const ctree_table* t);
CTREE_API size_t ctree_table_cols(const ctree_table* t);
CTREE_API ctree_status ctree_table_value(const ctree_table* t, size_t row, size_t col, double* value);
CTREE_API ctree_status ctree_table_column_label(const ctree_table* t, size_t col, const char** label);
CTREE_API ctree_status ctree_table_to_csv(const ctree_table* t, char** csv);
CTREE_API ctree_status ctree_table_save(const ctree_table* t, const char* path);

/* ---- PCA ---- */
typedef struct ctree_pca ctree_pca;

CTREE_API ctree_status ctree_pca_fit(const ctree_table* x, size_t k, ctree_pca** out);
CTREE_API void ctree_pca_free(ctree_pca* p);
CTREE_API size_t ctree_pca_components(const ctree_pca* p);
CTREE_API size_t ctree_pca_dimension(const ctree_pca* p);
CTREE_API ctree_status ctree_pca_transform(const ctree_pca* p, const ctree_table* x, ctree_table** scores);
/* d*K axes, column-major (axis k occupies [k*d, (k+1)*d)). */
CTREE_API ctree_status ctree_pca_axes(const ctree_pca* p, double* axes, size_t len);
CTREE_API ctree_status ctree_pca_backproject(const ctree_pca* p, const double* theta, size_t k, double* beta, size_t d);

/* ---- CCA ---- */
typedef struct ctree_cca ctree_cca;

CTREE_API ctree_status ctree_cca_fit(const ctree_table* x, const ctree_table* y, double ridge, ctree_cca** out);
CTREE_API void ctree_cca_free(ctree_cca* c);
CTREE_API size_t ctree_cca_components(const ctree_cca* c);
CTREE_API ctree_status ctree_cca_rho(const ctree_cca* c, double* rho, size_t len);
CTREE_API ctree_status ctree_cca_wilks_p(const ctree_cca* c, double* p_values, size_t len);

/* ---- BMA ---- */
typedef struct ctree_bma ctree_bma;

typedef struct ctree_bma_options {
  double g;        /* <= 0 selects g = n */
  size_t draws;    /* posterior draws for credible intervals */
  uint64_t seed;
  int threads;
} ctree_bma_options;

CTREE_API void ctree_bma_options_default(ctree_bma_options* opts);
CTREE_API ctree_status ctree_bma_fit(const ctree_table* x, const double* y, size_t n, const ctree_bma_options* opts,
                                     ctree_bma** out);
CTREE_API void ctree_bma_free(ctree_bma* b);
CTREE_API size_t ctree_bma_features(const ctree_bma* b);
CTREE_API ctree_status ctree_bma_inclusion(const ctree_bma* b, double* prob, size_t len);
CTREE_API ctree_status ctree_bma_coefficients(const ctree_bma* b, double* coef, size_t len);
CTREE_API ctree_status ctree_bma_intervals(const ctree_bma* b, double* low, double* high, size_t len);
CTREE_API ctree_status ctree_bma_to_csv(const ctree_bma* b, double threshold, char** csv);

/* ---- file-level operations used by the command-line tool ---- */

/* Trees for every subject in a manifest (hierarchy_path NULL = bundled DK). */
CTREE_API ctree_status ctree_build_cohort_trees(const char* hierarchy_path, const char* manifest_path, int threads,
                                                const char* out_path);
/* kind: "tree" (internal node weights), "am" (filtered, standardised upper
 * triangle) or "pca" (AM principal-component scores, `components` of them). */
CTREE_API ctree_status ctree_cohort_features(const char* hierarchy_path, const char* manifest_path, const char* kind,
                                             size_t components, int threads, const char* out_path);
/* PCA of a feature table; writes scores and, if axes_path is not NULL, axes. */
CTREE_API ctree_status ctree_pca_file(const char* features_path, size_t components, const char* scores_path,
                                      const char* axes_path);
/* Features are standardised; traits are sparse-filtered, imputed, standardised. */
CTREE_API ctree_status ctree_cca_file(const char* features_path, const char* traits_path, double ridge,
                                      const char* out_path);

typedef struct ctree_cv_options {
  int folds;
  int repeats;
  uint64_t seed;
  const char* regressors; /* comma separated: baseline,linear,ridge,gp */
  int threads;
} ctree_cv_options;

CTREE_API void ctree_cv_options_default(ctree_cv_options* opts);
/* names[i] labels feature_paths[i] in the report. */
CTREE_API ctree_status ctree_cv_file(const char* const* feature_paths, const char* const* names, size_t count,
                                     const char* traits_path, const ctree_cv_options* opts, const char* out_path);
CTREE_API ctree_status ctree_bma_file(const char* features_path, const char* traits_path, const char* trait,
                                      double threshold, const ctree_bma_options* opts, const char* out_path);

/* subject NULL plots the cohort mean. */
CTREE_API ctree_status ctree_plot_chord_file(const char* hierarchy_path, const char* trees_path, const char* subject,
                                             const char* out_path);
CTREE_API ctree_status ctree_plot_tree_file(const char* hierarchy_path, const char* trees_path, const char* subject,
                                            const char* compare_path, const char* compare_subject, int include_leaves,
                                            const char* out_path);
/* cca_path is a CCA report; desirability_path (optional) has trait,desirability rows. */
CTREE_API ctree_status ctree_plot_cca_file(const char* cca_path, const char* desirability_path, const char* out_path);

CTREE_API ctree_status ctree_synth_file(const char* config_path, const char* out_dir, int threads);

typedef struct ctree_pipeline_options {
  size_t components;
  int folds;
  int repeats;
  uint64_t seed;
  const char* regressors; /* comma separated */
  const char* bma_traits; /* comma separated; NULL = planted traits in synthetic mode */
  size_t bma_draws;
  double bma_threshold;
  size_t top_connections;
  int threads;
} ctree_pipeline_options;

CTREE_API void ctree_pipeline_options_default(ctree_pipeline_options* opts);
/* Synthetic mode: generate the cohort from a config, write it under
 * out_dir/cohort, then run every stage. */
CTREE_API ctree_status ctree_pipeline_synth(const char* config_path, const ctree_pipeline_options* opts,
                                            const char* out_dir);
/* Data mode: hierarchy (NULL = bundled), cohort manifest, trait table, optional desirability table. */
CTREE_API ctree_status ctree_pipeline_data(const char* hierarchy_path, const char* manifest_path,
                                           const char* traits_path, const char* desirability_path,
                                           const ctree_pipeline_options* opts, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
