#include "ctree/ctree.h"

#include "ctree/atlas.hpp"
#include "ctree/bma.hpp"
#include "ctree/connectome.hpp"
#include "ctree/csv.hpp"
#include "ctree/errors.hpp"
#include "ctree/homology.hpp"
#include "ctree/linalg_stats.hpp"
#include "ctree/pipeline.hpp"
#include "ctree/regression.hpp"
#include "ctree/synth.hpp"
#include "ctree/tree.hpp"
#include "ctree/viz.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <new>
#include <set>
#include <string>
#include <vector>

#ifndef CTREE_VERSION_STRING
#define CTREE_VERSION_STRING "0.0.0"
#endif

struct ctree_hierarchy {
  std::shared_ptr<const ctree::Hierarchy> h;
};
struct ctree_adjacency {
  ctree::AdjacencyMatrix a;
};
struct ctree_tree {
  ctree::ConnectomeTree t;
  std::shared_ptr<const ctree::Hierarchy> keep;
};
struct ctree_table {
  ctree::FeatureMatrix m;
};
struct ctree_pca {
  ctree::stats::PcaModel model;
};
struct ctree_cca {
  ctree::stats::CcaModel model;
  std::vector<ctree::stats::WilksRow> wilks;
};
struct ctree_bma {
  ctree::bma::BmaResult r;
};

namespace {

thread_local std::string g_last_error;

ctree_status fail(ctree_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename F>
ctree_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return CTREE_OK;
  } catch (const ArgumentError& e) {
    return fail(CTREE_ERR_ARGUMENT, e.what());
  } catch (const ctree::IoError& e) {
    return fail(CTREE_ERR_IO, e.what());
  } catch (const ctree::ValidationError& e) {
    return fail(CTREE_ERR_VALIDATION, e.what());
  } catch (const ctree::ComputationError& e) {
    return fail(CTREE_ERR_COMPUTATION, e.what());
  } catch (const std::bad_alloc&) {
    return fail(CTREE_ERR_COMPUTATION, "out of memory");
  } catch (const std::exception& e) {
    return fail(CTREE_ERR_COMPUTATION, e.what());
  } catch (...) {
    return fail(CTREE_ERR_COMPUTATION, "unknown error");
  }
}

template <typename T>
void need(const T* p, const char* what) {
  if (!p) throw ArgumentError(std::string(what) + " is NULL");
}

void need_len(std::size_t have, std::size_t want, const char* what) {
  if (have < want) {
    throw ArgumentError(std::string(what) + ": buffer holds " + std::to_string(have) + ", need " + std::to_string(want));
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::shared_ptr<const ctree::Hierarchy> hierarchy_from(const char* path) {
  if (!path || !*path || std::string(path) == "dk") {
    return {&ctree::Hierarchy::desikan_killiany(), [](const ctree::Hierarchy*) {}};
  }
  return std::make_shared<const ctree::Hierarchy>(ctree::Hierarchy::load(path));
}

std::vector<std::string> split_list(const char* s) {
  std::vector<std::string> out;
  if (!s) return out;
  for (const auto& f : ctree::csv::split_line(s)) {
    auto t = ctree::csv::trim(f);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<ctree::ConnectomeTree> trees_for(const ctree::Hierarchy& h, const char* manifest_path, int threads) {
  const auto cohort = ctree::load_cohort(ctree::read_manifest(manifest_path), threads);
  std::vector<ctree::ConnectomeTree> trees;
  trees.reserve(cohort.size());
  for (const auto& a : cohort) trees.push_back(ctree::build_tree(h, a));
  return trees;
}

ctree::WeightedTree pick_tree(const std::vector<ctree::WeightedTree>& trees, const char* subject) {
  if (trees.empty()) throw ctree::ValidationError("tree file has no subjects");
  if (!subject) return ctree::mean_tree(trees);
  for (const auto& t : trees) {
    if (t.subject_id == subject) return t;
  }
  throw ctree::ValidationError(std::string("tree file has no subject '") + subject + "'");
}

std::map<std::string, ctree::viz::Desirability> read_desirability(const char* path) {
  std::map<std::string, ctree::viz::Desirability> out;
  if (!path) return out;
  const auto rows = ctree::csv::parse(ctree::csv::read_file(path));
  if (rows.empty() || rows[0].fields != std::vector<std::string>{"trait", "desirability"}) {
    throw ctree::ValidationError(std::string(path) + ": expected header 'trait,desirability'");
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].fields.size() != 2) {
      throw ctree::ValidationError(std::string(path) + " line " + std::to_string(rows[r].line) + ": expected 2 fields");
    }
    out[rows[r].fields[0]] = ctree::viz::parse_desirability(rows[r].fields[1]);
  }
  return out;
}

ctree::pipeline::Options pipeline_options(const ctree_pipeline_options* o) {
  ctree_pipeline_options d;
  ctree_pipeline_options_default(&d);
  if (!o) o = &d;
  ctree::pipeline::Options opt;
  opt.components = o->components;
  if (o->folds < 2) throw ArgumentError("folds must be >= 2");
  if (o->repeats < 1) throw ArgumentError("repeats must be >= 1");
  opt.cv.folds = static_cast<std::size_t>(o->folds);
  opt.cv.repeats = static_cast<std::size_t>(o->repeats);
  opt.cv.seed = o->seed;
  if (o->regressors) opt.regressors = split_list(o->regressors);
  opt.bma_traits = split_list(o->bma_traits);
  opt.bma_draws = o->bma_draws;
  opt.bma_threshold = o->bma_threshold;
  opt.top_connections = o->top_connections;
  opt.threads = o->threads;
  return opt;
}

}  // namespace

extern "C" {

const char* ctree_version(void) { return CTREE_VERSION_STRING; }
const char* ctree_last_error(void) { return g_last_error.c_str(); }

const char* ctree_status_name(ctree_status status) {
  switch (status) {
    case CTREE_OK: return "ok";
    case CTREE_ERR_VALIDATION: return "validation error";
    case CTREE_ERR_COMPUTATION: return "computation error";
    case CTREE_ERR_IO: return "i/o error";
    case CTREE_ERR_ARGUMENT: return "invalid argument";
  }
  return "unknown status";
}

void ctree_string_free(char* s) { std::free(s); }

/* hierarchy */

ctree_status ctree_hierarchy_default(ctree_hierarchy** out) {
  return guard([&] {
    need(out, "out");
    *out = new ctree_hierarchy{hierarchy_from(nullptr)};
  });
}

ctree_status ctree_hierarchy_load(const char* path, ctree_hierarchy** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new ctree_hierarchy{std::make_shared<const ctree::Hierarchy>(ctree::Hierarchy::load(path))};
  });
}

ctree_status ctree_hierarchy_parse(const char* text, ctree_hierarchy** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = new ctree_hierarchy{std::make_shared<const ctree::Hierarchy>(ctree::Hierarchy::parse(text))};
  });
}

void ctree_hierarchy_free(ctree_hierarchy* h) { delete h; }
size_t ctree_hierarchy_size(const ctree_hierarchy* h) { return h ? h->h->size() : 0; }
size_t ctree_hierarchy_leaf_count(const ctree_hierarchy* h) { return h ? h->h->leaf_count() : 0; }
size_t ctree_hierarchy_internal_count(const ctree_hierarchy* h) { return h ? h->h->internal_count() : 0; }
int ctree_hierarchy_max_level(const ctree_hierarchy* h) { return h ? h->h->max_level() : 0; }

ctree_status ctree_hierarchy_node(const ctree_hierarchy* h, size_t index, int* node_id, const char** name, int* level) {
  return guard([&] {
    need(h, "hierarchy");
    if (index >= h->h->size()) throw ArgumentError("node index out of range");
    const auto& n = h->h->node(index);
    if (node_id) *node_id = n.node_id;
    if (name) *name = n.name.c_str();
    if (level) *level = n.level;
  });
}

ctree_status ctree_hierarchy_internal_nodes(const ctree_hierarchy* h, int* ids, size_t len) {
  return guard([&] {
    need(h, "hierarchy");
    need(ids, "ids");
    const auto nodes = h->h->internal_nodes();
    need_len(len, nodes.size(), "internal_nodes");
    std::copy(nodes.begin(), nodes.end(), ids);
  });
}

ctree_status ctree_hierarchy_lca(const ctree_hierarchy* h, int roi_a, int roi_b, int* node_id) {
  return guard([&] {
    need(h, "hierarchy");
    need(node_id, "node_id");
    *node_id = h->h->lowest_common_ancestor(roi_a, roi_b);
  });
}

/* adjacency */

ctree_status ctree_adjacency_load(const char* path, const char* subject_id, ctree_adjacency** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new ctree_adjacency{ctree::read_adjacency(path, subject_id ? subject_id : "")};
  });
}

ctree_status ctree_adjacency_from_counts(size_t p, const int64_t* counts, const char* subject_id,
                                         ctree_adjacency** out) {
  return guard([&] {
    need(counts, "counts");
    need(out, "out");
    if (p == 0) throw ArgumentError("p must be positive");
    // Route through the text loader so the same validation applies.
    auto a = ctree::zero_adjacency(p, subject_id ? subject_id : "");
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        const auto v = counts[i * p + j];
        if (v < 0) throw ctree::ValidationError("adjacency: negative count at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        if (v != counts[j * p + i]) {
          throw ctree::ValidationError("adjacency: not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
        a.counts[i * p + j] = v;
      }
    }
    *out = new ctree_adjacency{std::move(a)};
  });
}

void ctree_adjacency_free(ctree_adjacency* a) { delete a; }
size_t ctree_adjacency_size(const ctree_adjacency* a) { return a ? a->a.p : 0; }

/* tree */

ctree_status ctree_tree_build(const ctree_hierarchy* h, const ctree_adjacency* a, ctree_tree** out) {
  return guard([&] {
    need(h, "hierarchy");
    need(a, "adjacency");
    need(out, "out");
    *out = new ctree_tree{ctree::build_tree(*h->h, a->a), h->h};
  });
}

void ctree_tree_free(ctree_tree* t) { delete t; }

ctree_status ctree_tree_weights(const ctree_tree* t, int64_t* weights, size_t len) {
  return guard([&] {
    need(t, "tree");
    need(weights, "weights");
    need_len(len, t->t.weights.size(), "weights");
    std::copy(t->t.weights.begin(), t->t.weights.end(), weights);
  });
}

ctree_status ctree_tree_weight_of(const ctree_tree* t, int node_id, int64_t* weight) {
  return guard([&] {
    need(t, "tree");
    need(weight, "weight");
    *weight = t->t.weight_of(node_id);
  });
}

ctree_status ctree_tree_to_csv(const ctree_tree* t, char** csv) {
  return guard([&] {
    need(t, "tree");
    need(csv, "csv");
    *csv = dup_string(ctree::format_tree_csv(std::span<const ctree::ConnectomeTree>(&t->t, 1)));
  });
}

ctree_status ctree_tree_conservation(const ctree_tree* t, const ctree_adjacency* a, int* holds) {
  return guard([&] {
    need(t, "tree");
    need(a, "adjacency");
    need(holds, "holds");
    *holds = ctree::conservation_check(*t->t.hierarchy, a->a, t->t).holds() ? 1 : 0;
  });
}

ctree_status ctree_verify_theorem(const ctree_hierarchy* h, const ctree_adjacency* a, size_t cell_budget, int threads,
                                  int* all_pass, char** report_csv) {
  return guard([&] {
    need(h, "hierarchy");
    need(a, "adjacency");
    const auto report = ctree::homology::verify_theorem(*h->h, a->a, cell_budget ? cell_budget : ctree::homology::kDefaultCellBudget, threads);
    if (all_pass) *all_pass = report.all_pass() ? 1 : 0;
    if (report_csv) *report_csv = dup_string(ctree::homology::format_report(report));
  });
}

/* tables */

ctree_status ctree_table_load(const char* path, ctree_table** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new ctree_table{ctree::read_table(path)};
  });
}

ctree_status ctree_table_from_values(size_t n, size_t d, const double* values, const char* const* row_ids,
                                     const char* const* column_labels, ctree_table** out) {
  return guard([&] {
    need(out, "out");
    if (n * d > 0) need(values, "values");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * d + j];
    }
    std::vector<std::string> rows(n), cols(d);
    for (std::size_t i = 0; i < n; ++i) rows[i] = row_ids ? row_ids[i] : "row" + std::to_string(i + 1);
    for (std::size_t j = 0; j < d; ++j) cols[j] = column_labels ? column_labels[j] : "x" + std::to_string(j + 1);
    *out = new ctree_table{ctree::make_feature_matrix(std::move(m), std::move(rows), std::move(cols))};
  });
}

void ctree_table_free(ctree_table* t) { delete t; }
size_t ctree_table_rows(const ctree_table* t) { return t ? t->m.n() : 0; }
size_t ctree_table_cols(const ctree_table* t) { return t ? t->m.d() : 0; }

ctree_status ctree_table_value(const ctree_table* t, size_t row, size_t col, double* value) {
  return guard([&] {
    need(t, "table");
    need(value, "value");
    if (row >= t->m.n() || col >= t->m.d()) throw ArgumentError("table index out of range");
    *value = t->m.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  });
}

ctree_status ctree_table_column_label(const ctree_table* t, size_t col, const char** label) {
  return guard([&] {
    need(t, "table");
    need(label, "label");
    if (col >= t->m.d()) throw ArgumentError("column index out of range");
    *label = t->m.column_labels[col].c_str();
  });
}

ctree_status ctree_table_to_csv(const ctree_table* t, char** csv) {
  return guard([&] {
    need(t, "table");
    need(csv, "csv");
    *csv = dup_string(ctree::format_table(t->m));
  });
}

ctree_status ctree_table_save(const ctree_table* t, const char* path) {
  return guard([&] {
    need(t, "table");
    need(path, "path");
    ctree::csv::write_file(path, ctree::format_table(t->m));
  });
}

/* PCA */

ctree_status ctree_pca_fit(const ctree_table* x, size_t k, ctree_pca** out) {
  return guard([&] {
    need(x, "table");
    need(out, "out");
    *out = new ctree_pca{ctree::stats::pca_fit(x->m.values, k)};
  });
}

void ctree_pca_free(ctree_pca* p) { delete p; }
size_t ctree_pca_components(const ctree_pca* p) { return p ? static_cast<size_t>(p->model.axes.cols()) : 0; }
size_t ctree_pca_dimension(const ctree_pca* p) { return p ? static_cast<size_t>(p->model.axes.rows()) : 0; }

ctree_status ctree_pca_transform(const ctree_pca* p, const ctree_table* x, ctree_table** scores) {
  return guard([&] {
    need(p, "pca");
    need(x, "table");
    need(scores, "scores");
    std::vector<std::string> labels;
    for (Eigen::Index k = 0; k < p->model.axes.cols(); ++k) labels.push_back("PC" + std::to_string(k + 1));
    *scores = new ctree_table{
        ctree::make_feature_matrix(ctree::stats::pca_transform(p->model, x->m.values), x->m.row_ids, std::move(labels))};
  });
}

ctree_status ctree_pca_axes(const ctree_pca* p, double* axes, size_t len) {
  return guard([&] {
    need(p, "pca");
    need(axes, "axes");
    const auto& v = p->model.axes;
    need_len(len, static_cast<std::size_t>(v.size()), "axes");
    std::copy(v.data(), v.data() + v.size(), axes);  // Eigen default storage is column-major
  });
}

ctree_status ctree_pca_backproject(const ctree_pca* p, const double* theta, size_t k, double* beta, size_t d) {
  return guard([&] {
    need(p, "pca");
    need(theta, "theta");
    need(beta, "beta");
    need_len(d, static_cast<std::size_t>(p->model.axes.rows()), "beta");
    const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(theta, static_cast<Eigen::Index>(k));
    const Eigen::VectorXd b = ctree::bma::backproject(t, p->model);
    std::copy(b.data(), b.data() + b.size(), beta);
  });
}

/* CCA */

ctree_status ctree_cca_fit(const ctree_table* x, const ctree_table* y, double ridge, ctree_cca** out) {
  return guard([&] {
    need(x, "x");
    need(y, "y");
    need(out, "out");
    auto model = ctree::stats::cca_fit(x->m.values, y->m.values, ridge);
    auto wilks = ctree::stats::wilks_test(model.rho, x->m.n(), x->m.d(), y->m.d());
    *out = new ctree_cca{std::move(model), std::move(wilks)};
  });
}

void ctree_cca_free(ctree_cca* c) { delete c; }
size_t ctree_cca_components(const ctree_cca* c) { return c ? static_cast<size_t>(c->model.rho.size()) : 0; }

ctree_status ctree_cca_rho(const ctree_cca* c, double* rho, size_t len) {
  return guard([&] {
    need(c, "cca");
    need(rho, "rho");
    need_len(len, static_cast<std::size_t>(c->model.rho.size()), "rho");
    std::copy(c->model.rho.data(), c->model.rho.data() + c->model.rho.size(), rho);
  });
}

ctree_status ctree_cca_wilks_p(const ctree_cca* c, double* p_values, size_t len) {
  return guard([&] {
    need(c, "cca");
    need(p_values, "p_values");
    need_len(len, c->wilks.size(), "p_values");
    for (std::size_t k = 0; k < c->wilks.size(); ++k) p_values[k] = c->wilks[k].p_value;
  });
}

/* BMA */

void ctree_bma_options_default(ctree_bma_options* opts) {
  if (!opts) return;
  opts->g = 0.0;
  opts->draws = 10000;
  opts->seed = 0;
  opts->threads = 1;
}

ctree_status ctree_bma_fit(const ctree_table* x, const double* y, size_t n, const ctree_bma_options* opts,
                           ctree_bma** out) {
  return guard([&] {
    need(x, "x");
    need(y, "y");
    need(out, "out");
    if (n != x->m.n()) throw ArgumentError("y length does not match table rows");
    ctree_bma_options d;
    ctree_bma_options_default(&d);
    if (!opts) opts = &d;
    ctree::bma::BmaOptions o;
    o.g = opts->g;
    o.draws = opts->draws;
    o.seed = opts->seed;
    o.threads = opts->threads;
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y, static_cast<Eigen::Index>(n));
    *out = new ctree_bma{ctree::bma::bma_fit(x->m.values, yv, o, x->m.column_labels)};
  });
}

void ctree_bma_free(ctree_bma* b) { delete b; }
size_t ctree_bma_features(const ctree_bma* b) { return b ? static_cast<size_t>(b->r.inclusion_prob.size()) : 0; }

ctree_status ctree_bma_inclusion(const ctree_bma* b, double* prob, size_t len) {
  return guard([&] {
    need(b, "bma");
    need(prob, "prob");
    const auto& v = b->r.inclusion_prob;
    need_len(len, static_cast<std::size_t>(v.size()), "prob");
    std::copy(v.data(), v.data() + v.size(), prob);
  });
}

ctree_status ctree_bma_coefficients(const ctree_bma* b, double* coef, size_t len) {
  return guard([&] {
    need(b, "bma");
    need(coef, "coef");
    const auto& v = b->r.avg_coef;
    need_len(len, static_cast<std::size_t>(v.size()), "coef");
    std::copy(v.data(), v.data() + v.size(), coef);
  });
}

ctree_status ctree_bma_intervals(const ctree_bma* b, double* low, double* high, size_t len) {
  return guard([&] {
    need(b, "bma");
    need(low, "low");
    need(high, "high");
    const auto& lo = b->r.interval_low;
    const auto& hi = b->r.interval_high;
    need_len(len, static_cast<std::size_t>(lo.size()), "intervals");
    std::copy(lo.data(), lo.data() + lo.size(), low);
    std::copy(hi.data(), hi.data() + hi.size(), high);
  });
}

ctree_status ctree_bma_to_csv(const ctree_bma* b, double threshold, char** csv) {
  return guard([&] {
    need(b, "bma");
    need(csv, "csv");
    *csv = dup_string(ctree::bma::format_result(b->r, threshold));
  });
}

/* file-level operations */

ctree_status ctree_build_cohort_trees(const char* hierarchy_path, const char* manifest_path, int threads,
                                      const char* out_path) {
  return guard([&] {
    need(manifest_path, "manifest_path");
    need(out_path, "out_path");
    const auto h = hierarchy_from(hierarchy_path);
    ctree::csv::write_file(out_path, ctree::format_tree_csv(trees_for(*h, manifest_path, threads)));
  });
}

ctree_status ctree_cohort_features(const char* hierarchy_path, const char* manifest_path, const char* kind,
                                   size_t components, int threads, const char* out_path) {
  return guard([&] {
    need(manifest_path, "manifest_path");
    need(kind, "kind");
    need(out_path, "out_path");
    const std::string k = kind;
    const auto h = hierarchy_from(hierarchy_path);
    if (k == "tree") {
      ctree::csv::write_file(out_path, ctree::format_table(ctree::tree_features(trees_for(*h, manifest_path, threads), false)));
      return;
    }
    if (k != "am" && k != "pca") throw ArgumentError("feature kind must be tree, am or pca");
    const auto cohort = ctree::load_cohort(ctree::read_manifest(manifest_path), threads);
    const auto am = ctree::standardize(ctree::filter_zero_variance(ctree::vectorize_upper(cohort)));
    if (k == "am") {
      ctree::csv::write_file(out_path, ctree::format_table(am));
      return;
    }
    const auto pca = ctree::stats::pca_fit(am.values, components);
    std::vector<std::string> labels;
    for (std::size_t c = 0; c < components; ++c) labels.push_back("PC" + std::to_string(c + 1));
    ctree::csv::write_file(out_path, ctree::format_table(ctree::make_feature_matrix(
                                         ctree::stats::pca_transform(pca, am.values), am.row_ids, std::move(labels))));
  });
}

ctree_status ctree_pca_file(const char* features_path, size_t components, const char* scores_path,
                            const char* axes_path) {
  return guard([&] {
    need(features_path, "features_path");
    need(scores_path, "scores_path");
    const auto x = ctree::read_table(features_path);
    const auto pca = ctree::stats::pca_fit(x.values, components);
    std::vector<std::string> labels;
    for (std::size_t c = 0; c < components; ++c) labels.push_back("PC" + std::to_string(c + 1));
    ctree::csv::write_file(scores_path, ctree::format_table(ctree::make_feature_matrix(
                                            ctree::stats::pca_transform(pca, x.values), x.row_ids, labels)));
    if (axes_path) {
      std::string s = "feature,mean";
      for (const auto& l : labels) s += "," + l;
      s += "\n";
      for (Eigen::Index j = 0; j < pca.axes.rows(); ++j) {
        s += ctree::csv::escape(x.column_labels[j]) + "," + ctree::csv::format_double(pca.column_means(j));
        for (Eigen::Index c = 0; c < pca.axes.cols(); ++c) s += "," + ctree::csv::format_double(pca.axes(j, c));
        s += "\n";
      }
      ctree::csv::write_file(axes_path, s);
    }
  });
}

ctree_status ctree_cca_file(const char* features_path, const char* traits_path, double ridge, const char* out_path) {
  return guard([&] {
    need(features_path, "features_path");
    need(traits_path, "traits_path");
    need(out_path, "out_path");
    auto x = ctree::read_table(features_path);
    auto y = ctree::read_table(traits_path);
    ctree::align_rows(x, y);
    const auto prepared = ctree::pipeline::prepare_cca_traits(y);
    const auto s = ctree::pipeline::run_cca(std::filesystem::path(features_path).stem().string(), x, prepared, ridge);
    ctree::csv::write_file(out_path, ctree::pipeline::format_cca(s));
  });
}

void ctree_cv_options_default(ctree_cv_options* opts) {
  if (!opts) return;
  opts->folds = 5;
  opts->repeats = 10;
  opts->seed = 0;
  opts->regressors = "baseline,linear,gp";
  opts->threads = 1;
}

ctree_status ctree_cv_file(const char* const* feature_paths, const char* const* names, size_t count,
                           const char* traits_path, const ctree_cv_options* opts, const char* out_path) {
  return guard([&] {
    need(feature_paths, "feature_paths");
    need(traits_path, "traits_path");
    need(out_path, "out_path");
    if (count == 0) throw ArgumentError("no feature tables given");
    ctree_cv_options d;
    ctree_cv_options_default(&d);
    if (!opts) opts = &d;
    if (opts->folds < 2) throw ArgumentError("folds must be >= 2");
    if (opts->repeats < 1) throw ArgumentError("repeats must be >= 1");

    auto traits = ctree::read_table(traits_path);
    std::vector<ctree::FeatureMatrix> tables;
    for (std::size_t i = 0; i < count; ++i) {
      need(feature_paths[i], "feature path");
      tables.push_back(ctree::read_table(feature_paths[i]));
    }
    // Restrict every table to subjects present everywhere, in the trait table's order.
    for (auto& t : tables) ctree::align_rows(traits, t);
    for (auto& t : tables) ctree::align_rows(traits, t);
    std::vector<ctree::regression::Representation> reps;
    std::vector<std::string> rep_names(count);
    for (std::size_t i = 0; i < count; ++i) {
      rep_names[i] = names && names[i] ? names[i] : std::filesystem::path(feature_paths[i]).stem().string();
    }
    for (std::size_t i = 0; i < count; ++i) reps.push_back({rep_names[i], &tables[i]});

    std::vector<std::unique_ptr<ctree::regression::Regressor>> owned;
    std::vector<const ctree::regression::Regressor*> regs;
    for (const auto& r : split_list(opts->regressors)) {
      owned.push_back(ctree::regression::make_regressor(r));
      regs.push_back(owned.back().get());
    }
    if (regs.empty()) throw ArgumentError("no regressors given");
    ctree::regression::CvConfig cfg;
    cfg.folds = static_cast<std::size_t>(opts->folds);
    cfg.repeats = static_cast<std::size_t>(opts->repeats);
    cfg.seed = opts->seed;
    ctree::csv::write_file(out_path, ctree::regression::evaluate(reps, traits, regs, cfg, opts->threads).to_csv());
  });
}

ctree_status ctree_bma_file(const char* features_path, const char* traits_path, const char* trait, double threshold,
                            const ctree_bma_options* opts, const char* out_path) {
  return guard([&] {
    need(features_path, "features_path");
    need(traits_path, "traits_path");
    need(trait, "trait");
    need(out_path, "out_path");
    auto x = ctree::read_table(features_path);
    auto y = ctree::read_table(traits_path);
    ctree::align_rows(x, y);
    const auto col = y.column_index(trait);
    if (col < 0) throw ctree::ValidationError(std::string("trait table has no column '") + trait + "'");
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < y.n(); ++i) {
      if (!std::isnan(y.values(static_cast<Eigen::Index>(i), col))) rows.push_back(i);
    }
    const auto xs = ctree::standardize(ctree::select_rows(x, rows));
    Eigen::VectorXd yv(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) yv(static_cast<Eigen::Index>(i)) = y.values(static_cast<Eigen::Index>(rows[i]), col);
    yv.array() -= yv.mean();

    ctree_bma_options d;
    ctree_bma_options_default(&d);
    if (!opts) opts = &d;
    ctree::bma::BmaOptions o;
    o.g = opts->g;
    o.draws = opts->draws;
    o.seed = opts->seed;
    o.threads = opts->threads;
    const auto r = ctree::bma::bma_fit(xs.values, yv, o, xs.column_labels);
    ctree::csv::write_file(out_path, ctree::bma::format_result(r, threshold));
  });
}

ctree_status ctree_plot_chord_file(const char* hierarchy_path, const char* trees_path, const char* subject,
                                   const char* out_path) {
  return guard([&] {
    need(trees_path, "trees_path");
    need(out_path, "out_path");
    const auto h = hierarchy_from(hierarchy_path);
    const auto trees = ctree::parse_tree_csv(*h, ctree::csv::read_file(trees_path));
    ctree::csv::write_file(out_path, ctree::viz::render_chord(pick_tree(trees, subject)));
  });
}

ctree_status ctree_plot_tree_file(const char* hierarchy_path, const char* trees_path, const char* subject,
                                  const char* compare_path, const char* compare_subject, int include_leaves,
                                  const char* out_path) {
  return guard([&] {
    need(trees_path, "trees_path");
    need(out_path, "out_path");
    const auto h = hierarchy_from(hierarchy_path);
    const auto t = pick_tree(ctree::parse_tree_csv(*h, ctree::csv::read_file(trees_path)), subject);
    ctree::viz::TreeDiagramSpec spec;
    spec.include_leaves = include_leaves != 0;
    if (compare_path) {
      const auto c = pick_tree(ctree::parse_tree_csv(*h, ctree::csv::read_file(compare_path)), compare_subject);
      ctree::csv::write_file(out_path, ctree::viz::render_tree_diagram(t, &c, spec));
    } else {
      ctree::csv::write_file(out_path, ctree::viz::render_tree_diagram(t, nullptr, spec));
    }
  });
}

ctree_status ctree_plot_cca_file(const char* cca_path, const char* desirability_path, const char* out_path) {
  return guard([&] {
    need(cca_path, "cca_path");
    need(out_path, "out_path");
    const auto rows = ctree::csv::parse(ctree::csv::read_file(cca_path));
    if (rows.empty() || rows[0].fields != std::vector<std::string>{"section", "component", "name", "value"}) {
      throw ctree::ValidationError(std::string(cca_path) + ": not a CCA report");
    }
    std::vector<std::string> labels;
    std::vector<double> corr;
    std::map<std::string, double> loading;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& f = rows[r].fields;
      if (f.size() != 4) throw ctree::ValidationError(std::string(cca_path) + " line " + std::to_string(rows[r].line) + ": expected 4 fields");
      if (f[0] == "trait_correlation") {
        labels.push_back(f[2]);
        corr.push_back(ctree::csv::parse_double(f[3], rows[r].line));
      } else if (f[0] == "y_loading" && f[1] == "1") {
        loading[f[2]] = ctree::csv::parse_double(f[3], rows[r].line);
      }
    }
    std::vector<double> load;
    for (const auto& l : labels) {
      auto it = loading.find(l);
      if (it == loading.end()) throw ctree::ValidationError("CCA report has no first loading for '" + l + "'");
      load.push_back(it->second);
    }
    std::vector<ctree::viz::Desirability> des;
    if (desirability_path) {
      const auto m = read_desirability(desirability_path);
      for (const auto& l : labels) {
        auto it = m.find(l);
        des.push_back(it == m.end() ? ctree::viz::Desirability::unknown : it->second);
      }
    }
    ctree::csv::write_file(out_path, ctree::viz::render_cca_scatter(corr, load, labels, des));
  });
}

ctree_status ctree_synth_file(const char* config_path, const char* out_dir, int threads) {
  return guard([&] {
    need(config_path, "config_path");
    need(out_dir, "out_dir");
    const auto cfg = ctree::synth::read_config(config_path);
    ctree::synth::write_cohort(ctree::synth::generate_cohort(cfg, threads), cfg, out_dir);
  });
}

void ctree_pipeline_options_default(ctree_pipeline_options* opts) {
  if (!opts) return;
  opts->components = ctree::pipeline::kDefaultComponents;
  opts->folds = 5;
  opts->repeats = 10;
  opts->seed = 0;
  opts->regressors = "baseline,linear,ridge";
  opts->bma_traits = nullptr;
  opts->bma_draws = 10000;
  opts->bma_threshold = ctree::bma::kDefaultThreshold;
  opts->top_connections = 50;
  opts->threads = 1;
}

ctree_status ctree_pipeline_synth(const char* config_path, const ctree_pipeline_options* opts, const char* out_dir) {
  return guard([&] {
    need(config_path, "config_path");
    need(out_dir, "out_dir");
    auto options = pipeline_options(opts);
    const auto cfg = ctree::synth::read_config(config_path);
    const auto cohort = ctree::synth::generate_cohort(cfg, options.threads);
    ctree::synth::write_cohort(cohort, cfg, (std::filesystem::path(out_dir) / "cohort").string());
    if (options.bma_traits.empty()) {
      std::set<std::size_t> planted;
      for (const auto& s : cfg.signals) planted.insert(s.trait);
      for (auto t : planted) options.bma_traits.push_back(ctree::synth::trait_name(t));
    }
    ctree::pipeline::Inputs in;
    in.hierarchy = cohort.hierarchy;
    in.cohort = cohort.adjacency;
    in.traits = cohort.traits;
    for (const auto& [t, d] : cfg.desirability) in.desirability[ctree::synth::trait_name(t)] = d;
    ctree::pipeline::run(in, options, out_dir);
  });
}

ctree_status ctree_pipeline_data(const char* hierarchy_path, const char* manifest_path, const char* traits_path,
                                 const char* desirability_path, const ctree_pipeline_options* opts,
                                 const char* out_dir) {
  return guard([&] {
    need(manifest_path, "manifest_path");
    need(traits_path, "traits_path");
    need(out_dir, "out_dir");
    const auto options = pipeline_options(opts);
    ctree::pipeline::Inputs in;
    in.hierarchy = hierarchy_from(hierarchy_path);
    in.cohort = ctree::load_cohort(ctree::read_manifest(manifest_path), options.threads);
    in.traits = ctree::read_table(traits_path);
    in.desirability = read_desirability(desirability_path);
    ctree::pipeline::run(in, options, out_dir);
  });
}

}  // extern "C"
