#include "ctree/pipeline.hpp"

#include "ctree/csv.hpp"
#include "ctree/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <unordered_map>

namespace ctree::pipeline {

namespace {

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') ? c : '_';
  return out;
}

std::string fmt(double v) { return csv::format_double(v); }

FeatureMatrix reorder_traits(const FeatureMatrix& traits, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < traits.row_ids.size(); ++i) index.emplace(traits.row_ids[i], i);
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw ValidationError("trait table has no row for subject '" + id + "'");
    rows.push_back(it->second);
  }
  return select_rows(traits, rows);
}

std::vector<WeightedTree> weighted(const std::vector<ConnectomeTree>& trees, const std::vector<std::size_t>& rows) {
  std::vector<WeightedTree> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(to_weighted(trees[r]));
  return out;
}

}  // namespace

Representations build_representations(const Hierarchy& h, const std::vector<AdjacencyMatrix>& cohort,
                                      std::size_t components) {
  if (cohort.size() < 2) throw ValidationError("pipeline: need at least 2 subjects");
  Representations r;
  r.trees.reserve(cohort.size());
  for (const auto& a : cohort) r.trees.push_back(build_tree(h, a));
  r.tree = filter_zero_variance(tree_features(r.trees, false));
  r.am = standardize(filter_zero_variance(vectorize_upper(cohort)));
  r.pca = stats::pca_fit(r.am.values, components);
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < components; ++k) labels.push_back("PC" + std::to_string(k + 1));
  r.pca_scores = make_feature_matrix(stats::pca_transform(r.pca, r.am.values), r.am.row_ids, std::move(labels));
  return r;
}

FeatureMatrix prepare_cca_traits(const FeatureMatrix& traits, double sparse_threshold) {
  return standardize(impute_mean(drop_sparse_traits(traits, sparse_threshold)));
}

CcaSummary run_cca(const std::string& representation, const FeatureMatrix& features, const FeatureMatrix& prepared_traits,
                   double ridge) {
  if (features.row_ids != prepared_traits.row_ids) throw ValidationError("cca: feature and trait rows are not aligned");
  const auto x = standardize(features);
  CcaSummary s;
  s.representation = representation;
  s.model = stats::cca_fit(x.values, prepared_traits.values, ridge);
  s.wilks = stats::wilks_test(s.model.rho, x.n(), x.d(), prepared_traits.d());
  const Eigen::MatrixXd variates = stats::cca_x_variates(s.model, x.values);
  s.trait_correlations = stats::trait_correlations(variates.col(0), prepared_traits.values);
  s.feature_labels = x.column_labels;
  s.trait_labels = prepared_traits.column_labels;
  return s;
}

std::string format_cca(const CcaSummary& s) {
  std::string out = "section,component,name,value\n";
  const auto m = s.model.rho.size();
  for (Eigen::Index k = 0; k < m; ++k) out += "rho," + std::to_string(k + 1) + ",," + fmt(s.model.rho(k)) + "\n";
  for (const auto& w : s.wilks) {
    const auto k = std::to_string(w.k);
    out += "wilks_lambda," + k + ",," + fmt(w.lambda) + "\n";
    out += "wilks_statistic," + k + ",," + fmt(w.statistic) + "\n";
    out += "wilks_df," + k + ",," + fmt(w.df) + "\n";
    out += "wilks_p_value," + k + ",," + fmt(w.p_value) + "\n";
    out += "wilks_degenerate," + k + ",," + (w.degenerate ? "1" : "0") + "\n";
  }
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index j = 0; j < s.model.x_loadings.rows(); ++j) {
      out += "x_loading," + std::to_string(k + 1) + "," + csv::escape(s.feature_labels[j]) + "," +
             fmt(s.model.x_loadings(j, k)) + "\n";
    }
  }
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index j = 0; j < s.model.y_loadings.rows(); ++j) {
      out += "y_loading," + std::to_string(k + 1) + "," + csv::escape(s.trait_labels[j]) + "," +
             fmt(s.model.y_loadings(j, k)) + "\n";
    }
  }
  for (Eigen::Index j = 0; j < s.trait_correlations.size(); ++j) {
    out += "trait_correlation,1," + csv::escape(s.trait_labels[j]) + "," + fmt(s.trait_correlations(j)) + "\n";
  }
  return out;
}

Result run(const Inputs& inputs, const Options& options, const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (!inputs.hierarchy) throw ValidationError("pipeline: no hierarchy");
  const Hierarchy& h = *inputs.hierarchy;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory '" + out_dir + "': " + ec.message());

  Result res;
  auto write = [&](const std::string& name, const std::string& text) {
    csv::write_file((fs::path(out_dir) / name).string(), text);
    res.files.push_back(name);
  };

  res.reps = build_representations(h, inputs.cohort, options.components);
  const auto& reps = res.reps;
  const FeatureMatrix traits = reorder_traits(inputs.traits, reps.tree.row_ids);

  write("trees.csv", format_tree_csv(reps.trees));
  write("features_tree.csv", format_table(reps.tree));
  write("features_pca.csv", format_table(reps.pca_scores));
  {
    std::string s = "component,singular_value,variance_ratio\n";
    const double total = static_cast<double>(reps.am.d()) * static_cast<double>(reps.am.n() - 1);
    for (Eigen::Index k = 0; k < reps.pca.singular_values.size(); ++k) {
      const double sv = reps.pca.singular_values(k);
      s += "PC" + std::to_string(k + 1) + "," + fmt(sv) + "," + fmt(sv * sv / total) + "\n";
    }
    write("pca_summary.csv", s);
  }

  // CCA on both representations.
  const FeatureMatrix cca_traits = prepare_cca_traits(traits, options.sparse_threshold);
  res.cca_tree = run_cca("tree", reps.tree, cca_traits);
  res.cca_pca = run_cca("am_pca", reps.pca_scores, cca_traits);
  write("cca_tree.csv", format_cca(res.cca_tree));
  write("cca_am_pca.csv", format_cca(res.cca_pca));

  std::vector<viz::Desirability> desirability;
  if (!inputs.desirability.empty()) {
    for (const auto& t : cca_traits.column_labels) {
      auto it = inputs.desirability.find(t);
      desirability.push_back(it == inputs.desirability.end() ? viz::Desirability::unknown : it->second);
    }
  }
  for (const auto* s : {&res.cca_tree, &res.cca_pca}) {
    const Eigen::VectorXd b1 = s->model.y_loadings.col(0);
    std::vector<double> corr(s->trait_correlations.data(), s->trait_correlations.data() + s->trait_correlations.size());
    std::vector<double> load(b1.data(), b1.data() + b1.size());
    write("cca_" + s->representation + ".svg", viz::render_cca_scatter(corr, load, s->trait_labels, desirability));
  }

  // Cross-validated prediction on the retained traits.
  const FeatureMatrix cv_traits = drop_sparse_traits(traits, options.sparse_threshold);
  std::vector<std::unique_ptr<regression::Regressor>> owned;
  std::vector<const regression::Regressor*> regressors;
  for (const auto& name : options.regressors) {
    owned.push_back(regression::make_regressor(name));
    regressors.push_back(owned.back().get());
  }
  res.cv = regression::evaluate({{"tree", &reps.tree}, {"am_pca", &reps.pca_scores}}, cv_traits, regressors, options.cv,
                                options.threads);
  write("cv_report.csv", res.cv.to_csv());

  // BMA per requested trait, on both representations.
  const FeatureMatrix tree_std = standardize(reps.tree);
  const FeatureMatrix pca_std = standardize(reps.pca_scores);
  for (const auto& trait : options.bma_traits) {
    const auto col = traits.column_index(trait);
    if (col < 0) throw ValidationError("pipeline: unknown BMA trait '" + trait + "'");
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < traits.n(); ++i) {
      if (!std::isnan(traits.values(static_cast<Eigen::Index>(i), col))) rows.push_back(i);
    }
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = traits.values(static_cast<Eigen::Index>(rows[i]), col);
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().sum() / static_cast<double>(y.size() - 1));
    if (!(sd > 0.0)) throw ValidationError("pipeline: BMA trait '" + trait + "' has zero variance");
    y = (y.array() - mean) / sd;

    bma::BmaOptions bo;
    bo.draws = options.bma_draws;
    bo.seed = options.cv.seed;
    bo.threads = options.threads;
    const auto xt = select_rows(tree_std, rows);
    const auto tree_fit = bma::bma_fit(xt.values, y, bo, xt.column_labels);
    write("bma_tree_" + safe_name(trait) + ".csv", bma::format_result(tree_fit, options.bma_threshold));

    const auto xp = select_rows(pca_std, rows);
    const auto pca_fit = bma::bma_fit(xp.values, y, bo, xp.column_labels);
    write("bma_pca_" + safe_name(trait) + ".csv", bma::format_result(pca_fit, options.bma_threshold));

    // Coefficients on standardised scores -> raw scores -> AM edges.
    Eigen::VectorXd theta = pca_fit.avg_coef;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      const auto& s = reps.pca_scores.values.col(k);
      const double ssd = std::sqrt((s.array() - s.mean()).square().sum() / static_cast<double>(s.size() - 1));
      theta(k) /= ssd;
    }
    const Eigen::VectorXd beta = bma::backproject(theta, reps.pca);
    const auto top = bma::top_connections(beta, reps.am.column_labels, std::min(options.top_connections, reps.am.d()));
    std::string s = "rank,edge,coef\n";
    for (std::size_t i = 0; i < top.size(); ++i) {
      s += std::to_string(i + 1) + "," + top[i].label + "," + fmt(top[i].coef) + "\n";
    }
    write("top_connections_" + safe_name(trait) + ".csv", s);
  }

  // Figures.
  std::vector<std::size_t> everyone(reps.trees.size());
  std::iota(everyone.begin(), everyone.end(), 0);
  const auto all_trees = weighted(reps.trees, everyone);
  const WeightedTree mean = mean_tree(all_trees);
  write("chord_mean.svg", viz::render_chord(mean));
  write("tree_mean.svg", viz::render_tree_diagram(mean));
  const std::string compare_trait =
      !options.bma_traits.empty() ? options.bma_traits.front() : (cv_traits.d() ? cv_traits.column_labels.front() : "");
  if (!compare_trait.empty()) {
    const auto col = traits.column_index(compare_trait);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < traits.n(); ++i) {
      if (!std::isnan(traits.values(static_cast<Eigen::Index>(i), col))) rows.push_back(i);
    }
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      return traits.values(static_cast<Eigen::Index>(a), col) < traits.values(static_cast<Eigen::Index>(b), col);
    });
    const std::size_t tenth = std::max<std::size_t>(1, rows.size() / 10);
    const std::vector<std::size_t> bottom(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(tenth));
    const std::vector<std::size_t> top(rows.end() - static_cast<std::ptrdiff_t>(tenth), rows.end());
    const auto top_tree = mean_tree(weighted(reps.trees, top));
    const auto bottom_tree = mean_tree(weighted(reps.trees, bottom));
    write("tree_compare_" + safe_name(compare_trait) + ".svg", viz::render_tree_diagram(top_tree, &bottom_tree));
  }

  std::string summary = "key,value\n";
  summary += "subjects," + std::to_string(reps.tree.n()) + "\n";
  summary += "rois," + std::to_string(h.leaf_count()) + "\n";
  summary += "am_dimension," + std::to_string(reps.am.d()) + "\n";
  summary += "tree_dimension," + std::to_string(reps.tree.d()) + "\n";
  summary += "components," + std::to_string(options.components) + "\n";
  summary += "traits_total," + std::to_string(traits.d()) + "\n";
  summary += "traits_retained," + std::to_string(cca_traits.d()) + "\n";
  for (const auto* s : {&res.cca_tree, &res.cca_pca}) {
    summary += "cca_" + s->representation + "_rho1," + fmt(s->model.rho(0)) + "\n";
    summary += "cca_" + s->representation + "_wilks_p1," + fmt(s->wilks.front().p_value) + "\n";
  }
  summary += "folds," + std::to_string(options.cv.folds) + "\n";
  summary += "repeats," + std::to_string(options.cv.repeats) + "\n";
  summary += "seed," + std::to_string(options.cv.seed) + "\n";
  write("summary.csv", summary);
  return res;
}

}  // namespace ctree::pipeline
