#pragma once

#include "ctree/atlas.hpp"
#include "ctree/bma.hpp"
#include "ctree/connectome.hpp"
#include "ctree/linalg_stats.hpp"
#include "ctree/regression.hpp"
#include "ctree/tree.hpp"
#include "ctree/viz.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ctree::pipeline {

inline constexpr std::size_t kDefaultComponents = 23;

// Tree features (internal nodes) and AM principal-component scores for one cohort.
struct Representations {
  std::vector<ConnectomeTree> trees;
  FeatureMatrix tree;      // raw node weights, zero-variance nodes dropped
  FeatureMatrix am;        // vectorised, filtered, standardised upper triangle
  stats::PcaModel pca;
  FeatureMatrix pca_scores;  // n x K, columns PC1..PCK
};

Representations build_representations(const Hierarchy& h, const std::vector<AdjacencyMatrix>& cohort,
                                      std::size_t components = kDefaultComponents);

struct CcaSummary {
  std::string representation;
  stats::CcaModel model;
  std::vector<stats::WilksRow> wilks;
  Eigen::VectorXd trait_correlations;  // with the first feature variate
  std::vector<std::string> feature_labels;
  std::vector<std::string> trait_labels;
};

// Traits with more than `sparse_threshold` missing are dropped, the rest are
// mean-imputed and standardised; features are standardised.
FeatureMatrix prepare_cca_traits(const FeatureMatrix& traits, double sparse_threshold = 0.10);
CcaSummary run_cca(const std::string& representation, const FeatureMatrix& features, const FeatureMatrix& prepared_traits,
                   double ridge = stats::kDefaultCcaRidge);

// Sections: loadings, correlations, wilks.
std::string format_cca(const CcaSummary& s);

struct Options {
  std::size_t components = kDefaultComponents;
  regression::CvConfig cv;
  std::vector<std::string> regressors = {"baseline", "linear", "ridge"};
  std::vector<std::string> bma_traits;
  std::size_t bma_draws = 10000;
  double bma_threshold = bma::kDefaultThreshold;
  std::size_t top_connections = 50;
  double sparse_threshold = 0.10;
  int threads = 1;
};

struct Inputs {
  std::shared_ptr<const Hierarchy> hierarchy;
  std::vector<AdjacencyMatrix> cohort;
  FeatureMatrix traits;
  std::map<std::string, viz::Desirability> desirability;  // by trait name
};

struct Result {
  Representations reps;
  CcaSummary cca_tree;
  CcaSummary cca_pca;
  regression::EvalReport cv;
  std::vector<std::string> files;  // written, relative to out_dir
};

// Runs trees -> features -> PCA -> CCA -> CV -> BMA -> plots, writing every
// artifact under out_dir. Deterministic for fixed inputs and seed.
Result run(const Inputs& inputs, const Options& options, const std::string& out_dir);

}  // namespace ctree::pipeline
