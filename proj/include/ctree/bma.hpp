#pragma once

#include "ctree/linalg_stats.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace ctree::bma {

inline constexpr std::size_t kMaxFeatures = 25;
inline constexpr double kDefaultThreshold = 0.75;

struct BmaOptions {
  double g = 0.0;  // Zellner g; <= 0 selects the unit-information prior g = n
  std::size_t draws = 10000;
  std::uint64_t seed = 0;
  int threads = 1;
  bool keep_model_weights = false;  // only honoured for p <= 20
};

struct BmaResult {
  std::vector<std::string> labels;
  Eigen::VectorXd inclusion_prob;
  Eigen::VectorXd avg_coef;
  Eigen::VectorXd interval_low;   // 2.5% posterior quantile
  Eigen::VectorXd interval_high;  // 97.5% posterior quantile
  std::uint64_t models_enumerated = 0;
  std::uint64_t models_skipped = 0;  // rank-deficient designs, weight 0
  double log_normalizer = 0.0;       // log sum of marginal likelihoods (null model = 0)
  double g = 0.0;
  // Posterior model weights indexed by inclusion bitmask (bit j = feature j).
  std::vector<double> model_weights;
};

// Zellner g-prior linear regression averaged over all 2^p models under a
// uniform model prior. x and y are centred internally.
BmaResult bma_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const BmaOptions& options = {},
                  std::vector<std::string> labels = {});

// log m(M) up to the model-independent constant.
double log_marginal_likelihood(std::size_t n, std::size_t k, double r_squared, double g);

struct SelectedFeature {
  std::size_t index = 0;
  std::string label;
  double inclusion_prob = 0.0;
  double coef = 0.0;
  double low = 0.0;
  double high = 0.0;
};

// Features with inclusion probability strictly above threshold.
std::vector<SelectedFeature> important_features(const BmaResult& result, double threshold = kDefaultThreshold);

// Least-norm pullback of principal-component coefficients: beta = V_K theta.
Eigen::VectorXd backproject(const Eigen::VectorXd& theta, const stats::PcaModel& pca);

struct RankedEdge {
  std::size_t index = 0;
  std::string label;
  double coef = 0.0;
};

// Top m entries by |beta|; ties go to the smaller label.
std::vector<RankedEdge> top_connections(const Eigen::VectorXd& beta, const std::vector<std::string>& labels,
                                        std::size_t m = 50);

// feature,inclusion_prob,avg_coef,ci_low,ci_high,selected
std::string format_result(const BmaResult& result, double threshold = kDefaultThreshold);

}  // namespace ctree::bma
