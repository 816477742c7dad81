#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace ctree::stats {

// Principal axes of column-centered data.
struct PcaModel {
  Eigen::VectorXd column_means;    // d
  Eigen::MatrixXd axes;            // d x K, orthonormal columns
  Eigen::VectorXd singular_values; // K, decreasing
  std::size_t k = 0;
  std::size_t n = 0;
};

PcaModel pca_fit(const Eigen::MatrixXd& x, std::size_t k);
// (x - mean) * axes
Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& x);
Eigen::MatrixXd pca_reconstruct(const PcaModel& model, const Eigen::MatrixXd& scores);

struct CcaModel {
  Eigen::MatrixXd x_loadings;  // p x m  (a_k)
  Eigen::MatrixXd y_loadings;  // q x m  (b_k)
  Eigen::VectorXd rho;         // m, decreasing, in [0, 1]
  Eigen::VectorXd x_means;
  Eigen::VectorXd y_means;
};

inline constexpr double kDefaultCcaRidge = 1e-8;

// Whitened cross-covariance SVD. Each pair is oriented so the largest
// magnitude entry of b_k is positive.
CcaModel cca_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double ridge = kDefaultCcaRidge);
Eigen::MatrixXd cca_x_variates(const CcaModel& model, const Eigen::MatrixXd& x);
Eigen::MatrixXd cca_y_variates(const CcaModel& model, const Eigen::MatrixXd& y);

struct WilksRow {
  std::size_t k = 0;
  double lambda = 1.0;
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  bool degenerate = false;  // some rho_i == 1; statistic infinite
};

// Bartlett's chi-square approximation to Wilks's lambda for k = 1..m.
std::vector<WilksRow> wilks_test(const Eigen::VectorXd& rho, std::size_t n, std::size_t p, std::size_t q);

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
Eigen::VectorXd trait_correlations(const Eigen::VectorXd& variate, const Eigen::MatrixXd& y);

// Flips column signs so each column's largest-magnitude entry is positive.
void orient_columns(Eigen::MatrixXd& m);

}  // namespace ctree::stats
