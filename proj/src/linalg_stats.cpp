#include "ctree/linalg_stats.hpp"

#include "ctree/errors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace ctree::stats {

namespace {

constexpr double kEigenFloor = 1e-10;

Eigen::Index argmax_abs(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  }
  return best;
}

// (S + ridge I)^{-1/2} for symmetric positive semi-definite S.
Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& s, double ridge, const char* which) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s + ridge * Eigen::MatrixXd::Identity(s.rows(), s.cols()));
  if (eig.info() != Eigen::Success) throw ComputationError(std::string("cca: eigendecomposition failed for ") + which);
  Eigen::VectorXd values = eig.eigenvalues();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < kEigenFloor) {
      if (ridge == 0.0) throw ComputationError(std::string("cca: singular covariance of ") + which + " with ridge = 0");
      values(i) = kEigenFloor;
    }
  }
  const Eigen::VectorXd inv = values.array().rsqrt();
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

void orient_columns(Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const Eigen::VectorXd col = m.col(j);
    if (col.size() > 0 && col(argmax_abs(col)) < 0) m.col(j) = -m.col(j);
  }
}

PcaModel pca_fit(const Eigen::MatrixXd& x, std::size_t k) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  if (n < 2 || d == 0) throw ValidationError("pca_fit: need at least 2 rows and 1 column");
  if (k == 0 || k > std::min(n - 1, d)) {
    throw ValidationError("pca_fit: K=" + std::to_string(k) + " out of range [1, " + std::to_string(std::min(n - 1, d)) + "]");
  }
  if (x.hasNaN()) throw ValidationError("pca_fit: data has missing values");
  PcaModel model;
  model.n = n;
  model.k = k;
  model.column_means = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - model.column_means.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().size() == 0 || svd.singularValues()(0) <= 0.0) {
    throw ComputationError("pca_fit: degenerate data (all columns constant)");
  }
  const auto kk = static_cast<Eigen::Index>(k);
  model.singular_values = svd.singularValues().head(kk);
  model.axes = svd.matrixV().leftCols(kk);
  orient_columns(model.axes);
  return model;
}

Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.axes.rows()) {
    throw ValidationError("pca_transform: expected " + std::to_string(model.axes.rows()) + " columns, got " +
                          std::to_string(x.cols()));
  }
  return (x.rowwise() - model.column_means.transpose()) * model.axes;
}

Eigen::MatrixXd pca_reconstruct(const PcaModel& model, const Eigen::MatrixXd& scores) {
  return (scores * model.axes.transpose()).rowwise() + model.column_means.transpose();
}

CcaModel cca_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double ridge) {
  if (x.rows() != y.rows()) throw ValidationError("cca_fit: X and Y have different row counts");
  const auto n = x.rows();
  const auto p = x.cols();
  const auto q = y.cols();
  if (p == 0 || q == 0) throw ValidationError("cca_fit: empty feature set");
  if (n <= std::max(p, q)) throw ValidationError("cca_fit: need n > max(p, q)");
  if (ridge < 0.0) throw ValidationError("cca_fit: ridge must be >= 0");
  if (x.hasNaN() || y.hasNaN()) throw ValidationError("cca_fit: missing values; impute first");

  CcaModel model;
  model.x_means = x.colwise().mean().transpose();
  model.y_means = y.colwise().mean().transpose();
  const Eigen::MatrixXd xc = x.rowwise() - model.x_means.transpose();
  const Eigen::MatrixXd yc = y.rowwise() - model.y_means.transpose();
  const double denom = static_cast<double>(n - 1);
  const Eigen::MatrixXd sxx = xc.transpose() * xc / denom;
  const Eigen::MatrixXd syy = yc.transpose() * yc / denom;
  const Eigen::MatrixXd sxy = xc.transpose() * yc / denom;

  const Eigen::MatrixXd wx = inverse_sqrt(sxx, ridge, "X");
  const Eigen::MatrixXd wy = inverse_sqrt(syy, ridge, "Y");
  const Eigen::MatrixXd m = wx * sxy * wy;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Index k = std::min(p, q);
  model.rho = svd.singularValues().head(k).cwiseMax(0.0).cwiseMin(1.0);
  model.x_loadings = wx * svd.matrixU().leftCols(k);
  model.y_loadings = wy * svd.matrixV().leftCols(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::VectorXd b = model.y_loadings.col(j);
    if (b(argmax_abs(b)) < 0) {
      model.x_loadings.col(j) *= -1.0;
      model.y_loadings.col(j) *= -1.0;
    }
  }
  return model;
}

Eigen::MatrixXd cca_x_variates(const CcaModel& model, const Eigen::MatrixXd& x) {
  return (x.rowwise() - model.x_means.transpose()) * model.x_loadings;
}

Eigen::MatrixXd cca_y_variates(const CcaModel& model, const Eigen::MatrixXd& y) {
  return (y.rowwise() - model.y_means.transpose()) * model.y_loadings;
}

std::vector<WilksRow> wilks_test(const Eigen::VectorXd& rho, std::size_t n, std::size_t p, std::size_t q) {
  std::vector<WilksRow> rows;
  const auto m = static_cast<std::size_t>(rho.size());
  const double scale = static_cast<double>(n) - 1.0 - static_cast<double>(p + q + 1) / 2.0;
  for (std::size_t k = 1; k <= m; ++k) {
    WilksRow row;
    row.k = k;
    double lambda = 1.0;
    for (std::size_t i = k - 1; i < m; ++i) {
      const double r = rho(static_cast<Eigen::Index>(i));
      lambda *= 1.0 - r * r;
      if (r >= 1.0) row.degenerate = true;
    }
    row.lambda = std::max(0.0, lambda);
    row.df = static_cast<double>((p - k + 1) * (q - k + 1));
    if (row.degenerate || row.lambda == 0.0) {
      row.degenerate = true;
      row.statistic = std::numeric_limits<double>::infinity();
      row.p_value = 0.0;
    } else {
      row.statistic = -scale * std::log(row.lambda);
      row.p_value = row.statistic <= 0.0 ? 1.0 : boost::math::gamma_q(row.df / 2.0, row.statistic / 2.0);
    }
    rows.push_back(row);
  }
  return rows;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw ValidationError("pearson: length mismatch");
  const Eigen::VectorXd ac = a.array() - a.mean();
  const Eigen::VectorXd bc = b.array() - b.mean();
  const double den = std::sqrt(ac.squaredNorm() * bc.squaredNorm());
  if (!(den > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return ac.dot(bc) / den;
}

Eigen::VectorXd trait_correlations(const Eigen::VectorXd& variate, const Eigen::MatrixXd& y) {
  if (variate.size() != y.rows()) throw ValidationError("trait_correlations: length mismatch");
  Eigen::VectorXd out(y.cols());
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    const double r = pearson(variate, y.col(j));
    if (std::isnan(r)) throw ValidationError("trait_correlations: trait " + std::to_string(j) + " has zero variance");
    out(j) = r;
  }
  return out;
}

}  // namespace ctree::stats
