#pragma once

#include "ctree/connectome.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ctree::regression {

struct CvConfig {
  std::size_t folds = 5;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
};

// assignment[r][i] = fold of row i in repeat r. Each repeat is a seeded
// random partition with fold sizes within one of each other.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, const CvConfig& config);

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& x) const = 0;
};

// fit/predict contract for the CV harness. `seed` feeds any internal
// randomness so results are reproducible.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<Predictor> fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                         std::uint64_t seed) const = 0;
};

class ConstantPredictor : public Predictor {
 public:
  explicit ConstantPredictor(double value) : value_(value) {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override;
  double value() const { return value_; }

 private:
  double value_;
};

class LinearPredictor : public Predictor {
 public:
  LinearPredictor(double intercept, Eigen::VectorXd coefficients)
      : intercept_(intercept), coefficients_(std::move(coefficients)) {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override;
  double intercept() const { return intercept_; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }

 private:
  double intercept_;
  Eigen::VectorXd coefficients_;
};

struct GpHyperparameters {
  double lengthscale = 1.0;
  double signal_sd = 1.0;
  double noise_sd = 0.1;
};

struct GpOptions {
  std::size_t starts = 16;
  std::size_t evaluations = 200;  // per start
};

class GpPredictor : public Predictor {
 public:
  GpPredictor(Eigen::MatrixXd train_x, Eigen::VectorXd alpha, double mean, GpHyperparameters hyper,
              double log_marginal_likelihood)
      : train_x_(std::move(train_x)), alpha_(std::move(alpha)), mean_(mean), hyper_(hyper),
        log_marginal_likelihood_(log_marginal_likelihood) {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override;
  const GpHyperparameters& hyperparameters() const { return hyper_; }
  double log_marginal_likelihood() const { return log_marginal_likelihood_; }

 private:
  Eigen::MatrixXd train_x_;
  Eigen::VectorXd alpha_;
  double mean_;
  GpHyperparameters hyper_;
  double log_marginal_likelihood_;
};

ConstantPredictor baseline_mean(const Eigen::VectorXd& train_y);
// Least squares with intercept; ridge penalises the slopes only.
LinearPredictor fit_linear(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y, double ridge = 0.0);
// Squared-exponential GP with noise; hyperparameters maximise the log
// marginal likelihood over a seeded multi-start Nelder-Mead search.
GpPredictor fit_gp(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y, const GpOptions& options = {},
                   std::uint64_t seed = 0);
// Posterior mean predictor at fixed hyperparameters.
GpPredictor fit_gp_fixed(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y,
                         const GpHyperparameters& hyper);
double gp_log_marginal_likelihood(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y,
                                  const GpHyperparameters& hyper);

class BaselineRegressor : public Regressor {
 public:
  std::string name() const override { return "baseline"; }
  std::unique_ptr<Predictor> fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed) const override;
};

class LinearRegressor : public Regressor {
 public:
  explicit LinearRegressor(double ridge = 0.0, std::string name = "linear") : ridge_(ridge), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  std::unique_ptr<Predictor> fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed) const override;

 private:
  double ridge_;
  std::string name_;
};

class GpRegressor : public Regressor {
 public:
  explicit GpRegressor(GpOptions options = {}) : options_(options) {}
  std::string name() const override { return "gp"; }
  std::unique_ptr<Predictor> fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed) const override;

 private:
  GpOptions options_;
};

inline constexpr double kDefaultRidgePenalty = 1.0;

// "baseline", "linear", "ridge", "gp".
std::unique_ptr<Regressor> make_regressor(const std::string& name, const GpOptions& gp = {});

struct Representation {
  std::string name;
  const FeatureMatrix* features = nullptr;
};

struct EvalRow {
  std::string representation;
  std::string regressor;
  std::string trait;
  std::size_t subjects = 0;
  double corr_mean = 0.0;
  double corr_sd = 0.0;
  double mse_impr_mean = 0.0;
  double mse_impr_sd = 0.0;
  double mse_mean = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  // representation,regressor,trait,corr_mean,corr_sd,mse_impr_mean,mse_impr_sd
  std::string to_csv() const;
  const EvalRow* find(const std::string& representation, const std::string& regressor, const std::string& trait) const;
};

// Repeated k-fold CV. Per (trait, repeat) the out-of-fold predictions are
// pooled; correlation and %MSE improvement over the baseline mean are then
// averaged over repeats. Subjects missing a trait are dropped for that trait.
// Features are standardised with training-fold statistics only.
EvalReport evaluate(const std::vector<Representation>& representations, const FeatureMatrix& traits,
                    const std::vector<const Regressor*>& regressors, const CvConfig& config, int threads = 1);

}  // namespace ctree::regression
