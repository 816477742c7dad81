#include "ctree/regression.hpp"

#include "ctree/csv.hpp"
#include "ctree/errors.hpp"
#include "ctree/linalg_stats.hpp"
#include "ctree/parallel.hpp"
#include "ctree/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace ctree::regression {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093453;

// ---------------------------------------------------------------------------
// Gaussian process internals

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::VectorXd an = a.rowwise().squaredNorm();
  const Eigen::VectorXd bn = b.rowwise().squaredNorm();
  Eigen::MatrixXd d = (-2.0 * a * b.transpose()).colwise() + an;
  d.rowwise() += bn.transpose();
  return d.cwiseMax(0.0);
}

struct GpFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  bool ok = false;
};

// Cholesky of the kernel matrix, escalating diagonal jitter 1e-8 -> 1e-4.
GpFactor factor_kernel(const Eigen::MatrixXd& d2, const GpHyperparameters& h) {
  const Eigen::Index n = d2.rows();
  Eigen::MatrixXd k = (h.signal_sd * h.signal_sd) * (-d2.array() / (2.0 * h.lengthscale * h.lengthscale)).exp();
  k.diagonal().array() += h.noise_sd * h.noise_sd;
  GpFactor f;
  f.llt.compute(k);
  if (f.llt.info() == Eigen::Success) {
    f.ok = true;
    return f;
  }
  for (double jitter = 1e-8; jitter <= 1e-4 * 1.0001; jitter *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter * std::max(1.0, h.signal_sd * h.signal_sd);
    f.llt.compute(kj);
    if (f.llt.info() == Eigen::Success) {
      f.ok = true;
      f.jitter = jitter;
      return f;
    }
  }
  (void)n;
  return f;
}

double log_marginal(const Eigen::MatrixXd& d2, const Eigen::VectorXd& yc, const GpHyperparameters& h) {
  const auto f = factor_kernel(d2, h);
  if (!f.ok) return -kInf;
  const Eigen::VectorXd alpha = f.llt.solve(yc);
  const double log_det = 2.0 * f.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * yc.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(yc.size()) * kLog2Pi;
}

double median_pairwise_distance(const Eigen::MatrixXd& d2) {
  std::vector<double> v;
  const Eigen::Index n = d2.rows();
  v.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) v.push_back(std::sqrt(d2(i, j)));
  }
  if (v.empty()) return 1.0;
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid > 0.0 ? *mid : 1.0;
}

using Point = std::array<double, 3>;

// Nelder-Mead minimiser with a hard evaluation cap.
std::pair<Point, double> nelder_mead(const std::function<double(const Point&)>& f, Point start, double step,
                                     std::size_t max_evals) {
  std::array<Point, 4> simplex;
  std::array<double, 4> values;
  std::size_t evals = 0;
  auto eval = [&](const Point& p) {
    ++evals;
    return f(p);
  };
  simplex[0] = start;
  values[0] = eval(start);
  for (std::size_t i = 0; i < 3; ++i) {
    Point p = start;
    p[i] += step;
    simplex[i + 1] = p;
    values[i + 1] = eval(p);
  }
  while (evals + 1 < max_evals) {
    std::array<std::size_t, 4> order{0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::array<Point, 4> s;
    std::array<double, 4> v;
    for (std::size_t i = 0; i < 4; ++i) {
      s[i] = simplex[order[i]];
      v[i] = values[order[i]];
    }
    simplex = s;
    values = v;

    double size = 0.0;
    for (std::size_t i = 1; i < 4; ++i) {
      for (std::size_t d = 0; d < 3; ++d) size = std::max(size, std::abs(simplex[i][d] - simplex[0][d]));
    }
    if (std::isfinite(values[3]) && values[3] - values[0] < 1e-9 && size < 1e-6) break;

    Point centroid{0, 0, 0};
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t d = 0; d < 3; ++d) centroid[d] += simplex[i][d] / 3.0;
    }
    auto along = [&](double t) {
      Point p;
      for (std::size_t d = 0; d < 3; ++d) p[d] = centroid[d] + t * (simplex[3][d] - centroid[d]);
      return p;
    };
    const Point xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < values[0]) {
      const Point xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[3] = xe;
        values[3] = fe;
      } else {
        simplex[3] = xr;
        values[3] = fr;
      }
      continue;
    }
    if (fr < values[2]) {
      simplex[3] = xr;
      values[3] = fr;
      continue;
    }
    const bool outside = fr < values[3];
    const Point xc = along(outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : values[3])) {
      simplex[3] = xc;
      values[3] = fc;
      continue;
    }
    for (std::size_t i = 1; i < 4; ++i) {
      for (std::size_t d = 0; d < 3; ++d) simplex[i][d] = simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]);
      values[i] = eval(simplex[i]);
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < 4; ++i) {
    if (values[i] < values[best]) best = i;
  }
  return {simplex[best], values[best]};
}

// ---------------------------------------------------------------------------
// CV helpers

struct Scaler {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Scaler fit(const Eigen::MatrixXd& x) {
    Scaler s;
    const double n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean();
    s.scale.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double var = n > 1 ? (x.col(j).array() - s.mean(j)).square().sum() / (n - 1.0) : 0.0;
      s.scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean).array().rowwise() / scale.array();
  }
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

Eigen::VectorXd rows_of(const Eigen::VectorXd& y, const std::vector<std::size_t>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out(static_cast<Eigen::Index>(k)) = y(static_cast<Eigen::Index>(rows[k]));
  return out;
}

// Out-of-fold predictions pooled over all folds of one repeat.
Eigen::VectorXd pooled_predictions(const Regressor& reg, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   const std::vector<std::size_t>& fold_of, std::size_t folds, std::uint64_t seed) {
  Eigen::VectorXd pred(y.size());
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == f ? test : train).push_back(i);
    if (test.empty()) continue;
    const Eigen::MatrixXd xtr_raw = rows_of(x, train);
    const Scaler scaler = Scaler::fit(xtr_raw);
    const auto model = reg.fit(scaler.apply(xtr_raw), rows_of(y, train), seed * 131 + f);
    const Eigen::VectorXd p = model->predict(scaler.apply(rows_of(x, test)));
    for (std::size_t k = 0; k < test.size(); ++k) pred(static_cast<Eigen::Index>(test[k])) = p(static_cast<Eigen::Index>(k));
  }
  return pred;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, const CvConfig& config) {
  if (config.folds < 2) throw ValidationError("kfold_split: folds must be >= 2");
  if (config.repeats < 1) throw ValidationError("kfold_split: repeats must be >= 1");
  if (n < config.folds) {
    throw ValidationError("kfold_split: n=" + std::to_string(n) + " is smaller than folds=" + std::to_string(config.folds));
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t r = 0; r < config.repeats; ++r) {
    Rng rng({config.seed, r, 0x6b666f6c64ULL});
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<std::size_t> fold_of(n);
    for (std::size_t pos = 0; pos < n; ++pos) fold_of[order[pos]] = pos % config.folds;
    out.push_back(std::move(fold_of));
  }
  return out;
}

Eigen::VectorXd ConstantPredictor::predict(const Eigen::MatrixXd& x) const {
  return Eigen::VectorXd::Constant(x.rows(), value_);
}

Eigen::VectorXd LinearPredictor::predict(const Eigen::MatrixXd& x) const {
  if (x.cols() != coefficients_.size()) throw ValidationError("linear predictor: feature count mismatch");
  return (x * coefficients_).array() + intercept_;
}

Eigen::VectorXd GpPredictor::predict(const Eigen::MatrixXd& x) const {
  if (x.cols() != train_x_.cols()) throw ValidationError("gp predictor: feature count mismatch");
  const Eigen::MatrixXd d2 = squared_distances(x, train_x_);
  const Eigen::MatrixXd k =
      (hyper_.signal_sd * hyper_.signal_sd) * (-d2.array() / (2.0 * hyper_.lengthscale * hyper_.lengthscale)).exp();
  return (k * alpha_).array() + mean_;
}

ConstantPredictor baseline_mean(const Eigen::VectorXd& train_y) {
  if (train_y.size() == 0) throw ValidationError("baseline_mean: empty training outcome");
  return ConstantPredictor(train_y.mean());
}

LinearPredictor fit_linear(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y, double ridge) {
  if (train_x.rows() != train_y.size() || train_y.size() == 0) throw ValidationError("fit_linear: bad dimensions");
  if (ridge < 0.0) throw ValidationError("fit_linear: ridge must be >= 0");
  const Eigen::RowVectorXd xm = train_x.colwise().mean();
  const double ym = train_y.mean();
  const Eigen::MatrixXd xc = train_x.rowwise() - xm;
  const Eigen::VectorXd yc = train_y.array() - ym;
  Eigen::VectorXd beta;
  if (ridge == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
    if (qr.rank() < xc.cols()) throw ComputationError("fit_linear: singular normal equations (use ridge > 0)");
    beta = qr.solve(yc);
  } else {
    Eigen::MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += ridge;
    beta = gram.ldlt().solve(xc.transpose() * yc);
  }
  const double intercept = ym - xm.dot(beta);
  return LinearPredictor(intercept, std::move(beta));
}

double gp_log_marginal_likelihood(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y,
                                  const GpHyperparameters& hyper) {
  const Eigen::VectorXd yc = train_y.array() - train_y.mean();
  return log_marginal(squared_distances(train_x, train_x), yc, hyper);
}

GpPredictor fit_gp_fixed(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y,
                         const GpHyperparameters& hyper) {
  if (train_x.rows() != train_y.size() || train_y.size() == 0) throw ValidationError("fit_gp: bad dimensions");
  const double mean = train_y.mean();
  const Eigen::VectorXd yc = train_y.array() - mean;
  const Eigen::MatrixXd d2 = squared_distances(train_x, train_x);
  const auto f = factor_kernel(d2, hyper);
  if (!f.ok) throw ComputationError("fit_gp: kernel matrix not positive definite even with 1e-4 jitter");
  Eigen::VectorXd alpha = f.llt.solve(yc);
  const double log_det = 2.0 * f.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double lml = -0.5 * yc.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(yc.size()) * kLog2Pi;
  return GpPredictor(train_x, std::move(alpha), mean, hyper, lml);
}

GpPredictor fit_gp(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y, const GpOptions& options,
                   std::uint64_t seed) {
  if (train_x.rows() != train_y.size() || train_y.size() < 2) throw ValidationError("fit_gp: need >= 2 training rows");
  if (options.starts == 0 || options.evaluations < 4) throw ValidationError("fit_gp: need >= 1 start and >= 4 evaluations");
  const Eigen::VectorXd yc = train_y.array() - train_y.mean();
  const Eigen::MatrixXd d2 = squared_distances(train_x, train_x);
  const double med = median_pairwise_distance(d2);
  double y_sd = std::sqrt(yc.squaredNorm() / static_cast<double>(yc.size() - 1));
  if (!(y_sd > 0.0)) y_sd = 1.0;

  // Search in log space inside a box around the data scales.
  const Point lo{std::log(med) - 7.0, std::log(y_sd) - 12.0, std::log(y_sd) - 12.0};
  const Point hi{std::log(med) + 7.0, std::log(y_sd) + 5.0, std::log(y_sd) + 5.0};
  auto objective = [&](const Point& p) {
    for (std::size_t d = 0; d < 3; ++d) {
      if (p[d] < lo[d] || p[d] > hi[d]) return kInf;
    }
    const double lml = log_marginal(d2, yc, {std::exp(p[0]), std::exp(p[1]), std::exp(p[2])});
    return std::isfinite(lml) ? -lml : kInf;
  };

  Rng rng({seed, 0x67707374ULL});
  Point best{std::log(med), std::log(y_sd), std::log(0.5 * y_sd)};
  double best_value = kInf;
  for (std::size_t s = 0; s < options.starts; ++s) {
    Point start{std::log(med), std::log(y_sd), std::log(0.5 * y_sd)};
    if (s > 0) {
      start[0] += rng.normal(0.0, 1.0);
      start[1] += rng.normal(0.0, 1.0);
      start[2] += rng.normal(-1.0, 1.5);
      for (std::size_t d = 0; d < 3; ++d) start[d] = std::clamp(start[d], lo[d], hi[d]);
    }
    auto [point, value] = nelder_mead(objective, start, 1.0, options.evaluations);
    if (value < best_value) {
      best_value = value;
      best = point;
    }
  }
  return fit_gp_fixed(train_x, train_y, {std::exp(best[0]), std::exp(best[1]), std::exp(best[2])});
}

std::unique_ptr<Predictor> BaselineRegressor::fit(const Eigen::MatrixXd&, const Eigen::VectorXd& y,
                                                  std::uint64_t) const {
  return std::make_unique<ConstantPredictor>(baseline_mean(y));
}

std::unique_ptr<Predictor> LinearRegressor::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                                std::uint64_t) const {
  return std::make_unique<LinearPredictor>(fit_linear(x, y, ridge_));
}

std::unique_ptr<Predictor> GpRegressor::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                            std::uint64_t seed) const {
  return std::make_unique<GpPredictor>(fit_gp(x, y, options_, seed));
}

std::unique_ptr<Regressor> make_regressor(const std::string& name, const GpOptions& gp) {
  if (name == "baseline") return std::make_unique<BaselineRegressor>();
  if (name == "linear") return std::make_unique<LinearRegressor>(0.0, "linear");
  if (name == "ridge") return std::make_unique<LinearRegressor>(kDefaultRidgePenalty, "ridge");
  if (name == "gp") return std::make_unique<GpRegressor>(gp);
  throw ValidationError("unknown regressor '" + name + "' (expected baseline, linear, ridge or gp)");
}

std::string EvalReport::to_csv() const {
  std::string out = "representation,regressor,trait,corr_mean,corr_sd,mse_impr_mean,mse_impr_sd\n";
  for (const auto& r : rows) {
    out += csv::escape(r.representation) + "," + csv::escape(r.regressor) + "," + csv::escape(r.trait) + "," +
           csv::format_double(r.corr_mean) + "," + csv::format_double(r.corr_sd) + "," +
           csv::format_double(r.mse_impr_mean) + "," + csv::format_double(r.mse_impr_sd) + "\n";
  }
  return out;
}

const EvalRow* EvalReport::find(const std::string& representation, const std::string& regressor,
                                const std::string& trait) const {
  for (const auto& r : rows) {
    if (r.representation == representation && r.regressor == regressor && r.trait == trait) return &r;
  }
  return nullptr;
}

EvalReport evaluate(const std::vector<Representation>& representations, const FeatureMatrix& traits,
                    const std::vector<const Regressor*>& regressors, const CvConfig& config, int threads) {
  if (representations.empty() || regressors.empty()) throw ValidationError("evaluate: nothing to evaluate");
  for (const auto& rep : representations) {
    if (!rep.features || rep.features->row_ids != traits.row_ids) {
      throw ValidationError("evaluate: representation '" + rep.name + "' rows are not aligned with the trait table");
    }
    if (rep.features->values.hasNaN()) throw ValidationError("evaluate: representation '" + rep.name + "' has missing values");
  }
  const std::size_t n_traits = traits.d();
  const std::size_t n_combo = representations.size() * regressors.size();
  const BaselineRegressor baseline;

  struct Metrics {
    double corr = 0.0;
    double impr = 0.0;
    double mse = 0.0;
  };
  // slots[trait][repeat][combo]
  std::vector<std::vector<std::vector<Metrics>>> slots(
      n_traits, std::vector<std::vector<Metrics>>(config.repeats, std::vector<Metrics>(n_combo)));
  std::vector<std::size_t> subjects(n_traits, 0);

  std::vector<std::vector<std::size_t>> observed(n_traits);
  std::vector<std::vector<std::vector<std::size_t>>> splits(n_traits);
  for (std::size_t t = 0; t < n_traits; ++t) {
    for (std::size_t i = 0; i < traits.n(); ++i) {
      if (!std::isnan(traits.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)))) observed[t].push_back(i);
    }
    subjects[t] = observed[t].size();
    splits[t] = kfold_split(observed[t].size(), config);
  }

  parallel_for(n_traits * config.repeats, threads, [&](std::size_t task) {
    const std::size_t t = task / config.repeats;
    const std::size_t r = task % config.repeats;
    const auto& rows = observed[t];
    const Eigen::VectorXd y = rows_of(Eigen::VectorXd(traits.values.col(static_cast<Eigen::Index>(t))), rows);
    const auto& fold_of = splits[t][r];
    const Eigen::MatrixXd none(static_cast<Eigen::Index>(rows.size()), 0);
    const Eigen::VectorXd base = pooled_predictions(baseline, none, y, fold_of, config.folds, 0);
    const double mse_base = (base - y).squaredNorm() / static_cast<double>(y.size());
    for (std::size_t a = 0; a < representations.size(); ++a) {
      const Eigen::MatrixXd x = rows_of(representations[a].features->values, rows);
      for (std::size_t g = 0; g < regressors.size(); ++g) {
        const std::size_t combo = a * regressors.size() + g;
        const std::uint64_t seed = config.seed ^ (0x9e3779b97f4a7c15ULL * (1 + (t * config.repeats + r) * n_combo + combo));
        const Eigen::VectorXd pred = pooled_predictions(*regressors[g], x, y, fold_of, config.folds, seed);
        Metrics& m = slots[t][r][combo];
        m.mse = (pred - y).squaredNorm() / static_cast<double>(y.size());
        m.impr = mse_base > 0.0 ? 100.0 * (mse_base - m.mse) / mse_base : 0.0;
        m.corr = stats::pearson(pred, y);
      }
    }
  });

  EvalReport report;
  for (std::size_t a = 0; a < representations.size(); ++a) {
    for (std::size_t g = 0; g < regressors.size(); ++g) {
      const std::size_t combo = a * regressors.size() + g;
      for (std::size_t t = 0; t < n_traits; ++t) {
        std::vector<double> corr;
        std::vector<double> impr;
        std::vector<double> mse;
        for (std::size_t r = 0; r < config.repeats; ++r) {
          corr.push_back(slots[t][r][combo].corr);
          impr.push_back(slots[t][r][combo].impr);
          mse.push_back(slots[t][r][combo].mse);
        }
        EvalRow row;
        row.representation = representations[a].name;
        row.regressor = regressors[g]->name();
        row.trait = traits.column_labels[t];
        row.subjects = subjects[t];
        row.corr_mean = mean_of(corr);
        row.corr_sd = sd_of(corr);
        row.mse_impr_mean = mean_of(impr);
        row.mse_impr_sd = sd_of(impr);
        row.mse_mean = mean_of(mse);
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

}  // namespace ctree::regression
