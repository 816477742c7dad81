#include "ctree/bma.hpp"

#include "ctree/csv.hpp"
#include "ctree/errors.hpp"
#include "ctree/parallel.hpp"
#include "ctree/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ctree::bma {

namespace {

constexpr double kRankTolerance = 1e-10;
constexpr std::size_t kMaxSegmentBits = 8;
constexpr std::size_t kMaxStoredWeightsBits = 20;

// Depth-first walk over inclusion masks. Including feature j appends one row
// to the Cholesky factor of the included Gram matrix, so each model costs
// O(k^2) instead of a fresh O(k^3) factorisation. A feature whose new pivot
// vanishes makes every superset in that subtree rank deficient; the subtree
// is skipped and counted.
class Enumerator {
 public:
  Enumerator(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty, double yty, std::size_t n, double g)
      : gram_(gram), xty_(xty), yty_(yty), n_(n), g_(g), p_(static_cast<std::size_t>(gram.rows())),
        chol_(Eigen::MatrixXd::Zero(gram.rows(), gram.rows())), z_(Eigen::VectorXd::Zero(gram.rows())),
        beta_(Eigen::VectorXd::Zero(gram.rows())) {
    included_.reserve(p_);
  }

  // Visits every model whose decisions for features [0, prefix_bits) match
  // `prefix`, calling visit(mask, k, log_m, r2). Returns the number of models
  // skipped as rank deficient.
  template <typename Visit>
  std::uint64_t run_segment(std::uint64_t prefix, std::size_t prefix_bits, Visit&& visit) {
    included_.clear();
    skipped_ = 0;
    for (std::size_t j = 0; j < prefix_bits; ++j) {
      if (prefix >> j & 1ULL) {
        if (!include(j)) return std::uint64_t{1} << (p_ - prefix_bits);
      }
    }
    descend(prefix_bits, prefix, visit);
    return skipped_;
  }

  // OLS coefficients of the current model in included-feature order.
  const Eigen::VectorXd& solve_beta() {
    const auto k = static_cast<Eigen::Index>(included_.size());
    for (Eigen::Index i = k - 1; i >= 0; --i) {
      double s = z_(i);
      for (Eigen::Index r = i + 1; r < k; ++r) s -= chol_(r, i) * beta_(r);
      beta_(i) = s / chol_(i, i);
    }
    return beta_;
  }

  const std::vector<std::size_t>& included() const { return included_; }

 private:
  bool include(std::size_t j) {
    const auto k = static_cast<Eigen::Index>(included_.size());
    double norm2 = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      double s = gram_(static_cast<Eigen::Index>(included_[i]), static_cast<Eigen::Index>(j));
      for (Eigen::Index r = 0; r < i; ++r) s -= chol_(i, r) * chol_(k, r);
      chol_(k, i) = s / chol_(i, i);
      norm2 += chol_(k, i) * chol_(k, i);
    }
    const double gjj = gram_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    const double d2 = gjj - norm2;
    if (!(d2 > kRankTolerance * gjj) || gjj <= 0.0) return false;
    const double d = std::sqrt(d2);
    chol_(k, k) = d;
    double s = xty_(static_cast<Eigen::Index>(j));
    for (Eigen::Index r = 0; r < k; ++r) s -= chol_(k, r) * z_(r);
    z_(k) = s / d;
    included_.push_back(j);
    return true;
  }

  template <typename Visit>
  void descend(std::size_t j, std::uint64_t mask, Visit& visit) {
    if (j == p_) {
      const auto k = static_cast<Eigen::Index>(included_.size());
      const double explained = k ? z_.head(k).squaredNorm() : 0.0;
      const double r2 = yty_ > 0.0 ? std::clamp(explained / yty_, 0.0, 1.0) : 0.0;
      visit(mask, included_.size(), log_marginal_likelihood(n_, included_.size(), r2, g_), r2);
      return;
    }
    descend(j + 1, mask, visit);
    if (include(j)) {
      descend(j + 1, mask | (std::uint64_t{1} << j), visit);
      included_.pop_back();
    } else {
      skipped_ += std::uint64_t{1} << (p_ - j - 1);
    }
  }

  const Eigen::MatrixXd& gram_;
  const Eigen::VectorXd& xty_;
  double yty_;
  std::size_t n_;
  double g_;
  std::size_t p_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd z_;
  Eigen::VectorXd beta_;
  std::vector<std::size_t> included_;
  std::uint64_t skipped_ = 0;
};

struct SegmentSums {
  double shift = -std::numeric_limits<double>::infinity();
  double total = 0.0;
  Eigen::VectorXd inclusion;
  Eigen::VectorXd coef;
  std::uint64_t visited = 0;
  std::uint64_t skipped = 0;

  void rescale_to(double new_shift) {
    if (std::isfinite(shift)) {
      const double f = std::exp(shift - new_shift);
      total *= f;
      inclusion *= f;
      coef *= f;
    }
    shift = new_shift;
  }
};

double quantile(std::vector<double>& v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

double log_marginal_likelihood(std::size_t n, std::size_t k, double r_squared, double g) {
  const double nm1 = static_cast<double>(n) - 1.0;
  return 0.5 * (nm1 - static_cast<double>(k)) * std::log1p(g) - 0.5 * nm1 * std::log1p(g * (1.0 - r_squared));
}

BmaResult bma_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const BmaOptions& options,
                  std::vector<std::string> labels) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto p = static_cast<std::size_t>(x.cols());
  if (static_cast<std::size_t>(y.size()) != n) throw ValidationError("bma_fit: X and y have different lengths");
  if (p > kMaxFeatures) {
    throw ValidationError("bma_fit: p=" + std::to_string(p) + " exceeds the enumeration limit of " +
                          std::to_string(kMaxFeatures));
  }
  if (n < 3) throw ValidationError("bma_fit: need at least 3 observations");
  if (x.hasNaN() || y.hasNaN()) throw ValidationError("bma_fit: missing values");
  if (labels.empty()) {
    for (std::size_t j = 0; j < p; ++j) labels.push_back("x" + std::to_string(j + 1));
  }
  if (labels.size() != p) throw ValidationError("bma_fit: label count does not match feature count");

  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const Eigen::MatrixXd gram = xc.transpose() * xc;
  const Eigen::VectorXd xty = xc.transpose() * yc;
  const double yty = yc.squaredNorm();
  const double g = options.g > 0.0 ? options.g : static_cast<double>(n);
  const double shrink = g / (1.0 + g);

  const std::size_t seg_bits = std::min(p, kMaxSegmentBits);
  const std::size_t segments = std::size_t{1} << seg_bits;
  const bool keep_weights = options.keep_model_weights && p <= kMaxStoredWeightsBits;
  std::vector<double> log_m;
  if (keep_weights) log_m.assign(std::size_t{1} << p, -std::numeric_limits<double>::infinity());

  std::vector<SegmentSums> sums(segments);
  parallel_for(segments, options.threads, [&](std::size_t s) {
    Enumerator e(gram, xty, yty, n, g);
    SegmentSums& acc = sums[s];
    acc.inclusion = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    acc.coef = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    acc.skipped = e.run_segment(s, seg_bits, [&](std::uint64_t mask, std::size_t k, double lm, double) {
      ++acc.visited;
      if (keep_weights) log_m[mask] = lm;
      if (lm > acc.shift) acc.rescale_to(lm);
      const double w = std::exp(lm - acc.shift);
      acc.total += w;
      if (k == 0) return;
      const auto& beta = e.solve_beta();
      const auto& inc = e.included();
      for (std::size_t i = 0; i < k; ++i) {
        acc.inclusion(static_cast<Eigen::Index>(inc[i])) += w;
        acc.coef(static_cast<Eigen::Index>(inc[i])) += w * shrink * beta(static_cast<Eigen::Index>(i));
      }
    });
  });

  // Deterministic merge in segment order.
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& s : sums) shift = std::max(shift, s.shift);
  double total = 0.0;
  Eigen::VectorXd inclusion = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  BmaResult result;
  std::vector<double> segment_mass(segments, 0.0);
  for (std::size_t s = 0; s < segments; ++s) {
    result.models_enumerated += sums[s].visited;
    result.models_skipped += sums[s].skipped;
    if (!std::isfinite(sums[s].shift)) continue;
    const double f = std::exp(sums[s].shift - shift);
    total += sums[s].total * f;
    inclusion += sums[s].inclusion * f;
    coef += sums[s].coef * f;
    segment_mass[s] = sums[s].total * f;
  }
  result.labels = std::move(labels);
  result.g = g;
  result.log_normalizer = shift + std::log(total);
  result.inclusion_prob = (inclusion / total).cwiseMin(1.0).cwiseMax(0.0);
  result.avg_coef = coef / total;
  if (keep_weights) {
    result.model_weights.resize(log_m.size());
    for (std::size_t m = 0; m < log_m.size(); ++m) result.model_weights[m] = std::exp(log_m[m] - result.log_normalizer);
  }

  // Credible intervals: sample models by posterior weight, then coefficients
  // from each model's conditional posterior (multivariate t).
  result.interval_low = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  result.interval_high = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  if (options.draws == 0 || p == 0) return result;

  Rng rng({options.seed, 0x626d6164ULL});
  std::vector<double> u(options.draws);
  for (auto& v : u) v = rng.uniform();
  std::sort(u.begin(), u.end());

  std::vector<std::vector<double>> seg_targets(segments);
  {
    double cum = 0.0;
    std::size_t s = 0;
    for (double v : u) {
      const double target = v * total;
      while (s + 1 < segments && cum + segment_mass[s] <= target) cum += segment_mass[s++];
      while (segment_mass[s] == 0.0 && s > 0) --s;  // only if trailing segments are empty
      seg_targets[s].push_back(segment_mass[s] > 0.0 ? (target - cum) / segment_mass[s] : 0.0);
    }
  }

  struct Pick {
    std::uint64_t mask = 0;
    std::size_t count = 0;
  };
  std::vector<std::vector<Pick>> picks(segments);
  parallel_for(segments, options.threads, [&](std::size_t s) {
    const auto& targets = seg_targets[s];
    if (targets.empty()) return;
    Enumerator e(gram, xty, yty, n, g);
    const double seg_total = sums[s].total;
    double cum = 0.0;
    std::size_t next = 0;
    std::uint64_t last_mask = 0;
    e.run_segment(s, seg_bits, [&](std::uint64_t mask, std::size_t, double lm, double) {
      const double w = std::exp(lm - sums[s].shift) / seg_total;
      cum += w;
      if (w > 0.0) last_mask = mask;
      std::size_t count = 0;
      while (next < targets.size() && targets[next] < cum) {
        ++count;
        ++next;
      }
      if (count) picks[s].push_back({mask, count});
    });
    if (next < targets.size()) picks[s].push_back({last_mask, targets.size() - next});
  });

  std::vector<Pick> all;
  for (auto& seg : picks) all.insert(all.end(), seg.begin(), seg.end());
  std::vector<std::vector<double>> samples(p);
  for (auto& v : samples) v.reserve(options.draws);
  const double dof = static_cast<double>(n) - 1.0;
  for (std::size_t m = 0; m < all.size(); ++m) {
    const auto& pick = all[m];
    std::vector<Eigen::Index> inc;
    for (std::size_t j = 0; j < p; ++j) {
      if (pick.mask >> j & 1ULL) inc.push_back(static_cast<Eigen::Index>(j));
    }
    Rng draw_rng({options.seed, m, 0x64726177ULL});
    if (inc.empty()) {
      for (std::size_t d = 0; d < pick.count; ++d) {
        for (std::size_t j = 0; j < p; ++j) samples[j].push_back(0.0);
      }
      continue;
    }
    const auto k = static_cast<Eigen::Index>(inc.size());
    Eigen::MatrixXd gm(k, k);
    Eigen::VectorXd cm(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      cm(a) = xty(inc[a]);
      for (Eigen::Index b = 0; b < k; ++b) gm(a, b) = gram(inc[a], inc[b]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(gm);
    const Eigen::VectorXd beta = llt.solve(cm);
    const double r2 = yty > 0.0 ? std::clamp(cm.dot(beta) / yty, 0.0, 1.0) : 0.0;
    const double scale_ss = yty * (1.0 - shrink * r2);
    const Eigen::MatrixXd lt = llt.matrixL().transpose();
    for (std::size_t d = 0; d < pick.count; ++d) {
      const double chi2 = draw_rng.gamma(dof / 2.0, 2.0);
      const double sigma2 = scale_ss / chi2;
      Eigen::VectorXd xi(k);
      for (Eigen::Index a = 0; a < k; ++a) xi(a) = draw_rng.normal();
      const Eigen::VectorXd noise = lt.triangularView<Eigen::Upper>().solve(xi);
      const Eigen::VectorXd b = shrink * beta + std::sqrt(shrink * sigma2) * noise;
      Eigen::Index a = 0;
      for (std::size_t j = 0; j < p; ++j) {
        if (a < k && inc[a] == static_cast<Eigen::Index>(j)) {
          samples[j].push_back(b(a++));
        } else {
          samples[j].push_back(0.0);
        }
      }
    }
  }
  for (std::size_t j = 0; j < p; ++j) {
    result.interval_low(static_cast<Eigen::Index>(j)) = quantile(samples[j], 0.025);
    result.interval_high(static_cast<Eigen::Index>(j)) = quantile(samples[j], 0.975);
  }
  return result;
}

std::vector<SelectedFeature> important_features(const BmaResult& result, double threshold) {
  std::vector<SelectedFeature> out;
  for (Eigen::Index j = 0; j < result.inclusion_prob.size(); ++j) {
    if (result.inclusion_prob(j) > threshold) {
      out.push_back({static_cast<std::size_t>(j), result.labels[static_cast<std::size_t>(j)], result.inclusion_prob(j),
                     result.avg_coef(j), result.interval_low(j), result.interval_high(j)});
    }
  }
  return out;
}

Eigen::VectorXd backproject(const Eigen::VectorXd& theta, const stats::PcaModel& pca) {
  if (theta.size() != pca.axes.cols()) {
    throw ValidationError("backproject: theta has " + std::to_string(theta.size()) + " entries, model has K=" +
                          std::to_string(pca.axes.cols()));
  }
  return pca.axes * theta;
}

std::vector<RankedEdge> top_connections(const Eigen::VectorXd& beta, const std::vector<std::string>& labels,
                                        std::size_t m) {
  const auto d = static_cast<std::size_t>(beta.size());
  if (labels.size() != d) throw ValidationError("top_connections: label count does not match coefficients");
  if (m > d) throw ValidationError("top_connections: m=" + std::to_string(m) + " exceeds d=" + std::to_string(d));
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(beta(static_cast<Eigen::Index>(a)));
    const double mb = std::abs(beta(static_cast<Eigen::Index>(b)));
    if (ma != mb) return ma > mb;
    return labels[a] < labels[b];
  });
  std::vector<RankedEdge> out;
  for (std::size_t i = 0; i < m; ++i) {
    out.push_back({order[i], labels[order[i]], beta(static_cast<Eigen::Index>(order[i]))});
  }
  return out;
}

std::string format_result(const BmaResult& result, double threshold) {
  std::string out = "feature,inclusion_prob,avg_coef,ci_low,ci_high,selected\n";
  for (Eigen::Index j = 0; j < result.inclusion_prob.size(); ++j) {
    out += csv::escape(result.labels[static_cast<std::size_t>(j)]) + "," + csv::format_double(result.inclusion_prob(j)) +
           "," + csv::format_double(result.avg_coef(j)) + "," + csv::format_double(result.interval_low(j)) + "," +
           csv::format_double(result.interval_high(j)) + "," + (result.inclusion_prob(j) > threshold ? "true" : "false") +
           "\n";
  }
  return out;
}

}  // namespace ctree::bma
