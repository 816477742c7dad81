#include "bma_reference.hpp"

#include "ctree/bma.hpp"
#include "ctree/errors.hpp"
#include "ctree/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace ctree;
using namespace ctree::bma;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index n, Eigen::Index d, Rng& rng) {
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("enumeration matches the slow reference") {
  for (int p : {1, 3, 6, 10}) {
    Rng rng({17, static_cast<std::uint64_t>(p)});
    const Eigen::Index n = 80;
    Eigen::MatrixXd x = gaussian(n, p, rng);
    Eigen::VectorXd y = gaussian(n, 1, rng).col(0);
    y += 0.7 * x.col(0);
    if (p > 2) y -= 0.4 * x.col(2);
    BmaOptions o;
    o.keep_model_weights = true;
    o.draws = 200;
    const auto r = bma_fit(x, y, o);
    const auto ref = testing::slow_bma(x, y, static_cast<double>(n));
    REQUIRE(r.model_weights.size() == ref.weights.size());
    double worst = 0;
    for (std::size_t m = 0; m < ref.weights.size(); ++m) worst = std::max(worst, std::abs(r.model_weights[m] - ref.weights[m]));
    CHECK(worst < 1e-10);
    CHECK((r.inclusion_prob - ref.inclusion).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((r.avg_coef - ref.coef).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(r.models_enumerated == (std::uint64_t{1} << p));
  }
}

TEST_CASE("two-model closed form") {
  Rng rng(3);
  const Eigen::Index n = 40;
  const Eigen::MatrixXd x = gaussian(n, 1, rng);
  const Eigen::VectorXd y = 0.3 * x.col(0) + gaussian(n, 1, rng).col(0);
  const Eigen::VectorXd xc = x.col(0).array() - x.col(0).mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double r2 = std::pow(xc.dot(yc), 2) / (xc.squaredNorm() * yc.squaredNorm());
  const double g = static_cast<double>(n);
  // null model marginal is 1; one-predictor model has k = 1
  const double bf = std::exp((n - 2) / 2.0 * std::log(1 + g) - (n - 1) / 2.0 * std::log(1 + g * (1 - r2)));
  const auto r = bma_fit(x, y);
  CHECK(r.inclusion_prob[0] == doctest::Approx(bf / (1 + bf)).epsilon(1e-12));
}

TEST_CASE("planted signal is recovered; noise is not") {
  Rng rng(5);
  const Eigen::Index n = 500;
  const Eigen::MatrixXd x = gaussian(n, 5, rng);
  const Eigen::VectorXd noise = gaussian(n, 1, rng).col(0);
  const Eigen::VectorXd y = 3 * x.col(0) + 0.5 * noise;
  BmaOptions o;
  o.draws = 2000;
  const auto r = bma_fit(x, y, o, {"x1", "x2", "x3", "x4", "x5"});
  CHECK(r.inclusion_prob[0] > 0.99);
  for (int j = 1; j < 5; ++j) CHECK(r.inclusion_prob[j] < 0.5);
  CHECK(r.interval_low[0] < 3.0);
  CHECK(r.interval_high[0] > 3.0);
  const auto sel = important_features(r, 0.75);
  REQUIRE(sel.size() == 1);
  CHECK(sel[0].label == "x1");
  CHECK(important_features(r, 0.0).size() == 5);
  CHECK(important_features(r, 1.0).empty());

  const auto null = bma_fit(x, noise, o);
  for (int j = 0; j < 5; ++j) CHECK(null.inclusion_prob[j] < 0.5);
}

TEST_CASE("results do not depend on the thread count") {
  Rng rng(8);
  const Eigen::MatrixXd x = gaussian(60, 12, rng);
  const Eigen::VectorXd y = x.col(3) + gaussian(60, 1, rng).col(0);
  BmaOptions a;
  a.draws = 300;
  a.seed = 4;
  BmaOptions b = a;
  b.threads = 4;
  CHECK(format_result(bma_fit(x, y, a)) == format_result(bma_fit(x, y, b)));
}

TEST_CASE("collinear column is handled") {
  Rng rng(9);
  Eigen::MatrixXd x = gaussian(50, 3, rng);
  x.col(2) = x.col(0) * 2.0;
  const Eigen::VectorXd y = x.col(1) + gaussian(50, 1, rng).col(0);
  BmaOptions o;
  o.draws = 100;
  const auto r = bma_fit(x, y, o);
  CHECK(r.models_skipped > 0);
  CHECK(std::isfinite(r.inclusion_prob.sum()));
}

TEST_CASE("too many features") {
  Rng rng(1);
  CHECK_THROWS_AS(bma_fit(gaussian(30, 26, rng), gaussian(30, 1, rng).col(0)), ValidationError);
}

TEST_CASE("top connections") {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(4);
  beta[2] = -1.5;
  const std::vector<std::string> labels{"a", "b", "c", "d"};
  const auto one = top_connections(beta, labels, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].label == "c");
  Eigen::VectorXd tie(3);
  tie << 1.0, -1.0, 0.5;
  const auto all = top_connections(tie, {"z", "y", "x"}, 3);
  CHECK(all[0].label == "y");
  CHECK(all[1].label == "z");
  CHECK(all[2].label == "x");
}
