#include "support.hpp"

#include "ctree/connectome.hpp"
#include "ctree/errors.hpp"
#include "ctree/tree.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace ctree;

TEST_CASE("adjacency parsing") {
  const auto a = load_adjacency("x,y\n0,5\n5,0\n");
  CHECK(a.p == 2);
  CHECK(a.at(0, 1) == 5);
  CHECK_THROWS_AS(load_adjacency("a,b,c\n0,1,2\n2,0,1\n2,1,0\n"), ValidationError);
  CHECK_THROWS_AS(load_adjacency("a,b\n0,-1\n-1,0\n"), ValidationError);
  CHECK_THROWS_AS(load_adjacency("a,b\n0,1\n"), ValidationError);
}

TEST_CASE("vectorize upper triangle") {
  AdjacencyMatrix a = zero_adjacency(3, "s");
  a.at(0, 1) = a.at(1, 0) = 1;
  a.at(0, 2) = a.at(2, 0) = 2;
  a.at(1, 2) = a.at(2, 1) = 3;
  std::vector<AdjacencyMatrix> c{a};
  const auto x = vectorize_upper(c);
  REQUIRE(x.d() == 3);
  CHECK(x.values(0, 0) == 1);
  CHECK(x.values(0, 1) == 2);
  CHECK(x.values(0, 2) == 3);
  CHECK(x.column_labels[0] == "ROI_0-ROI_1");
  std::vector<AdjacencyMatrix> big{zero_adjacency(68)};
  CHECK(vectorize_upper(big).d() == 2278);
}

TEST_CASE("feature transforms") {
  Eigen::MatrixXd v(3, 2);
  v << 1, 4, 2, 4, 3, 4;
  const auto x = make_feature_matrix(v, {"a", "b", "c"}, {"f", "g"});
  const auto f = filter_zero_variance(x);
  CHECK(f.d() == 1);
  CHECK(f.column_labels[0] == "f");
  CHECK(f.column_mask == std::vector<bool>{true, false});
  const auto z = standardize(f);
  CHECK(z.values(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(z.values(1, 0) == doctest::Approx(0.0));
  CHECK(z.values(2, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(standardize(x), ValidationError);
  Eigen::MatrixXd w(3, 2);
  w << 1, 5, 2, 6, 3, 7;
  const auto varying = make_feature_matrix(w, {"a", "b", "c"}, {"f", "g"});
  CHECK(filter_zero_variance(varying).values == w);
}

TEST_CASE("imputation and sparse traits") {
  const double nan = std::nan("");
  Eigen::MatrixXd v(3, 1);
  v << 1, nan, 3;
  const auto y = make_feature_matrix(v, {"a", "b", "c"}, {"t"});
  CHECK(impute_mean(y).values(1, 0) == 2.0);
  Eigen::MatrixXd full(2, 1);
  full << 1, 2;
  CHECK(impute_mean(make_feature_matrix(full, {"a", "b"}, {"t"})).values == full);
  Eigen::MatrixXd all_missing(2, 1);
  all_missing << nan, nan;
  CHECK_THROWS_AS(impute_mean(make_feature_matrix(all_missing, {"a", "b"}, {"t"})), ValidationError);

  Eigen::MatrixXd m(5, 2);
  m << 1, 1, nan, 2, nan, 3, 4, 4, 5, 5;  // first column 40% missing
  const auto t = make_feature_matrix(m, {"a", "b", "c", "d", "e"}, {"s", "t"});
  CHECK(drop_sparse_traits(t, 0.5).d() == 2);
  CHECK(drop_sparse_traits(t, 0.10).d() == 1);
  CHECK(drop_sparse_traits(t, 0.10).column_labels[0] == "t");
}

TEST_CASE("table round trip") {
  const auto x = parse_table("subject_id,a,b\ns1,1.5,NA\ns2,,2\n");
  CHECK(x.n() == 2);
  CHECK(std::isnan(x.values(0, 1)));
  CHECK(std::isnan(x.values(1, 0)));
  const auto y = parse_table(format_table(x));
  CHECK(y.row_ids == x.row_ids);
  CHECK(y.values(0, 0) == 1.5);
  CHECK(std::isnan(y.values(0, 1)));
}

TEST_CASE("four leaf example") {
  const auto h = Hierarchy::parse(testing::kFourLeafHierarchy);
  const auto a = testing::four_leaf_example();
  const auto t = build_tree(h, a);
  CHECK(t.weight_of(1) == 2);
  CHECK(t.weight_of(2) == 5);
  CHECK(t.weight_of(0) == 5);
  const auto c = conservation_check(h, a, t);
  CHECK(c.internal_sum == 12);
  CHECK(c.upper_triangle_sum == 12);
  CHECK(c.holds());
}

TEST_CASE("all-zero matrix") {
  const auto& h = Hierarchy::desikan_killiany();
  const auto t = build_tree(h, zero_adjacency(68));
  for (auto w : t.weights) CHECK(w == 0);
  CHECK(conservation_check(h, zero_adjacency(68), t).holds());
}

TEST_CASE("tree weights match exhaustive LCA summation") {
  std::mt19937_64 gen(3);
  const auto& dk = Hierarchy::desikan_killiany();
  for (int rep = 0; rep < 20; ++rep) {
    const auto a = testing::random_matrix(68, gen, 20, 0.3);
    CHECK(build_tree(dk, a).weights == testing::oracle_weights(dk, a));
  }
  for (int rep = 0; rep < 20; ++rep) {
    const auto h = Hierarchy::parse(testing::random_hierarchy_text(gen));
    const auto a = testing::random_matrix(h.leaf_count(), gen);
    const auto t = build_tree(h, a);
    CHECK(t.weights == testing::oracle_weights(h, a));
    CHECK(conservation_check(h, a, t).holds());
  }
}

TEST_CASE("tree features exclude leaves") {
  const auto h = Hierarchy::parse("node_id,name,parent_id,level,roi_index\n0,r,,1,\n1,x,0,2,0\n2,y,0,2,1\n");
  AdjacencyMatrix a = zero_adjacency(2, "s");
  a.at(0, 1) = a.at(1, 0) = 4;
  std::vector<ConnectomeTree> trees{build_tree(h, a)};
  const auto f = tree_features(trees, false);
  CHECK(f.d() == 1);
  CHECK(f.values(0, 0) == 4);
  CHECK(tree_features(trees, true).d() == 3);
  std::vector<ConnectomeTree> dk{build_tree(Hierarchy::desikan_killiany(), zero_adjacency(68))};
  CHECK(tree_features(dk, false).d() == 23);
  CHECK(tree_features(dk, true).d() == 91);
}

TEST_CASE("tree csv round trip and mean") {
  const auto h = Hierarchy::parse(testing::kFourLeafHierarchy);
  auto a = testing::four_leaf_example();
  auto b = a;
  b.subject_id = "two";
  for (auto& v : b.counts) v *= 3;
  std::vector<ConnectomeTree> trees{build_tree(h, a), build_tree(h, b)};
  const auto parsed = parse_tree_csv(h, format_tree_csv(trees));
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].subject_id == "two");
  CHECK(parsed[1].weight_of(0) == 15.0);
  const auto m = mean_tree(parsed);
  CHECK(m.weight_of(0) == 10.0);
  CHECK(m.weight_of(1) == 4.0);
}
