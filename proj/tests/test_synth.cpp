#include "ctree/csv.hpp"
#include "ctree/errors.hpp"
#include "ctree/linalg_stats.hpp"
#include "ctree/synth.hpp"
#include "ctree/tree.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace ctree;
using namespace ctree::synth;

TEST_CASE("config parsing") {
  const auto cfg = parse_config(
      "key,value\nn,50\ntraits,3\nsignal,lh.frontal-lobe:2:0.7\nsignal,0:1:-1\nmissing,3:0.2\n"
      "desirability,1:undesirable\nseed,9\n");
  CHECK(cfg.n == 50);
  REQUIRE(cfg.signals.size() == 2);
  CHECK(cfg.signals[0].node_id == Hierarchy::desikan_killiany().node(*Hierarchy::desikan_killiany().find("lh.frontal-lobe")).node_id);
  CHECK(cfg.signals[0].trait == 1);
  CHECK(cfg.signals[1].effect == -1.0);
  CHECK(cfg.missing[0].first == 2);
  CHECK(cfg.seed == 9);
  const auto again = parse_config(format_config(cfg));
  CHECK(format_config(again) == format_config(cfg));
  CHECK_THROWS_AS(parse_config("colour,blue\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("traits,2\nsignal,brain:3:1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("signal,nowhere:1:1\n"), ValidationError);
}

TEST_CASE("cohort shape and determinism") {
  SynthConfig cfg;
  cfg.n = 30;
  cfg.traits = 3;
  cfg.zero_variance_pairs = 5;
  cfg.missing = {{1, 0.1}};
  const auto a = generate_cohort(cfg, 1);
  const auto b = generate_cohort(cfg, 3);
  REQUIRE(a.adjacency.size() == 30);
  for (std::size_t s = 0; s < 30; ++s) {
    CHECK(a.adjacency[s].counts == b.adjacency[s].counts);
    CHECK(a.adjacency[s].p == 68);
    for (std::size_t i = 0; i < 68; ++i) {
      CHECK(a.adjacency[s].at(i, i) == 0);
      for (std::size_t j = 0; j < 68; ++j) REQUIRE(a.adjacency[s].at(i, j) == a.adjacency[s].at(j, i));
    }
    for (auto [i, j] : a.constant_pairs) CHECK(a.adjacency[s].at(i, j) == 0);
  }
  CHECK(a.constant_pairs.size() == 5);
  int missing = 0;
  for (Eigen::Index i = 0; i < 30; ++i) missing += std::isnan(a.traits.values(i, 1));
  CHECK(missing == 3);
  CHECK(a.traits.column_labels[0] == trait_name(0));
  CHECK(trait_name(0) == "trait_01");
  CHECK(subject_name(0) == "sub0001");
}

TEST_CASE("zero effects leave traits unrelated to the latent") {
  SynthConfig cfg;
  cfg.n = 400;
  cfg.traits = 2;
  const auto c = generate_cohort(cfg);
  for (Eigen::Index k = 0; k < c.latent.cols(); ++k) {
    CHECK(std::abs(stats::pearson(c.latent.col(k), c.traits.values.col(0))) < 0.2);
  }
}

TEST_CASE("strong root effect shows up in CCA") {
  SynthConfig cfg;
  cfg.n = 1000;
  cfg.traits = 2;
  cfg.signals = {{0, 0, 2.0}};
  const auto c = generate_cohort(cfg);
  std::vector<ConnectomeTree> trees;
  for (const auto& a : c.adjacency) trees.push_back(build_tree(*c.hierarchy, a));
  const auto x = standardize(filter_zero_variance(tree_features(trees, false)));
  const auto m = stats::cca_fit(x.values, standardize(c.traits).values);
  CHECK(m.rho[0] > 0.5);
}

TEST_CASE("written cohort can be read back") {
  SynthConfig cfg;
  cfg.n = 6;
  cfg.traits = 2;
  cfg.signals = {{2, 1, 0.5}};
  const auto c = generate_cohort(cfg);
  const auto dir = (std::filesystem::temp_directory_path() / "ctree_synth_test").string();
  std::filesystem::remove_all(dir);
  write_cohort(c, cfg, dir);
  const auto manifest = read_manifest(dir + "/manifest.csv");
  REQUIRE(manifest.size() == 6);
  const auto loaded = load_cohort(manifest);
  CHECK(loaded[3].counts == c.adjacency[3].counts);
  const auto traits = read_table(dir + "/traits.csv");
  CHECK(traits.row_ids == c.traits.row_ids);
  const auto truth = csv::read_file(dir + "/ground_truth.csv");
  CHECK(truth.find("signal") != std::string::npos);
  CHECK(Hierarchy::load(dir + "/hierarchy.csv").same_topology(*c.hierarchy));
  std::filesystem::remove_all(dir);
}
