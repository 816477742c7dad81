#include "support.hpp"

#include "ctree/atlas.hpp"
#include "ctree/errors.hpp"

#include <doctest.h>

using namespace ctree;

TEST_CASE("smallest legal hierarchy") {
  const auto h = Hierarchy::parse("node_id,name,parent_id,level,roi_index\n0,r,,1,\n1,x,0,2,0\n2,y,0,2,1\n");
  CHECK(h.leaf_count() == 2);
  CHECK(h.max_level() == 2);
  CHECK(h.level_counts() == std::vector<std::size_t>{1, 2});
  CHECK(h.internal_nodes() == std::vector<int>{0});
}

TEST_CASE("chain hierarchy internal nodes") {
  const auto h = Hierarchy::parse("node_id,name,parent_id,level,roi_index\n0,root,,1,\n1,a,0,2,\n2,leaf,1,3,0\n");
  CHECK(h.internal_nodes() == std::vector<int>{0, 1});
}

TEST_CASE("bundled DK structure") {
  const auto& h = Hierarchy::desikan_killiany();
  CHECK(h.leaf_count() == 68);
  CHECK(h.size() == 91);
  CHECK(h.internal_count() == 23);
  CHECK(h.internal_nodes().size() == 23);
  const auto root_children = h.children(h.root());
  REQUIRE(root_children.size() == 2);
  CHECK(h.node(root_children[0]).name == "left-hemisphere");
  CHECK(h.node(root_children[1]).name == "right-hemisphere");
  for (std::size_t hemi : root_children) CHECK(h.children(hemi).size() == 6);
}

TEST_CASE("DK lca against path intersection") {
  const auto& h = Hierarchy::desikan_killiany();
  const int superior = h.node(*h.find("lh.superiortemporal")).roi_index.value();
  const int middle = h.node(*h.find("lh.middletemporal")).roi_index.value();
  const int entorhinal = h.node(*h.find("lh.entorhinal")).roi_index.value();
  CHECK(h.lca_index(superior, entorhinal) == testing::oracle_lca(h, superior, entorhinal));
  CHECK(h.node(h.lca_index(superior, entorhinal)).name == "lh.temporal-lobe");
  CHECK(h.node(h.lca_index(superior, middle)).name == "lh.temporal-lateral");
  // one left, one right
  CHECK(h.lca_index(0, 40) == h.root());
  for (int a = 0; a < 68; ++a) {
    CHECK(h.lca_index(a, a) == h.leaf_of_roi(a));
    for (int b = 0; b < 68; ++b) {
      const auto l = h.lca_index(a, b);
      REQUIRE(l == testing::oracle_lca(h, a, b));
      CHECK(h.node(l).level <= std::min(h.node(h.leaf_of_roi(a)).level, h.node(h.leaf_of_roi(b)).level));
    }
  }
}

TEST_CASE("random hierarchies: lca, round trip, counts") {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 50; ++rep) {
    const auto text = testing::random_hierarchy_text(gen);
    const auto h = Hierarchy::parse(text);
    CHECK(h.internal_nodes().size() + h.leaf_count() == h.size());
    const auto again = Hierarchy::parse(h.serialize());
    CHECK(again.serialize() == h.serialize());
    CHECK(again.same_topology(h));
    const int p = static_cast<int>(h.leaf_count());
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) REQUIRE(h.lca_index(a, b) == testing::oracle_lca(h, a, b));
  }
}

TEST_CASE("internal nodes ordered by level then file order") {
  const auto& h = Hierarchy::desikan_killiany();
  const auto ids = h.internal_nodes();
  for (std::size_t i = 1; i < ids.size(); ++i) {
    const auto& prev = h.node(h.index_of(ids[i - 1]));
    const auto& cur = h.node(h.index_of(ids[i]));
    CHECK((prev.level < cur.level || (prev.level == cur.level && h.index_of(ids[i - 1]) < h.index_of(ids[i]))));
  }
}

TEST_CASE("parse errors") {
  const std::string head = "node_id,name,parent_id,level,roi_index\n";
  CHECK_THROWS_AS(Hierarchy::parse(head + "0,r,,1,\n1,x,0,2,0\n2,x,0,2,1\n"), ValidationError);        // duplicate name
  CHECK_THROWS_AS(Hierarchy::parse(head + "0,r,,1,\n1,x,0,2,0\n2,y,0,2,0\n"), ValidationError);        // duplicate roi
  CHECK_THROWS_AS(Hierarchy::parse(head + "0,r,,1,\n1,x,0,2,0\n2,y,0,2,2\n"), ValidationError);        // gap in roi
  CHECK_THROWS_AS(Hierarchy::parse(head + "0,r,,1,\n1,x,0,2,0\n2,y,7,2,1\n"), ValidationError);        // orphan
  CHECK_THROWS_AS(Hierarchy::parse(head + "0,r,,1,3\n1,x,0,2,0\n2,y,0,2,1\n"), ValidationError);       // roi on internal
  CHECK_THROWS_AS(Hierarchy::parse(head + "0,r,,1,\n1,x,2,2,\n2,y,1,3,\n3,z,0,2,0\n"), ValidationError);  // cycle
}

TEST_CASE("lca index out of range") {
  const auto& h = Hierarchy::desikan_killiany();
  CHECK_THROWS(h.lca_index(0, 68));
  CHECK_THROWS(h.lca_index(-1, 3));
}
