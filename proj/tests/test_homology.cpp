#include "support.hpp"

#include "ctree/errors.hpp"
#include "ctree/homology.hpp"
#include "ctree/tree.hpp"

#include <doctest.h>

using namespace ctree;
using namespace ctree::homology;

namespace {

// Dense rank modulo a large prime; independent of the library's exact
// rational elimination.
constexpr std::int64_t kPrime = 1000000007;

std::int64_t mod_pow(std::int64_t b, std::int64_t e) {
  std::int64_t r = 1;
  b %= kPrime;
  while (e) {
    if (e & 1) r = r * b % kPrime;
    b = b * b % kPrime;
    e >>= 1;
  }
  return r;
}

std::size_t rank_mod_p(std::vector<std::vector<std::int64_t>> m) {
  if (m.empty()) return 0;
  const std::size_t rows = m.size(), cols = m[0].size();
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t piv = rank;
    while (piv < rows && m[piv][c] == 0) ++piv;
    if (piv == rows) continue;
    std::swap(m[piv], m[rank]);
    const std::int64_t inv = mod_pow(m[rank][c], kPrime - 2);
    for (std::size_t r = 0; r < rows; ++r) {
      if (r == rank || m[r][c] == 0) continue;
      const std::int64_t f = m[r][c] * inv % kPrime;
      for (std::size_t k = c; k < cols; ++k) m[r][k] = ((m[r][k] - f * m[rank][k]) % kPrime + kPrime) % kPrime;
    }
    ++rank;
  }
  return rank;
}

std::vector<std::vector<std::int64_t>> boundary_dense(const ChainComplex& c) {
  std::vector<std::vector<std::int64_t>> b(c.zero_cells.size(), std::vector<std::int64_t>(c.one_cells.size(), 0));
  for (std::size_t j = 0; j < c.one_cells.size(); ++j) {
    const auto& cell = c.one_cells[j];
    b[cell.end][j] = (b[cell.end][j] + 1) % kPrime;
    b[cell.start][j] = (b[cell.start][j] + kPrime - 1) % kPrime;
  }
  return b;
}

// corank = rank H1(P) - rank F_*(H1(C)); with F injective on kernels this is
// rank[dC; F] - rank dC for the image.
std::size_t oracle_corank(const ChainComplex& children, const ChainComplex& parent, const ChainMap& f) {
  const std::size_t h1_parent = parent.one_cells.size() - rank_mod_p(boundary_dense(parent));
  auto stacked = boundary_dense(children);
  const std::size_t rank_d = rank_mod_p(stacked);
  for (std::size_t r = 0; r < parent.one_cells.size(); ++r) {
    std::vector<std::int64_t> row(children.one_cells.size(), 0);
    for (std::size_t j = 0; j < children.one_cells.size(); ++j) row[j] = f.map_1[j] == r ? 1 : 0;
    stacked.push_back(std::move(row));
  }
  if (children.one_cells.empty()) return h1_parent;
  const std::size_t image = rank_mod_p(stacked) - rank_d;
  return h1_parent - image;
}

}  // namespace

TEST_CASE("children complex of single-leaf children") {
  const auto h = Hierarchy::parse(testing::kFourLeafHierarchy);
  const auto a = testing::four_leaf_example();
  const auto u = *h.find("u");
  const auto c = build_children_complex(h, a, u);
  CHECK(c.zero_cells.size() == 2);
  CHECK(c.one_cells.empty());
}

TEST_CASE("loops inside a child") {
  const auto h = Hierarchy::parse(testing::kFourLeafHierarchy);
  const auto a = testing::four_leaf_example();
  const auto c = build_children_complex(h, a, h.root());
  CHECK(c.zero_cells.size() == 2);
  CHECK(c.one_cells.size() == 7);  // 2 inside u, 5 inside v
  for (const auto& cell : c.one_cells) CHECK(cell.is_loop());
}

TEST_CASE("parent complex") {
  const auto h = Hierarchy::parse(testing::kFourLeafHierarchy);
  const auto a = testing::four_leaf_example();
  const auto root = build_parent_complex(h, a, h.root());
  CHECK(root.zero_cells.size() == 1);
  CHECK(root.one_cells.size() == 12);
  CHECK(homology_rank(root, 1) == 12);
  CHECK(build_parent_complex(h, a, *h.find("u")).one_cells.size() == 2);
  const auto zero = build_parent_complex(h, zero_adjacency(4), h.root());
  CHECK(zero.zero_cells.size() == 1);
  CHECK(zero.one_cells.empty());
}

TEST_CASE("empty induced map") {
  ChainComplex a, b;
  const auto f = induced_map(a, b);
  CHECK(f.map_0.empty());
  CHECK(f.map_1.empty());
}

TEST_CASE("homology of two points") {
  ChainComplex c;
  c.zero_cells = {"x", "y"};
  CHECK(homology_rank(c, 0) == 2);
  CHECK(homology_rank(c, 1) == 0);
}

TEST_CASE("homology of a path and a cycle") {
  ChainComplex c;
  c.zero_cells = {"x", "y", "z"};
  c.one_cells = {{{0, 1, 0}, 0, 1}, {{1, 2, 0}, 1, 2}};
  CHECK(homology_rank(c, 0) == 1);
  CHECK(homology_rank(c, 1) == 0);
  c.one_cells.push_back({{0, 2, 0}, 2, 0});
  CHECK(homology_rank(c, 1) == 1);
  CHECK(cycle_basis(c).size() == 1);
}

TEST_CASE("corank of the four leaf example") {
  const auto h = Hierarchy::parse(testing::kFourLeafHierarchy);
  const auto a = testing::four_leaf_example();
  const auto r = corank(h, a, h.root());
  CHECK(r.parent_rank == 12);
  CHECK(r.image_rank == 7);
  CHECK(r.corank == 5);
  CHECK(corank(h, a, *h.find("u")).corank == 2);
}

TEST_CASE("single cross-hemisphere bundle") {
  const auto& h = Hierarchy::desikan_killiany();
  auto a = zero_adjacency(68);
  a.at(5, 40) = a.at(40, 5) = 7;
  const auto report = verify_theorem(h, a);
  CHECK(report.all_pass());
  for (const auto& n : report.nodes) {
    CHECK(n.corank == (n.node_id == h.node(h.root()).node_id ? 7 : 0));
  }
}

TEST_CASE("zero matrix gives zero coranks") {
  const auto report = verify_theorem(Hierarchy::desikan_killiany(), zero_adjacency(68));
  CHECK(report.all_pass());
  for (const auto& n : report.nodes) CHECK(n.corank == 0);
}

TEST_CASE("corank matches the modular-rank oracle and the tree weight") {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 25; ++rep) {
    const auto h = Hierarchy::parse(testing::random_hierarchy_text(gen, 4, 12));
    const auto a = testing::random_matrix(h.leaf_count(), gen, 3);
    const auto t = build_tree(h, a);
    for (std::size_t node : h.internal_indices()) {
      const auto c = build_children_complex(h, a, node);
      const auto p = build_parent_complex(h, a, node);
      const auto f = induced_map(c, p);
      CHECK_FALSE(find_commutation_failure(f).has_value());
      const auto lib = corank(h, a, node);
      CHECK(lib.corank == oracle_corank(c, p, f));
      CHECK(static_cast<std::int64_t>(lib.corank) == t.weights[node]);
    }
  }
}

TEST_CASE("broken chain map is detected") {
  ChainComplex dom, cod;
  dom.zero_cells = {"x", "y"};
  dom.one_cells = {{{0, 1, 0}, 0, 1}};
  cod.zero_cells = {"p", "q"};
  cod.one_cells = {{{0, 1, 0}, 0, 0}};
  ChainMap f{&dom, &cod, {0, 1}, {0}};
  // boundary(F(e)) = 0 but F(boundary(e)) = q - p
  CHECK(find_commutation_failure(f).has_value());
}

TEST_CASE("cell budget") {
  const auto h = Hierarchy::parse(testing::kFourLeafHierarchy);
  CHECK_THROWS_AS(build_parent_complex(h, testing::four_leaf_example(), h.root(), 5), ValidationError);
}

TEST_CASE("report format") {
  const auto h = Hierarchy::parse(testing::kFourLeafHierarchy);
  const auto text = format_report(verify_theorem(h, testing::four_leaf_example()));
  CHECK(text.rfind("node_name,weight,corank,match\n", 0) == 0);
  CHECK(text.find("root,5,5,true") != std::string::npos);
}
