#pragma once

#include "ctree/atlas.hpp"
#include "ctree/connectome.hpp"
#include "ctree/rational.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ctree::homology {

// Sparse vector over Q, sorted by index, no explicit zeros.
using SparseVector = std::vector<std::pair<std::size_t, Rational>>;

// One fiber between ROIs roi_a <= roi_b; `copy` distinguishes the
// individual fibers of a multi-fiber entry.
struct FiberLabel {
  int roi_a = 0;
  int roi_b = 0;
  std::int64_t copy = 0;

  friend auto operator<=>(const FiberLabel&, const FiberLabel&) = default;
  std::string str() const;
};

struct OneCell {
  FiberLabel label;
  std::size_t start = 0;  // zero-cell index
  std::size_t end = 0;
  bool is_loop() const { return start == end; }
};

// Cell complex with 0-cells (region base points) and 1-cells (fibers).
// With no 2-cells, H_1 = ker(boundary).
struct ChainComplex {
  std::vector<std::string> zero_cells;
  std::vector<OneCell> one_cells;

  // Column of the boundary map for a 1-cell: end - start (zero for loops).
  SparseVector boundary_column(std::size_t cell) const;
};

// Cellular chain map. Each 1-cell maps to a single codomain 1-cell with
// coefficient +1. Holds non-owning pointers to its complexes.
struct ChainMap {
  const ChainComplex* domain = nullptr;
  const ChainComplex* codomain = nullptr;
  std::vector<std::size_t> map_0;
  std::vector<std::size_t> map_1;
};

inline constexpr std::size_t kDefaultCellBudget = 100000;

// One base point per child of `parent`; one loop per fiber inside a child's
// leaf set (self-edges included). Fibers between distinct children are left
// out. `parent` is a node index.
ChainComplex build_children_complex(const Hierarchy& h, const AdjacencyMatrix& a, std::size_t parent,
                                    std::size_t cell_budget = kDefaultCellBudget);
// Single base point; one loop per fiber inside the parent's leaf set.
ChainComplex build_parent_complex(const Hierarchy& h, const AdjacencyMatrix& a, std::size_t parent,
                                  std::size_t cell_budget = kDefaultCellBudget);

// Collapses every domain 0-cell to the (single) codomain point and sends each
// 1-cell to the codomain cell with the same fiber label. Throws
// ComputationError when the result fails to commute with the boundary.
ChainMap induced_map(const ChainComplex& children, const ChainComplex& parent);

// Cell-by-cell check of boundary(F(c)) == F(boundary(c)). Returns the first
// offending 1-cell, if any.
std::optional<std::size_t> find_commutation_failure(const ChainMap& f);

// Rank of the boundary matrix by exact elimination over Q.
std::size_t boundary_rank(const ChainComplex& c);
std::size_t homology_rank(const ChainComplex& c, int dimension);

// Basis of H_1 = ker(boundary) as sparse chains over the 1-cells.
std::vector<SparseVector> cycle_basis(const ChainComplex& c);
// Rank over Q of a set of sparse vectors.
std::size_t rank_of(std::vector<SparseVector> vectors);

struct CorankResult {
  std::size_t parent_rank = 0;    // rank H_1(parent)
  std::size_t children_rank = 0;  // rank H_1(children union)
  std::size_t image_rank = 0;     // rank of F_*(H_1(children))
  std::size_t corank = 0;         // parent_rank - image_rank
};

CorankResult corank(const Hierarchy& h, const AdjacencyMatrix& a, std::size_t parent,
                    std::size_t cell_budget = kDefaultCellBudget);

struct NodeCheck {
  int node_id = 0;
  std::string node_name;
  std::int64_t weight = 0;
  std::int64_t corank = 0;
  bool chain_map_ok = false;
  bool match = false;
};

struct TheoremReport {
  std::vector<NodeCheck> nodes;  // internal_nodes() order
  bool all_pass() const;
};

// For every internal node, compares the tree weight with the corank of the
// homology map induced by the inclusion of its children.
TheoremReport verify_theorem(const Hierarchy& h, const AdjacencyMatrix& a,
                             std::size_t cell_budget = kDefaultCellBudget, int threads = 1);

// `node_name,weight,corank,match`
std::string format_report(const TheoremReport& report);

}  // namespace ctree::homology
