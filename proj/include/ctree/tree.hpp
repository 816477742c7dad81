#pragma once

#include "ctree/atlas.hpp"
#include "ctree/connectome.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctree {

// Node weights over a hierarchy, indexed by node position in file order.
// The hierarchy is not owned and must outlive the tree.
template <typename W>
struct BasicTree {
  const Hierarchy* hierarchy = nullptr;
  std::vector<W> weights;
  std::string subject_id;

  W weight_of(int node_id) const { return weights[hierarchy->index_of(node_id)]; }
};

using ConnectomeTree = BasicTree<std::int64_t>;
using WeightedTree = BasicTree<double>;

// Internal node weight = fibers between leaf pairs whose lowest common
// ancestor is that node; leaf weight = diagonal entry.
ConnectomeTree build_tree(const Hierarchy& h, const AdjacencyMatrix& a);
WeightedTree build_weighted_tree(const Hierarchy& h, const WeightedAdjacency& a);

WeightedTree to_weighted(const ConnectomeTree& t);
WeightedTree mean_tree(std::span<const WeightedTree> trees);

struct TreeVector {
  std::vector<double> values;
  std::vector<std::string> labels;
};

// Internal nodes in internal_nodes() order, then leaves in file order if requested.
TreeVector vectorize_tree(const WeightedTree& t, bool include_leaves);
TreeVector vectorize_tree(const ConnectomeTree& t, bool include_leaves);
FeatureMatrix tree_features(std::span<const ConnectomeTree> trees, bool include_leaves);

struct ConservationReport {
  std::int64_t internal_sum = 0;
  std::int64_t upper_triangle_sum = 0;
  std::int64_t leaf_sum = 0;
  std::int64_t trace = 0;
  bool holds() const { return internal_sum == upper_triangle_sum && leaf_sum == trace; }
};

ConservationReport conservation_check(const Hierarchy& h, const AdjacencyMatrix& a, const ConnectomeTree& t);

// `subject_id,node_name,level,weight`, subjects in input order, nodes in file order.
std::string format_tree_csv(std::span<const ConnectomeTree> trees);
std::string format_tree_csv(std::span<const WeightedTree> trees);
std::vector<WeightedTree> parse_tree_csv(const Hierarchy& h, std::string_view text);

}  // namespace ctree
