#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctree {

struct HierarchyNode {
  int node_id = 0;
  std::string name;
  std::optional<int> parent_id;
  int level = 1;
  std::optional<int> roi_index;  // present iff leaf
};

// Rooted region hierarchy whose leaves are the ROIs of a parcellation.
// Immutable after construction. Nodes are addressed either by their file
// node_id or by their position in file order ("index"); most accessors take
// the index.
class Hierarchy {
 public:
  static Hierarchy parse(std::string_view text);
  static Hierarchy load(const std::string& path);
  // The bundled Desikan-Killiany hierarchy (68 leaves, 23 internal nodes).
  static const Hierarchy& desikan_killiany();

  std::string serialize() const;

  std::size_t size() const { return nodes_.size(); }
  std::size_t leaf_count() const { return leaf_of_roi_.size(); }
  std::size_t internal_count() const { return size() - leaf_count(); }
  int max_level() const { return max_level_; }
  // N_l for l = 1..max_level(), stored at position l-1.
  const std::vector<std::size_t>& level_counts() const { return level_counts_; }

  const std::vector<HierarchyNode>& nodes() const { return nodes_; }
  const HierarchyNode& node(std::size_t index) const { return nodes_[index]; }
  std::size_t root() const { return root_; }
  std::optional<std::size_t> parent(std::size_t index) const;
  std::span<const std::size_t> children(std::size_t index) const { return children_[index]; }
  bool is_leaf(std::size_t index) const { return children_[index].empty(); }

  std::size_t index_of(int node_id) const;
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t leaf_of_roi(int roi) const;

  // ROI indices of all leaves below (or equal to) the node, in file order.
  std::vector<int> descendant_rois(std::size_t index) const;
  // ROI indices of all leaves in file order (circle order for chord plots).
  std::vector<int> leaf_order() const;

  // Deepest node containing both leaves; lca(a, a) is the leaf itself.
  int lowest_common_ancestor(int roi_a, int roi_b) const;
  std::size_t lca_index(int roi_a, int roi_b) const;

  // Non-leaf node ids ordered by level, then file order.
  std::vector<int> internal_nodes() const;
  std::vector<std::size_t> internal_indices() const;

  bool same_topology(const Hierarchy& other) const;

 private:
  Hierarchy() = default;

  std::vector<HierarchyNode> nodes_;
  std::vector<std::size_t> parent_;  // parent index; root maps to itself
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> leaf_of_roi_;
  std::vector<std::size_t> level_counts_;
  std::vector<std::pair<int, std::size_t>> id_index_;  // sorted by node_id
  std::size_t root_ = 0;
  int max_level_ = 0;
};

std::string_view bundled_dk_hierarchy_text();

}  // namespace ctree
