#include "ctree/atlas.hpp"

#include "ctree/csv.hpp"
#include "ctree/errors.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>
#include <unordered_map>

namespace ctree {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ValidationError("hierarchy line " + std::to_string(line) + ": " + what);
}

}  // namespace

Hierarchy Hierarchy::parse(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw ValidationError("hierarchy: empty file");

  const std::vector<std::string> expected = {"node_id", "name", "parent_id", "level", "roi_index"};
  if (rows.front().fields != expected) {
    fail(rows.front().line, "expected header 'node_id,name,parent_id,level,roi_index'");
  }

  Hierarchy h;
  std::vector<std::size_t> lines;
  std::unordered_map<std::string, std::size_t> name_index;
  std::unordered_map<int, std::size_t> id_index;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != 5) fail(row.line, "expected 5 fields, got " + std::to_string(row.fields.size()));
    HierarchyNode node;
    const auto id = csv::parse_int(row.fields[0], row.line);
    if (id < 0) fail(row.line, "node_id must be >= 0");
    node.node_id = static_cast<int>(id);
    node.name = row.fields[1];
    if (node.name.empty()) fail(row.line, "empty name");
    if (!row.fields[2].empty()) node.parent_id = static_cast<int>(csv::parse_int(row.fields[2], row.line));
    node.level = static_cast<int>(csv::parse_int(row.fields[3], row.line));
    if (node.level < 1) fail(row.line, "level must be >= 1");
    if (!row.fields[4].empty()) {
      const auto roi = csv::parse_int(row.fields[4], row.line);
      if (roi < 0) fail(row.line, "roi_index must be >= 0");
      node.roi_index = static_cast<int>(roi);
    }
    if (!name_index.emplace(node.name, h.nodes_.size()).second) {
      fail(row.line, "duplicate name '" + node.name + "'");
    }
    if (!id_index.emplace(node.node_id, h.nodes_.size()).second) {
      fail(row.line, "duplicate node_id " + std::to_string(node.node_id));
    }
    h.nodes_.push_back(std::move(node));
    lines.push_back(row.line);
  }
  const std::size_t n = h.nodes_.size();
  if (n == 0) throw ValidationError("hierarchy: no nodes");

  h.parent_.assign(n, 0);
  h.children_.assign(n, {});
  std::optional<std::size_t> root;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = h.nodes_[i];
    if (!node.parent_id) {
      if (root) fail(lines[i], "second root '" + node.name + "' (first is '" + h.nodes_[*root].name + "')");
      root = i;
      h.parent_[i] = i;
      continue;
    }
    auto it = id_index.find(*node.parent_id);
    if (it == id_index.end()) fail(lines[i], "parent_id " + std::to_string(*node.parent_id) + " does not exist");
    if (it->second == i) fail(lines[i], "node is its own parent (cycle)");
    h.parent_[i] = it->second;
    h.children_[it->second].push_back(i);
  }
  if (!root) throw ValidationError("hierarchy: no root (every node has a parent, so the parent links form a cycle)");
  h.root_ = *root;

  // Reachability from the root; anything unreachable sits on a cycle.
  std::vector<bool> seen(n, false);
  std::deque<std::size_t> queue{h.root_};
  seen[h.root_] = true;
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    for (auto c : h.children_[v]) {
      if (!seen[c]) {
        seen[c] = true;
        queue.push_back(c);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) fail(lines[i], "node '" + h.nodes_[i].name + "' is on a parent cycle");
  }

  if (h.nodes_[h.root_].level != 1) fail(lines[h.root_], "root must have level 1");
  for (std::size_t i = 0; i < n; ++i) {
    if (i == h.root_) continue;
    if (h.nodes_[i].level != h.nodes_[h.parent_[i]].level + 1) {
      fail(lines[i], "level " + std::to_string(h.nodes_[i].level) + " is not parent level + 1");
    }
  }

  std::map<int, std::size_t> roi_nodes;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = h.nodes_[i];
    const bool leaf = h.children_[i].empty();
    if (!leaf && node.roi_index) fail(lines[i], "roi_index on internal node '" + node.name + "'");
    if (leaf && !node.roi_index) fail(lines[i], "leaf '" + node.name + "' has no roi_index");
    if (leaf) {
      auto [it, inserted] = roi_nodes.emplace(*node.roi_index, i);
      if (!inserted) fail(lines[i], "duplicate roi_index " + std::to_string(*node.roi_index));
    }
  }
  const std::size_t p = roi_nodes.size();
  h.leaf_of_roi_.assign(p, 0);
  for (auto [roi, idx] : roi_nodes) {
    if (static_cast<std::size_t>(roi) >= p) {
      fail(lines[idx], "roi_index " + std::to_string(roi) + " is not contiguous (expected 0.." + std::to_string(p - 1) + ")");
    }
    h.leaf_of_roi_[roi] = idx;
  }

  for (const auto& node : h.nodes_) h.max_level_ = std::max(h.max_level_, node.level);
  h.level_counts_.assign(h.max_level_, 0);
  for (const auto& node : h.nodes_) ++h.level_counts_[node.level - 1];

  h.id_index_.assign(id_index.begin(), id_index.end());
  std::sort(h.id_index_.begin(), h.id_index_.end());
  return h;
}

Hierarchy Hierarchy::load(const std::string& path) { return parse(csv::read_file(path)); }

const Hierarchy& Hierarchy::desikan_killiany() {
  static const Hierarchy dk = parse(bundled_dk_hierarchy_text());
  return dk;
}

std::string Hierarchy::serialize() const {
  std::ostringstream out;
  out << "node_id,name,parent_id,level,roi_index\n";
  for (const auto& node : nodes_) {
    out << node.node_id << ',' << csv::escape(node.name) << ',';
    if (node.parent_id) out << *node.parent_id;
    out << ',' << node.level << ',';
    if (node.roi_index) out << *node.roi_index;
    out << '\n';
  }
  return out.str();
}

std::optional<std::size_t> Hierarchy::parent(std::size_t index) const {
  if (index == root_) return std::nullopt;
  return parent_[index];
}

std::size_t Hierarchy::index_of(int node_id) const {
  auto it = std::lower_bound(id_index_.begin(), id_index_.end(), std::make_pair(node_id, std::size_t{0}));
  if (it == id_index_.end() || it->first != node_id) {
    throw ValidationError("unknown node_id " + std::to_string(node_id));
  }
  return it->second;
}

std::optional<std::size_t> Hierarchy::find(std::string_view name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Hierarchy::leaf_of_roi(int roi) const {
  if (roi < 0 || static_cast<std::size_t>(roi) >= leaf_of_roi_.size()) {
    throw ValidationError("roi index " + std::to_string(roi) + " out of range [0, " +
                          std::to_string(leaf_of_roi_.size()) + ")");
  }
  return leaf_of_roi_[roi];
}

std::vector<int> Hierarchy::descendant_rois(std::size_t index) const {
  std::vector<int> out;
  std::vector<std::size_t> stack{index};
  std::vector<std::size_t> found;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (is_leaf(v)) {
      found.push_back(v);
    } else {
      for (auto c : children_[v]) stack.push_back(c);
    }
  }
  std::sort(found.begin(), found.end());
  out.reserve(found.size());
  for (auto v : found) out.push_back(*nodes_[v].roi_index);
  return out;
}

std::vector<int> Hierarchy::leaf_order() const { return descendant_rois(root_); }

std::size_t Hierarchy::lca_index(int roi_a, int roi_b) const {
  std::size_t a = leaf_of_roi(roi_a);
  std::size_t b = leaf_of_roi(roi_b);
  while (nodes_[a].level > nodes_[b].level) a = parent_[a];
  while (nodes_[b].level > nodes_[a].level) b = parent_[b];
  while (a != b) {
    a = parent_[a];
    b = parent_[b];
  }
  return a;
}

int Hierarchy::lowest_common_ancestor(int roi_a, int roi_b) const {
  return nodes_[lca_index(roi_a, roi_b)].node_id;
}

std::vector<std::size_t> Hierarchy::internal_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!is_leaf(i)) out.push_back(i);
  }
  std::stable_sort(out.begin(), out.end(),
                   [this](std::size_t a, std::size_t b) { return nodes_[a].level < nodes_[b].level; });
  return out;
}

std::vector<int> Hierarchy::internal_nodes() const {
  std::vector<int> out;
  for (auto i : internal_indices()) out.push_back(nodes_[i].node_id);
  return out;
}

bool Hierarchy::same_topology(const Hierarchy& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto& a = nodes_[i];
    const auto& b = other.nodes_[i];
    if (a.node_id != b.node_id || a.name != b.name || a.parent_id != b.parent_id || a.roi_index != b.roi_index) {
      return false;
    }
  }
  return true;
}

}  // namespace ctree
