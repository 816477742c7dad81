#pragma once

// Shared fixtures and independent reference implementations for the tests.

#include "ctree/atlas.hpp"
#include "ctree/connectome.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace ctree::testing {

// Root with children u={0,1} and v={2,3}.
inline const char* kFourLeafHierarchy =
    "node_id,name,parent_id,level,roi_index\n"
    "0,root,,1,\n"
    "1,u,0,2,\n"
    "2,v,0,2,\n"
    "3,a,1,3,0\n"
    "4,b,1,3,1\n"
    "5,c,2,3,2\n"
    "6,d,2,3,3\n";

inline AdjacencyMatrix four_leaf_example() {
  AdjacencyMatrix a = zero_adjacency(4, "ex");
  auto set = [&](int i, int j, std::int64_t v) {
    a.at(i, j) = v;
    a.at(j, i) = v;
  };
  set(0, 1, 2);
  set(2, 3, 5);
  set(0, 2, 1);
  set(1, 3, 4);
  return a;
}

inline AdjacencyMatrix random_matrix(std::size_t p, std::mt19937_64& gen, int max_entry = 20, double density = 1.0,
                                     bool diagonal = true) {
  std::uniform_int_distribution<int> value(0, max_entry);
  std::bernoulli_distribution keep(density);
  AdjacencyMatrix a = zero_adjacency(p, "rand");
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      if (i == j && !diagonal) continue;
      const std::int64_t v = keep(gen) ? value(gen) : 0;
      a.at(i, j) = v;
      a.at(j, i) = v;
    }
  }
  return a;
}

// Random hierarchy CSV: every internal node has 2..6 children, depth at most
// max_depth levels, leaf roi indices shuffled. Growth stops at max_leaves.
inline std::string random_hierarchy_text(std::mt19937_64& gen, int max_depth = 5, std::size_t max_leaves = 40) {
  struct N {
    int parent;
    int level;
    bool leaf;
  };
  std::vector<N> nodes{{-1, 1, false}};
  std::vector<std::size_t> frontier{0};
  std::uniform_int_distribution<int> fan(2, 6);
  std::bernoulli_distribution expand(0.45);
  std::size_t leaves = 0;
  while (!frontier.empty()) {
    const std::size_t at = frontier.front();
    frontier.erase(frontier.begin());
    const int k = fan(gen);
    for (int c = 0; c < k; ++c) {
      const int level = nodes[at].level + 1;
      const bool can_grow = level < max_depth && leaves + frontier.size() + 2 < max_leaves;
      const bool internal = can_grow && expand(gen);
      nodes.push_back({static_cast<int>(at), level, !internal});
      if (internal) frontier.push_back(nodes.size() - 1);
      else ++leaves;
    }
  }
  std::vector<int> rois(leaves);
  for (std::size_t i = 0; i < leaves; ++i) rois[i] = static_cast<int>(i);
  std::shuffle(rois.begin(), rois.end(), gen);
  std::string text = "node_id,name,parent_id,level,roi_index\n";
  std::size_t next_roi = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    text += std::to_string(i) + ",n" + std::to_string(i) + ",";
    if (nodes[i].parent >= 0) text += std::to_string(nodes[i].parent);
    text += "," + std::to_string(nodes[i].level) + ",";
    if (nodes[i].leaf) text += std::to_string(rois[next_roi++]);
    text += "\n";
  }
  return text;
}

// Node indices from the leaf of `roi` up to the root.
inline std::vector<std::size_t> path_to_root(const Hierarchy& h, int roi) {
  std::vector<std::size_t> path;
  std::size_t at = h.leaf_of_roi(roi);
  path.push_back(at);
  while (auto p = h.parent(at)) {
    at = *p;
    path.push_back(at);
  }
  return path;
}

// Lowest common ancestor by intersecting the two root paths.
inline std::size_t oracle_lca(const Hierarchy& h, int a, int b) {
  const auto pa = path_to_root(h, a);
  const auto pb = path_to_root(h, b);
  const std::set<std::size_t> sb(pb.begin(), pb.end());
  for (std::size_t n : pa) {
    if (sb.count(n)) return n;
  }
  return h.root();
}

// Exhaustive pair summation.
inline std::vector<std::int64_t> oracle_weights(const Hierarchy& h, const AdjacencyMatrix& a) {
  std::vector<std::int64_t> w(h.size(), 0);
  const int p = static_cast<int>(a.p);
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j) w[oracle_lca(h, i, j)] += a.at(i, j);
  }
  return w;
}

}  // namespace ctree::testing
