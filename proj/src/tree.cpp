#include "ctree/tree.hpp"

#include "ctree/csv.hpp"
#include "ctree/errors.hpp"

#include <map>

namespace ctree {

namespace {

template <typename W, typename A>
BasicTree<W> build(const Hierarchy& h, const A& a) {
  if (a.p != h.leaf_count()) {
    throw ValidationError("build_tree: matrix has p=" + std::to_string(a.p) + " but hierarchy has " +
                          std::to_string(h.leaf_count()) + " leaves");
  }
  BasicTree<W> t;
  t.hierarchy = &h;
  t.subject_id = a.subject_id;
  t.weights.assign(h.size(), W{0});
  const int p = static_cast<int>(a.p);
  for (int i = 0; i < p; ++i) {
    t.weights[h.leaf_of_roi(i)] += a.at(i, i);
    for (int j = i + 1; j < p; ++j) {
      const auto v = a.at(i, j);
      if (v != 0) t.weights[h.lca_index(i, j)] += v;
    }
  }
  return t;
}

template <typename W>
TreeVector vectorize(const BasicTree<W>& t, bool include_leaves) {
  const Hierarchy& h = *t.hierarchy;
  TreeVector out;
  for (auto idx : h.internal_indices()) {
    out.values.push_back(static_cast<double>(t.weights[idx]));
    out.labels.push_back(h.node(idx).name);
  }
  if (include_leaves) {
    for (std::size_t idx = 0; idx < h.size(); ++idx) {
      if (!h.is_leaf(idx)) continue;
      out.values.push_back(static_cast<double>(t.weights[idx]));
      out.labels.push_back(h.node(idx).name);
    }
  }
  return out;
}

template <typename W>
std::string format_trees(std::span<const BasicTree<W>> trees) {
  std::string out = "subject_id,node_name,level,weight\n";
  for (const auto& t : trees) {
    const Hierarchy& h = *t.hierarchy;
    for (std::size_t idx = 0; idx < h.size(); ++idx) {
      out += csv::escape(t.subject_id);
      out += ',';
      out += csv::escape(h.node(idx).name);
      out += ',';
      out += std::to_string(h.node(idx).level);
      out += ',';
      if constexpr (std::is_integral_v<W>) {
        out += std::to_string(t.weights[idx]);
      } else {
        out += csv::format_double(t.weights[idx]);
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace

ConnectomeTree build_tree(const Hierarchy& h, const AdjacencyMatrix& a) {
  return build<std::int64_t>(h, a);
}

WeightedTree build_weighted_tree(const Hierarchy& h, const WeightedAdjacency& a) {
  return build<double>(h, a);
}

WeightedTree to_weighted(const ConnectomeTree& t) {
  WeightedTree out;
  out.hierarchy = t.hierarchy;
  out.subject_id = t.subject_id;
  out.weights.assign(t.weights.begin(), t.weights.end());
  return out;
}

WeightedTree mean_tree(std::span<const WeightedTree> trees) {
  if (trees.empty()) throw ValidationError("mean_tree: no trees");
  WeightedTree out;
  out.hierarchy = trees.front().hierarchy;
  out.subject_id = "mean";
  out.weights.assign(out.hierarchy->size(), 0.0);
  for (const auto& t : trees) {
    if (t.hierarchy != out.hierarchy && !t.hierarchy->same_topology(*out.hierarchy)) {
      throw ValidationError("mean_tree: trees use different hierarchies");
    }
    for (std::size_t i = 0; i < out.weights.size(); ++i) out.weights[i] += t.weights[i];
  }
  for (auto& w : out.weights) w /= static_cast<double>(trees.size());
  return out;
}

TreeVector vectorize_tree(const WeightedTree& t, bool include_leaves) { return vectorize(t, include_leaves); }
TreeVector vectorize_tree(const ConnectomeTree& t, bool include_leaves) { return vectorize(t, include_leaves); }

FeatureMatrix tree_features(std::span<const ConnectomeTree> trees, bool include_leaves) {
  if (trees.empty()) throw ValidationError("tree_features: no trees");
  std::vector<std::string> labels;
  std::vector<std::string> ids;
  Eigen::MatrixXd values;
  for (std::size_t s = 0; s < trees.size(); ++s) {
    auto v = vectorize_tree(trees[s], include_leaves);
    if (s == 0) {
      labels = v.labels;
      values.resize(static_cast<Eigen::Index>(trees.size()), static_cast<Eigen::Index>(labels.size()));
    } else if (v.labels != labels) {
      throw ValidationError("tree_features: trees use different hierarchies");
    }
    for (std::size_t j = 0; j < v.values.size(); ++j) {
      values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) = v.values[j];
    }
    ids.push_back(trees[s].subject_id);
  }
  return make_feature_matrix(std::move(values), std::move(ids), std::move(labels));
}

ConservationReport conservation_check(const Hierarchy& h, const AdjacencyMatrix& a, const ConnectomeTree& t) {
  ConservationReport r;
  for (std::size_t idx = 0; idx < h.size(); ++idx) {
    (h.is_leaf(idx) ? r.leaf_sum : r.internal_sum) += t.weights[idx];
  }
  for (std::size_t i = 0; i < a.p; ++i) {
    r.trace += a.at(i, i);
    for (std::size_t j = i + 1; j < a.p; ++j) r.upper_triangle_sum += a.at(i, j);
  }
  return r;
}

std::string format_tree_csv(std::span<const ConnectomeTree> trees) { return format_trees(trees); }
std::string format_tree_csv(std::span<const WeightedTree> trees) { return format_trees(trees); }

std::vector<WeightedTree> parse_tree_csv(const Hierarchy& h, std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty() || rows.front().fields != std::vector<std::string>{"subject_id", "node_name", "level", "weight"}) {
    throw ValidationError("tree csv: expected header 'subject_id,node_name,level,weight'");
  }
  std::vector<WeightedTree> trees;
  std::map<std::string, std::size_t> by_subject;
  std::vector<std::vector<bool>> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != 4) throw ValidationError("tree csv line " + std::to_string(row.line) + ": expected 4 fields");
    auto [it, inserted] = by_subject.emplace(row.fields[0], trees.size());
    if (inserted) {
      WeightedTree t;
      t.hierarchy = &h;
      t.subject_id = row.fields[0];
      t.weights.assign(h.size(), 0.0);
      trees.push_back(std::move(t));
      seen.emplace_back(h.size(), false);
    }
    const auto idx = h.find(row.fields[1]);
    if (!idx) throw ValidationError("tree csv line " + std::to_string(row.line) + ": unknown node '" + row.fields[1] + "'");
    if (csv::parse_int(row.fields[2], row.line) != h.node(*idx).level) {
      throw ValidationError("tree csv line " + std::to_string(row.line) + ": level does not match hierarchy");
    }
    trees[it->second].weights[*idx] = csv::parse_double(row.fields[3], row.line);
    seen[it->second][*idx] = true;
  }
  for (std::size_t s = 0; s < trees.size(); ++s) {
    for (std::size_t idx = 0; idx < h.size(); ++idx) {
      if (!seen[s][idx]) {
        throw ValidationError("tree csv: subject '" + trees[s].subject_id + "' lacks node '" + h.node(idx).name + "'");
      }
    }
  }
  return trees;
}

}  // namespace ctree
