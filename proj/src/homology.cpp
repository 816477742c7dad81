#include "ctree/homology.hpp"

#include "ctree/csv.hpp"
#include "ctree/errors.hpp"
#include "ctree/parallel.hpp"
#include "ctree/tree.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace ctree::homology {

namespace {

// v + factor * w
SparseVector axpy(const SparseVector& v, const Rational& factor, const SparseVector& w) {
  SparseVector out;
  out.reserve(v.size() + w.size());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < v.size() || j < w.size()) {
    if (j == w.size() || (i < v.size() && v[i].first < w[j].first)) {
      out.push_back(v[i++]);
    } else if (i == v.size() || w[j].first < v[i].first) {
      out.emplace_back(w[j].first, factor * w[j].second);
      ++j;
    } else {
      Rational sum = v[i].second + factor * w[j].second;
      if (!sum.is_zero()) out.emplace_back(v[i].first, sum);
      ++i;
      ++j;
    }
  }
  return out;
}

SparseVector from_terms(std::vector<std::pair<std::size_t, Rational>> terms) {
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseVector out;
  for (auto& [idx, value] : terms) {
    if (!out.empty() && out.back().first == idx) {
      out.back().second = out.back().second + value;
      if (out.back().second.is_zero()) out.pop_back();
    } else if (!value.is_zero()) {
      out.emplace_back(idx, value);
    }
  }
  return out;
}

struct Pivot {
  SparseVector column;
  SparseVector chain;
};

// Column reduction keyed on the largest nonzero row. Returns the rank and,
// when requested, the chains of columns that reduced to zero (a kernel basis).
std::size_t reduce_columns(std::vector<SparseVector> columns, std::vector<SparseVector>* kernel) {
  std::unordered_map<std::size_t, Pivot> pivots;
  std::size_t rank = 0;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    SparseVector col = std::move(columns[j]);
    SparseVector chain;
    if (kernel) chain.emplace_back(j, Rational(1));
    while (!col.empty()) {
      auto it = pivots.find(col.back().first);
      if (it == pivots.end()) break;
      const Rational factor = -(col.back().second / it->second.column.back().second);
      col = axpy(col, factor, it->second.column);
      if (kernel) chain = axpy(chain, factor, it->second.chain);
    }
    if (col.empty()) {
      if (kernel) kernel->push_back(std::move(chain));
    } else {
      ++rank;
      const auto low = col.back().first;
      pivots.emplace(low, Pivot{std::move(col), std::move(chain)});
    }
  }
  return rank;
}

std::vector<SparseVector> boundary_columns(const ChainComplex& c) {
  std::vector<SparseVector> cols;
  cols.reserve(c.one_cells.size());
  for (std::size_t j = 0; j < c.one_cells.size(); ++j) cols.push_back(c.boundary_column(j));
  return cols;
}

std::int64_t fibers_within(const AdjacencyMatrix& a, const std::vector<int>& rois) {
  std::int64_t total = 0;
  for (std::size_t x = 0; x < rois.size(); ++x) {
    for (std::size_t y = x; y < rois.size(); ++y) total += a.at(rois[x], rois[y]);
  }
  return total;
}

void add_loops(ChainComplex& c, const AdjacencyMatrix& a, std::vector<int> rois, std::size_t point) {
  std::sort(rois.begin(), rois.end());
  for (std::size_t x = 0; x < rois.size(); ++x) {
    for (std::size_t y = x; y < rois.size(); ++y) {
      const auto count = a.at(rois[x], rois[y]);
      for (std::int64_t k = 0; k < count; ++k) c.one_cells.push_back({{rois[x], rois[y], k}, point, point});
    }
  }
}

void check_internal(const Hierarchy& h, const AdjacencyMatrix& a, std::size_t parent) {
  if (parent >= h.size()) throw ValidationError("homology: node index out of range");
  if (h.is_leaf(parent)) throw ValidationError("homology: node '" + h.node(parent).name + "' is a leaf");
  if (a.p != h.leaf_count()) throw ValidationError("homology: matrix size does not match hierarchy");
}

void check_budget(const Hierarchy& h, std::size_t parent, std::int64_t cells, std::size_t budget) {
  if (cells > static_cast<std::int64_t>(budget)) {
    throw ValidationError("homology: node '" + h.node(parent).name + "' needs " + std::to_string(cells) +
                          " one-cells, above the oracle cell budget of " + std::to_string(budget));
  }
}

}  // namespace

std::string FiberLabel::str() const {
  return "fiber(" + std::to_string(roi_a) + "," + std::to_string(roi_b) + ")#" + std::to_string(copy);
}

SparseVector ChainComplex::boundary_column(std::size_t cell) const {
  const auto& c = one_cells[cell];
  if (c.is_loop()) return {};
  return from_terms({{c.end, Rational(1)}, {c.start, Rational(-1)}});
}

ChainComplex build_children_complex(const Hierarchy& h, const AdjacencyMatrix& a, std::size_t parent,
                                    std::size_t cell_budget) {
  check_internal(h, a, parent);
  std::int64_t cells = 0;
  for (auto child : h.children(parent)) cells += fibers_within(a, h.descendant_rois(child));
  check_budget(h, parent, cells, cell_budget);

  ChainComplex c;
  c.one_cells.reserve(static_cast<std::size_t>(cells));
  for (auto child : h.children(parent)) {
    c.zero_cells.push_back(h.node(child).name);
    add_loops(c, a, h.descendant_rois(child), c.zero_cells.size() - 1);
  }
  return c;
}

ChainComplex build_parent_complex(const Hierarchy& h, const AdjacencyMatrix& a, std::size_t parent,
                                  std::size_t cell_budget) {
  check_internal(h, a, parent);
  const auto rois = h.descendant_rois(parent);
  const auto cells = fibers_within(a, rois);
  check_budget(h, parent, cells, cell_budget);

  ChainComplex c;
  c.zero_cells.push_back(h.node(parent).name);
  c.one_cells.reserve(static_cast<std::size_t>(cells));
  add_loops(c, a, rois, 0);
  return c;
}

ChainMap induced_map(const ChainComplex& children, const ChainComplex& parent) {
  const bool empty = children.zero_cells.empty() && children.one_cells.empty();
  if (empty && parent.zero_cells.empty() && parent.one_cells.empty()) return ChainMap{&children, &parent, {}, {}};
  if (parent.zero_cells.size() != 1) {
    throw ValidationError("induced_map: parent complex must have exactly one base point");
  }
  ChainMap f;
  f.domain = &children;
  f.codomain = &parent;
  f.map_0.assign(children.zero_cells.size(), 0);

  std::vector<std::pair<FiberLabel, std::size_t>> index;
  index.reserve(parent.one_cells.size());
  for (std::size_t j = 0; j < parent.one_cells.size(); ++j) index.emplace_back(parent.one_cells[j].label, j);
  std::sort(index.begin(), index.end());

  f.map_1.reserve(children.one_cells.size());
  for (const auto& cell : children.one_cells) {
    auto it = std::lower_bound(index.begin(), index.end(), std::make_pair(cell.label, std::size_t{0}));
    if (it == index.end() || it->first != cell.label) {
      throw ComputationError("induced_map: " + cell.label.str() + " has no image in the parent complex");
    }
    f.map_1.push_back(it->second);
  }
  if (auto bad = find_commutation_failure(f)) {
    throw ComputationError("induced_map: chain map does not commute with the boundary at " +
                           children.one_cells[*bad].label.str());
  }
  return f;
}

std::optional<std::size_t> find_commutation_failure(const ChainMap& f) {
  for (std::size_t c = 0; c < f.domain->one_cells.size(); ++c) {
    const auto lhs = f.codomain->boundary_column(f.map_1[c]);
    std::vector<std::pair<std::size_t, Rational>> terms;
    for (const auto& [idx, coeff] : f.domain->boundary_column(c)) terms.emplace_back(f.map_0[idx], coeff);
    const auto rhs = from_terms(std::move(terms));
    if (lhs != rhs) return c;
  }
  return std::nullopt;
}

std::size_t boundary_rank(const ChainComplex& c) { return reduce_columns(boundary_columns(c), nullptr); }

std::size_t homology_rank(const ChainComplex& c, int dimension) {
  const auto r = boundary_rank(c);
  if (dimension == 0) return c.zero_cells.size() - r;
  if (dimension == 1) return c.one_cells.size() - r;
  throw ValidationError("homology_rank: dimension must be 0 or 1");
}

std::vector<SparseVector> cycle_basis(const ChainComplex& c) {
  std::vector<SparseVector> kernel;
  reduce_columns(boundary_columns(c), &kernel);
  return kernel;
}

std::size_t rank_of(std::vector<SparseVector> vectors) { return reduce_columns(std::move(vectors), nullptr); }

CorankResult corank(const Hierarchy& h, const AdjacencyMatrix& a, std::size_t parent, std::size_t cell_budget) {
  const auto children = build_children_complex(h, a, parent, cell_budget);
  const auto whole = build_parent_complex(h, a, parent, cell_budget);
  const auto f = induced_map(children, whole);

  const auto basis = cycle_basis(children);
  std::vector<SparseVector> images;
  images.reserve(basis.size());
  for (const auto& z : basis) {
    std::vector<std::pair<std::size_t, Rational>> terms;
    terms.reserve(z.size());
    for (const auto& [cell, coeff] : z) terms.emplace_back(f.map_1[cell], coeff);
    images.push_back(from_terms(std::move(terms)));
  }

  CorankResult r;
  r.parent_rank = homology_rank(whole, 1);
  r.children_rank = basis.size();
  r.image_rank = rank_of(std::move(images));
  r.corank = r.parent_rank - r.image_rank;
  return r;
}

bool TheoremReport::all_pass() const {
  return std::all_of(nodes.begin(), nodes.end(), [](const NodeCheck& n) { return n.match; });
}

TheoremReport verify_theorem(const Hierarchy& h, const AdjacencyMatrix& a, std::size_t cell_budget, int threads) {
  const auto tree = build_tree(h, a);
  const auto internal = h.internal_indices();
  TheoremReport report;
  report.nodes.resize(internal.size());
  parallel_for(internal.size(), threads, [&](std::size_t k) {
    const auto idx = internal[k];
    NodeCheck& check = report.nodes[k];
    check.node_id = h.node(idx).node_id;
    check.node_name = h.node(idx).name;
    check.weight = tree.weights[idx];
    try {
      check.corank = static_cast<std::int64_t>(corank(h, a, idx, cell_budget).corank);
      check.chain_map_ok = true;
    } catch (const ComputationError&) {
      check.chain_map_ok = false;
      check.corank = -1;
    }
    check.match = check.chain_map_ok && check.corank == check.weight;
  });
  return report;
}

std::string format_report(const TheoremReport& report) {
  std::string out = "node_name,weight,corank,match\n";
  for (const auto& n : report.nodes) {
    out += csv::escape(n.node_name) + "," + std::to_string(n.weight) + "," + std::to_string(n.corank) + "," +
           (n.match ? "true" : "false") + "\n";
  }
  return out;
}

}  // namespace ctree::homology
