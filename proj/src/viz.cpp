#include "ctree/viz.hpp"

#include "ctree/csv.hpp"
#include "ctree/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

namespace ctree::viz {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string header(double w, double h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) +
         "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\">\n" +
         "<rect x=\"0\" y=\"0\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" fill=\"#ffffff\"/>\n";
}

void require_hierarchy(const WeightedTree& t, const char* who) {
  if (!t.hierarchy) throw ValidationError(std::string(who) + ": tree has no hierarchy");
  if (t.weights.size() != t.hierarchy->size()) {
    throw ValidationError(std::string(who) + ": tree has " + std::to_string(t.weights.size()) +
                          " weights for a hierarchy of " + std::to_string(t.hierarchy->size()) + " nodes");
  }
}

std::vector<std::size_t> leaf_positions(const Hierarchy& h) {
  std::vector<std::size_t> pos(h.leaf_count());
  const auto order = h.leaf_order();
  for (std::size_t k = 0; k < order.size(); ++k) pos[static_cast<std::size_t>(order[k])] = k;
  return pos;
}

int median_leaf(const Hierarchy& h, std::size_t node) {
  if (h.is_leaf(node)) return *h.node(node).roi_index;
  const auto rois = h.descendant_rois(node);
  return rois[(rois.size() - 1) / 2];
}

}  // namespace

const std::vector<std::string>& palette() {
  static const std::vector<std::string> colors = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
      "#bcbd22", "#17becf", "#393b79", "#637939", "#8c6d31", "#843c39", "#7b4173", "#3182bd",
      "#e6550d", "#31a354", "#756bb1", "#636363", "#6baed6", "#fd8d3c", "#74c476", "#9e9ac8"};
  return colors;
}

const std::string& node_color(int node_id) {
  const auto& p = palette();
  return p[static_cast<std::size_t>(node_id < 0 ? -node_id : node_id) % p.size()];
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

double leaf_angle(const Hierarchy& h, int roi) {
  const auto pos = leaf_positions(h);
  if (roi < 0 || static_cast<std::size_t>(roi) >= pos.size()) throw ValidationError("leaf_angle: roi out of range");
  return 2.0 * std::numbers::pi * (static_cast<double>(pos[roi]) + 0.5) / static_cast<double>(pos.size());
}

std::string render_chord(const WeightedTree& t, const ChordSpec& spec) {
  require_hierarchy(t, "render_chord");
  const Hierarchy& h = *t.hierarchy;
  const double c = spec.size / 2.0;
  const double r = spec.size * spec.radius_frac;
  const auto pos = leaf_positions(h);
  const double p = static_cast<double>(pos.size());
  auto point = [&](int roi, double radius) {
    const double a = 2.0 * std::numbers::pi * (static_cast<double>(pos[roi]) + 0.5) / p;
    return std::pair{c + radius * std::sin(a), c - radius * std::cos(a)};
  };

  std::string out = header(spec.size, spec.size);
  out += "<circle cx=\"" + num(c) + "\" cy=\"" + num(c) + "\" r=\"" + num(r) +
         "\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1.000\"/>\n";

  // leaf arcs
  out += "<g class=\"arcs\">\n";
  for (auto roi : h.leaf_order()) {
    const double a0 = 2.0 * std::numbers::pi * static_cast<double>(pos[roi]) / p;
    const double a1 = 2.0 * std::numbers::pi * (static_cast<double>(pos[roi]) + 1.0) / p;
    const auto leaf = h.leaf_of_roi(roi);
    const auto parent = h.parent(leaf).value_or(leaf);
    out += "<path class=\"arc\" data-roi=\"" + std::to_string(roi) + "\" d=\"M " + num(c + r * std::sin(a0)) + " " +
           num(c - r * std::cos(a0)) + " A " + num(r) + " " + num(r) + " 0 0 1 " + num(c + r * std::sin(a1)) + " " +
           num(c - r * std::cos(a1)) + "\" fill=\"none\" stroke=\"" + node_color(h.node(parent).node_id) +
           "\" stroke-width=\"6.000\"/>\n";
  }
  out += "</g>\n";

  double max_w = 0.0;
  for (auto idx : h.internal_indices()) max_w = std::max(max_w, t.weights[idx]);
  out += "<g class=\"chords\" fill=\"none\" stroke-linecap=\"round\">\n";
  if (max_w > 0.0) {
    for (auto idx : h.internal_indices()) {
      const double w = t.weights[idx];
      if (!(w > 0.0)) continue;
      const auto kids = h.children(idx);
      if (kids.size() < 2) continue;
      const auto& node = h.node(idx);
      const double width = spec.max_width * std::sqrt(w / max_w) / static_cast<double>(node.level);
      out += "<g class=\"chord-group\" data-node=\"" + std::to_string(node.node_id) + "\" stroke=\"" +
             node_color(node.node_id) + "\" stroke-width=\"" + num(width) + "\" stroke-opacity=\"0.600\">\n";
      for (std::size_t i = 0; i < kids.size(); ++i) {
        for (std::size_t j = i + 1; j < kids.size(); ++j) {
          const auto [x1, y1] = point(median_leaf(h, kids[i]), r);
          const auto [x2, y2] = point(median_leaf(h, kids[j]), r);
          out += "<path class=\"chord\" d=\"M " + num(x1) + " " + num(y1) + " Q " + num(c) + " " + num(c) + " " +
                 num(x2) + " " + num(y2) + "\"/>\n";
        }
      }
      out += "</g>\n";
    }
  }
  out += "</g>\n";

  if (spec.leaf_labels) {
    out += "<g class=\"labels\" font-size=\"9\" fill=\"#333333\">\n";
    for (auto roi : h.leaf_order()) {
      const double a = 2.0 * std::numbers::pi * (static_cast<double>(pos[roi]) + 0.5) / p;
      const auto [x, y] = point(roi, r + 10.0);
      double deg = a * 180.0 / std::numbers::pi - 90.0;
      std::string anchor = "start";
      if (deg > 90.0) {
        deg -= 180.0;
        anchor = "end";
      }
      out += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\" transform=\"rotate(" +
             num(deg) + " " + num(x) + " " + num(y) + ")\">" + xml_escape(h.node(h.leaf_of_roi(roi)).name) +
             "</text>\n";
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string render_chord(const ConnectomeTree& t, const ChordSpec& spec) { return render_chord(to_weighted(t), spec); }

std::vector<std::optional<double>> percent_difference(const WeightedTree& a, const WeightedTree& b) {
  require_hierarchy(a, "percent_difference");
  require_hierarchy(b, "percent_difference");
  if (a.hierarchy != b.hierarchy && !a.hierarchy->same_topology(*b.hierarchy)) {
    throw ValidationError("percent_difference: trees use different hierarchies");
  }
  std::vector<std::optional<double>> out(a.weights.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (b.weights[i] != 0.0) out[i] = 100.0 * (a.weights[i] - b.weights[i]) / b.weights[i];
  }
  return out;
}

std::string render_tree_diagram(const WeightedTree& t, const WeightedTree* comparison, const TreeDiagramSpec& spec) {
  require_hierarchy(t, "render_tree_diagram");
  const Hierarchy& h = *t.hierarchy;
  std::vector<std::optional<double>> pct;
  if (comparison) pct = percent_difference(t, *comparison);

  auto shown = [&](std::size_t idx) { return spec.include_leaves || !h.is_leaf(idx); };
  const int levels = spec.include_leaves ? h.max_level() : [&] {
    int m = 1;
    for (auto i : h.internal_indices()) m = std::max(m, h.node(i).level);
    return m;
  }();

  // Frontier nodes (no shown children) get equal slots in depth-first order;
  // every other node sits over the mean of its shown children.
  std::vector<double> x(h.size(), 0.0);
  std::vector<std::size_t> frontier;
  std::vector<std::size_t> post;
  {
    std::vector<std::pair<std::size_t, bool>> stack{{h.root(), false}};
    while (!stack.empty()) {
      auto [v, expanded] = stack.back();
      stack.pop_back();
      if (expanded) {
        post.push_back(v);
        continue;
      }
      stack.emplace_back(v, true);
      const auto kids = h.children(v);
      bool any = false;
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
        if (shown(*it)) {
          stack.emplace_back(*it, false);
          any = true;
        }
      }
      if (!any) frontier.push_back(v);
    }
  }
  const double margin = 60.0;
  const double slot = (spec.width - 2.0 * margin) / static_cast<double>(std::max<std::size_t>(frontier.size(), 1));
  for (std::size_t k = 0; k < frontier.size(); ++k) x[frontier[k]] = margin + slot * (static_cast<double>(k) + 0.5);
  for (auto v : post) {
    double sum = 0.0;
    int count = 0;
    for (auto ch : h.children(v)) {
      if (shown(ch)) {
        sum += x[ch];
        ++count;
      }
    }
    if (count) x[v] = sum / count;
  }
  auto y = [&](std::size_t idx) { return 50.0 + spec.level_height * (h.node(idx).level - 1); };
  const double height = 50.0 + spec.level_height * levels + 40.0;

  std::string out = header(spec.width, height);
  out += "<g class=\"edges\" stroke=\"#999999\" stroke-width=\"1.000\">\n";
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!shown(i)) continue;
    if (auto parent = h.parent(i)) {
      out += "<line x1=\"" + num(x[*parent]) + "\" y1=\"" + num(y(*parent)) + "\" x2=\"" + num(x[i]) + "\" y2=\"" +
             num(y(i)) + "\"/>\n";
    }
  }
  out += "</g>\n";

  double max_w = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (shown(i)) max_w = std::max(max_w, std::abs(t.weights[i]));
  }
  out += "<g class=\"nodes\" font-size=\"10\" fill=\"#222222\">\n";
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!shown(i)) continue;
    const auto& node = h.node(i);
    const double rad = 4.0 + (max_w > 0.0 ? 10.0 * std::sqrt(std::abs(t.weights[i]) / max_w) : 0.0);
    out += "<g class=\"node\" data-node=\"" + std::to_string(node.node_id) + "\">\n";
    out += "<circle cx=\"" + num(x[i]) + "\" cy=\"" + num(y(i)) + "\" r=\"" + num(rad) + "\" fill=\"" +
           node_color(node.node_id) + "\"/>\n";
    const std::string tx = num(x[i]);
    const std::string ty = num(y(i) + rad + 12.0);
    out += "<text class=\"name\" x=\"" + tx + "\" y=\"" + ty + "\" text-anchor=\"middle\" transform=\"rotate(-20 " +
           tx + " " + ty + ")\">" + xml_escape(node.name) + "</text>\n";
    out += "<text class=\"weight\" x=\"" + tx + "\" y=\"" + num(y(i) + rad + 24.0) + "\" text-anchor=\"middle\">" +
           csv::format_double(t.weights[i]) + "</text>\n";
    if (comparison) {
      std::string label = "n/a";
      if (pct[i]) {
        double v = *pct[i];
        char buf[64];
        std::snprintf(buf, sizeof buf, "%+.1f%%", v == 0.0 ? 0.0 : v);
        label = buf;
        if (label == "-0.0%" || label == "+0.0%") label = "0.0%";
      }
      out += "<text class=\"pct\" x=\"" + tx + "\" y=\"" + num(y(i) + rad + 36.0) + "\" text-anchor=\"middle\">" +
             label + "</text>\n";
    }
    out += "</g>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

Desirability parse_desirability(const std::string& token) {
  const auto t = csv::trim(token);
  if (t == "desirable" || t == "+" || t == "1") return Desirability::desirable;
  if (t == "undesirable" || t == "-" || t == "-1") return Desirability::undesirable;
  if (t.empty() || t == "NA" || t == "unknown" || t == "0") return Desirability::unknown;
  throw ValidationError("unknown desirability '" + std::string(t) + "'");
}

namespace {

struct ScatterLayout {
  std::vector<double> font;
  std::vector<double> x;
  std::vector<int> lane;
  int lanes = 0;
};

ScatterLayout layout_scatter(const std::vector<double>& correlations, const std::vector<double>& loadings,
                             const std::vector<std::string>& labels, const ScatterSpec& spec) {
  const std::size_t q = correlations.size();
  if (loadings.size() != q || labels.size() != q) {
    throw ValidationError("render_cca_scatter: correlations, loadings and labels differ in length");
  }
  ScatterLayout l;
  l.font.resize(q);
  l.x.resize(q);
  l.lane.assign(q, 0);
  double max_load = 0.0;
  for (double v : loadings) {
    if (!std::isfinite(v)) throw ValidationError("render_cca_scatter: non-finite loading");
    max_load = std::max(max_load, std::abs(v));
  }
  const double margin = 60.0;
  for (std::size_t i = 0; i < q; ++i) {
    if (!std::isfinite(correlations[i])) throw ValidationError("render_cca_scatter: non-finite correlation");
    const double c = std::clamp(correlations[i], -1.0, 1.0);
    l.x[i] = margin + (c + 1.0) / 2.0 * (spec.width - 2.0 * margin);
    l.font[i] = spec.min_font + (max_load > 0.0 ? (spec.max_font - spec.min_font) * std::abs(loadings[i]) / max_load : 0.0);
  }
  std::vector<std::size_t> order(q);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return l.x[a] < l.x[b]; });
  std::vector<double> lane_end;
  for (auto i : order) {
    const double half = 0.3 * l.font[i] * static_cast<double>(labels[i].size()) + 2.0;
    const double left = l.x[i] - half;
    std::size_t k = 0;
    while (k < lane_end.size() && lane_end[k] > left) ++k;
    if (k == lane_end.size()) lane_end.push_back(0.0);
    lane_end[k] = l.x[i] + half;
    l.lane[i] = static_cast<int>(k);
  }
  l.lanes = static_cast<int>(lane_end.size());
  return l;
}

}  // namespace

std::vector<int> scatter_lanes(const std::vector<double>& correlations, const std::vector<double>& loadings,
                               const std::vector<std::string>& labels, const ScatterSpec& spec) {
  return layout_scatter(correlations, loadings, labels, spec).lane;
}

std::string render_cca_scatter(const std::vector<double>& correlations, const std::vector<double>& loadings,
                               const std::vector<std::string>& labels, const std::vector<Desirability>& desirability,
                               const ScatterSpec& spec) {
  if (!desirability.empty() && desirability.size() != labels.size()) {
    throw ValidationError("render_cca_scatter: desirability length does not match traits");
  }
  const auto l = layout_scatter(correlations, loadings, labels, spec);
  const double lane_h = spec.max_font * 1.2;
  const double height = std::max(spec.height, 100.0 + lane_h * l.lanes);
  const double axis_y = height - 50.0;
  const double margin = 60.0;

  std::string out = header(spec.width, height);
  out += "<g class=\"axis\" stroke=\"#444444\" stroke-width=\"1.000\">\n";
  out += "<line x1=\"" + num(margin) + "\" y1=\"" + num(axis_y) + "\" x2=\"" + num(spec.width - margin) + "\" y2=\"" +
         num(axis_y) + "\"/>\n";
  for (int tick = -4; tick <= 4; ++tick) {
    const double tx = margin + (tick / 4.0 + 1.0) / 2.0 * (spec.width - 2.0 * margin);
    out += "<line x1=\"" + num(tx) + "\" y1=\"" + num(axis_y) + "\" x2=\"" + num(tx) + "\" y2=\"" + num(axis_y + 5.0) +
           "\"/>\n";
  }
  out += "</g>\n<g class=\"ticks\" font-size=\"10\" fill=\"#444444\" text-anchor=\"middle\">\n";
  for (int tick = -4; tick <= 4; ++tick) {
    const double tx = margin + (tick / 4.0 + 1.0) / 2.0 * (spec.width - 2.0 * margin);
    out += "<text x=\"" + num(tx) + "\" y=\"" + num(axis_y + 18.0) + "\">" + fixed2(tick / 4.0) + "</text>\n";
  }
  out += "</g>\n<text x=\"" + num(spec.width / 2.0) + "\" y=\"" + num(axis_y + 38.0) +
         "\" font-size=\"12\" text-anchor=\"middle\">correlation with first canonical variate</text>\n";

  out += "<g class=\"traits\" text-anchor=\"middle\">\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto d = desirability.empty() ? Desirability::unknown : desirability[i];
    const char* color = d == Desirability::desirable ? "#1a9850" : d == Desirability::undesirable ? "#d73027" : "#666666";
    const char* cls = d == Desirability::desirable ? "desirable" : d == Desirability::undesirable ? "undesirable" : "unknown";
    const double ty = axis_y - 12.0 - lane_h * l.lane[i];
    out += "<text class=\"trait " + std::string(cls) + "\" x=\"" + num(l.x[i]) + "\" y=\"" + num(ty) +
           "\" font-size=\"" + num(l.font[i]) + "\" fill=\"" + color + "\">" + xml_escape(labels[i]) + "</text>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace ctree::viz
