#pragma once

#include "ctree/atlas.hpp"
#include "ctree/tree.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ctree::viz {

struct ChordSpec {
  double size = 800.0;       // square canvas, px
  double radius_frac = 0.38; // circle radius as a fraction of size
  double max_width = 12.0;   // stroke cap for the heaviest node at level 1
  bool leaf_labels = true;
};

// Fixed palette; index by node_id.
const std::vector<std::string>& palette();
const std::string& node_color(int node_id);

// Angle (radians) of the midpoint of a leaf's arc; leaves go round the circle
// in file order starting at 12 o'clock, clockwise.
double leaf_angle(const Hierarchy& h, int roi);

// One <g class="chord-group"> per internal node with positive weight. Within a
// group, one chord per pair of children, joining each child's median leaf.
// Stroke width = max_width * sqrt(w / max_w) / level.
std::string render_chord(const WeightedTree& t, const ChordSpec& spec = {});
std::string render_chord(const ConnectomeTree& t, const ChordSpec& spec = {});

struct TreeDiagramSpec {
  double width = 1400.0;
  double level_height = 120.0;
  bool include_leaves = false;
};

// 100 * (a - b) / b per node in file order; empty where b == 0.
std::vector<std::optional<double>> percent_difference(const WeightedTree& a, const WeightedTree& b);

std::string render_tree_diagram(const WeightedTree& t, const WeightedTree* comparison = nullptr,
                                const TreeDiagramSpec& spec = {});

enum class Desirability { unknown, desirable, undesirable };

Desirability parse_desirability(const std::string& token);

struct ScatterSpec {
  double width = 900.0;
  double height = 600.0;
  double min_font = 8.0;
  double max_font = 24.0;
};

// Traits at x = correlation, stacked into lanes so labels never overlap.
std::string render_cca_scatter(const std::vector<double>& correlations, const std::vector<double>& loadings,
                               const std::vector<std::string>& labels,
                               const std::vector<Desirability>& desirability = {}, const ScatterSpec& spec = {});

// Lane per trait as used by render_cca_scatter.
std::vector<int> scatter_lanes(const std::vector<double>& correlations, const std::vector<double>& loadings,
                               const std::vector<std::string>& labels, const ScatterSpec& spec = {});

std::string xml_escape(const std::string& s);

}  // namespace ctree::viz
