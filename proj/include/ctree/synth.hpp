#pragma once

#include "ctree/atlas.hpp"
#include "ctree/connectome.hpp"
#include "ctree/viz.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ctree::synth {

struct PlantedSignal {
  int node_id = 0;
  std::size_t trait = 0;  // 0-based
  double effect = 0.0;
};

struct SynthConfig {
  std::size_t n = 200;
  std::shared_ptr<const Hierarchy> hierarchy;  // null means the bundled DK atlas
  std::string hierarchy_source = "dk";
  double base_rate = 5.0;
  double dispersion = 10.0;  // negative-binomial size; variance = mu + mu^2 / dispersion
  double latent_sd = 0.5;    // log-rate sd of the per-node intensity
  std::size_t traits = 10;
  double trait_noise_sd = 1.0;
  std::vector<PlantedSignal> signals;
  std::vector<std::pair<std::size_t, double>> missing;  // (trait, fraction)
  std::vector<std::pair<std::size_t, viz::Desirability>> desirability;
  std::size_t zero_variance_pairs = 0;
  std::uint64_t seed = 1;

  const Hierarchy& atlas() const { return hierarchy ? *hierarchy : Hierarchy::desikan_killiany(); }
  void validate() const;
};

// `key,value` lines. Keys: n, hierarchy (dk or a path), base_rate, dispersion,
// latent_sd, traits, trait_noise_sd, signal (node:trait:effect, repeatable;
// node is a name or node_id, trait is 1-based), missing (trait:fraction),
// desirability (trait:desirable|undesirable), zero_variance_pairs, seed.
SynthConfig parse_config(std::string_view text, const std::string& base_dir = {});
SynthConfig read_config(const std::string& path);
std::string format_config(const SynthConfig& cfg);

std::string trait_name(std::size_t trait);
std::string subject_name(std::size_t subject);

struct Cohort {
  std::shared_ptr<const Hierarchy> hierarchy;
  std::vector<AdjacencyMatrix> adjacency;
  FeatureMatrix traits;                         // n x traits, NaN where deleted
  Eigen::MatrixXd latent;                       // n x internal nodes (internal_indices order)
  std::vector<std::pair<int, int>> constant_pairs;  // ROI pairs held at zero
  std::vector<std::vector<std::size_t>> missing_rows;  // per configured missing entry
};

Cohort generate_cohort(const SynthConfig& cfg, int threads = 1);

// manifest.csv, adj/<subject>.csv, traits.csv, ground_truth.csv, hierarchy.csv.
void write_cohort(const Cohort& cohort, const SynthConfig& cfg, const std::string& out_dir);

std::string format_ground_truth(const Cohort& cohort, const SynthConfig& cfg);

}  // namespace ctree::synth
