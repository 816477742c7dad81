#include "ctree/synth.hpp"

#include "ctree/csv.hpp"
#include "ctree/errors.hpp"
#include "ctree/parallel.hpp"
#include "ctree/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>

namespace ctree::synth {

namespace {

constexpr std::uint64_t kSubjectTag = 0x7375626a;
constexpr std::uint64_t kPairTag = 0x70616972;
constexpr std::uint64_t kMissingTag = 0x6d697373;

std::vector<std::string> split_colon(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(':', start);
    out.push_back(csv::trim(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::size_t parse_trait(const std::string& s, std::size_t line) {
  const auto t = csv::parse_int(s, line);
  if (t < 1) throw ValidationError("synth config line " + std::to_string(line) + ": trait indices start at 1");
  return static_cast<std::size_t>(t - 1);
}

std::size_t parse_count(const std::string& s, std::size_t line) {
  const auto v = csv::parse_int(s, line);
  if (v < 0) throw ValidationError("synth config line " + std::to_string(line) + ": expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

int resolve_node(const Hierarchy& h, const std::string& token, std::size_t line) {
  if (auto idx = h.find(token)) return h.node(*idx).node_id;
  try {
    const auto id = csv::parse_int(token, line);
    return h.node(h.index_of(static_cast<int>(id))).node_id;
  } catch (const ValidationError&) {
    throw ValidationError("synth config line " + std::to_string(line) + ": unknown node '" + token + "'");
  }
}

std::string fmt(double v) { return csv::format_double(v); }

}  // namespace

void SynthConfig::validate() const {
  const auto& h = atlas();
  if (n < 2) throw ValidationError("synth: n must be at least 2");
  if (!(base_rate >= 0.0) || !std::isfinite(base_rate)) throw ValidationError("synth: base_rate must be >= 0");
  if (!(dispersion > 0.0) || !std::isfinite(dispersion)) throw ValidationError("synth: dispersion must be > 0");
  if (!(latent_sd >= 0.0) || !std::isfinite(latent_sd)) throw ValidationError("synth: latent_sd must be >= 0");
  if (!(trait_noise_sd >= 0.0) || !std::isfinite(trait_noise_sd)) {
    throw ValidationError("synth: trait_noise_sd must be >= 0");
  }
  for (const auto& s : signals) {
    if (s.trait >= traits) throw ValidationError("synth: signal trait " + std::to_string(s.trait + 1) + " out of range");
    if (h.is_leaf(h.index_of(s.node_id))) {
      throw ValidationError("synth: signal node " + std::to_string(s.node_id) + " is a leaf");
    }
    if (!std::isfinite(s.effect)) throw ValidationError("synth: non-finite effect");
  }
  for (const auto& [t, f] : missing) {
    if (t >= traits) throw ValidationError("synth: missing trait " + std::to_string(t + 1) + " out of range");
    if (!(f >= 0.0 && f < 1.0)) throw ValidationError("synth: missing fraction must be in [0, 1)");
  }
  for (const auto& [t, d] : desirability) {
    if (t >= traits) throw ValidationError("synth: desirability trait " + std::to_string(t + 1) + " out of range");
  }
  const std::size_t p = h.leaf_count();
  if (zero_variance_pairs > p * (p - 1) / 2) throw ValidationError("synth: more constant pairs than ROI pairs");
}

SynthConfig parse_config(std::string_view text, const std::string& base_dir) {
  SynthConfig cfg;
  const auto rows = csv::parse(text);
  std::vector<std::pair<std::string, std::size_t>> signal_lines;
  std::size_t first = 0;
  if (!rows.empty() && rows[0].fields.size() == 2 && rows[0].fields[0] == "key" && rows[0].fields[1] == "value") {
    first = 1;
  }
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != 2) {
      throw ValidationError("synth config line " + std::to_string(row.line) + ": expected key,value");
    }
    const std::string key = csv::trim(row.fields[0]);
    const std::string value = csv::trim(row.fields[1]);
    const auto line = row.line;
    if (key == "n") {
      cfg.n = parse_count(value, line);
    } else if (key == "hierarchy") {
      cfg.hierarchy_source = value;
      if (value == "dk") {
        cfg.hierarchy.reset();
      } else {
        std::filesystem::path path(value);
        if (path.is_relative() && !base_dir.empty()) path = std::filesystem::path(base_dir) / path;
        cfg.hierarchy = std::make_shared<const Hierarchy>(Hierarchy::load(path.string()));
      }
    } else if (key == "base_rate") {
      cfg.base_rate = csv::parse_double(value, line);
    } else if (key == "dispersion") {
      cfg.dispersion = csv::parse_double(value, line);
    } else if (key == "latent_sd") {
      cfg.latent_sd = csv::parse_double(value, line);
    } else if (key == "traits") {
      cfg.traits = parse_count(value, line);
    } else if (key == "trait_noise_sd") {
      cfg.trait_noise_sd = csv::parse_double(value, line);
    } else if (key == "signal") {
      signal_lines.emplace_back(value, line);  // resolved once the hierarchy is known
    } else if (key == "missing") {
      const auto parts = split_colon(value);
      if (parts.size() != 2) throw ValidationError("synth config line " + std::to_string(line) + ": missing=trait:fraction");
      cfg.missing.emplace_back(parse_trait(parts[0], line), csv::parse_double(parts[1], line));
    } else if (key == "desirability") {
      const auto parts = split_colon(value);
      if (parts.size() != 2) {
        throw ValidationError("synth config line " + std::to_string(line) + ": desirability=trait:label");
      }
      cfg.desirability.emplace_back(parse_trait(parts[0], line), viz::parse_desirability(parts[1]));
    } else if (key == "zero_variance_pairs") {
      cfg.zero_variance_pairs = parse_count(value, line);
    } else if (key == "seed") {
      const auto s = csv::parse_int(value, line);
      if (s < 0) throw ValidationError("synth config line " + std::to_string(line) + ": seed must be >= 0");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else {
      throw ValidationError("synth config line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }
  const auto& h = cfg.atlas();
  for (const auto& [value, line] : signal_lines) {
    const auto parts = split_colon(value);
    if (parts.size() != 3) throw ValidationError("synth config line " + std::to_string(line) + ": signal=node:trait:effect");
    cfg.signals.push_back({resolve_node(h, parts[0], line), parse_trait(parts[1], line), csv::parse_double(parts[2], line)});
  }
  cfg.validate();
  return cfg;
}

SynthConfig read_config(const std::string& path) {
  return parse_config(csv::read_file(path), std::filesystem::path(path).parent_path().string());
}

std::string format_config(const SynthConfig& cfg) {
  const auto& h = cfg.atlas();
  std::string out = "key,value\n";
  out += "n," + std::to_string(cfg.n) + "\n";
  out += "hierarchy," + csv::escape(cfg.hierarchy_source) + "\n";
  out += "base_rate," + fmt(cfg.base_rate) + "\n";
  out += "dispersion," + fmt(cfg.dispersion) + "\n";
  out += "latent_sd," + fmt(cfg.latent_sd) + "\n";
  out += "traits," + std::to_string(cfg.traits) + "\n";
  out += "trait_noise_sd," + fmt(cfg.trait_noise_sd) + "\n";
  for (const auto& s : cfg.signals) {
    out += "signal," + csv::escape(h.node(h.index_of(s.node_id)).name + ":" + std::to_string(s.trait + 1) + ":" +
                                   fmt(s.effect)) + "\n";
  }
  for (const auto& [t, f] : cfg.missing) out += "missing," + std::to_string(t + 1) + ":" + fmt(f) + "\n";
  for (const auto& [t, d] : cfg.desirability) {
    out += "desirability," + std::to_string(t + 1) + ":" +
           (d == viz::Desirability::desirable ? "desirable" : d == viz::Desirability::undesirable ? "undesirable" : "unknown") +
           "\n";
  }
  out += "zero_variance_pairs," + std::to_string(cfg.zero_variance_pairs) + "\n";
  out += "seed," + std::to_string(cfg.seed) + "\n";
  return out;
}

std::string trait_name(std::size_t trait) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trait_%02zu", trait + 1);
  return buf;
}

std::string subject_name(std::size_t subject) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sub%04zu", subject + 1);
  return buf;
}

Cohort generate_cohort(const SynthConfig& cfg, int threads) {
  cfg.validate();
  Cohort c;
  c.hierarchy = cfg.hierarchy ? cfg.hierarchy : std::shared_ptr<const Hierarchy>(&Hierarchy::desikan_killiany(), [](const Hierarchy*) {});
  const Hierarchy& h = *c.hierarchy;
  const std::size_t p = h.leaf_count();
  const auto internal = h.internal_indices();
  std::vector<std::size_t> slot(h.size(), 0);
  for (std::size_t k = 0; k < internal.size(); ++k) slot[internal[k]] = k;

  // LCA slot for every pair, computed once.
  std::vector<std::size_t> pair_slot(p * p, 0);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      pair_slot[i * p + j] = slot[h.lca_index(static_cast<int>(i), static_cast<int>(j))];
    }
  }

  // Constant pairs come from the root block first so that no node is emptied.
  std::vector<char> constant(p * p, 0);
  if (cfg.zero_variance_pairs > 0) {
    std::vector<std::pair<int, int>> root_pairs, other_pairs;
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        (internal[pair_slot[i * p + j]] == h.root() ? root_pairs : other_pairs)
            .emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
    Rng rng({cfg.seed, kPairTag});
    rng.shuffle(root_pairs);
    rng.shuffle(other_pairs);
    root_pairs.insert(root_pairs.end(), other_pairs.begin(), other_pairs.end());
    c.constant_pairs.assign(root_pairs.begin(), root_pairs.begin() + static_cast<std::ptrdiff_t>(cfg.zero_variance_pairs));
    std::sort(c.constant_pairs.begin(), c.constant_pairs.end());
    for (auto [i, j] : c.constant_pairs) constant[static_cast<std::size_t>(i) * p + static_cast<std::size_t>(j)] = 1;
  }

  const std::size_t n = cfg.n;
  c.adjacency.resize(n);
  c.latent = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(internal.size()));
  Eigen::MatrixXd traits = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cfg.traits));
  const double centering = 0.5 * cfg.latent_sd * cfg.latent_sd;

  parallel_for(n, threads, [&](std::size_t s) {
    Rng rng({cfg.seed, s, kSubjectTag});
    const auto row = static_cast<Eigen::Index>(s);
    for (std::size_t k = 0; k < internal.size(); ++k) c.latent(row, static_cast<Eigen::Index>(k)) = rng.normal();
    std::vector<double> rate(internal.size());
    for (std::size_t k = 0; k < internal.size(); ++k) {
      rate[k] = cfg.base_rate * std::exp(cfg.latent_sd * c.latent(row, static_cast<Eigen::Index>(k)) - centering);
    }
    AdjacencyMatrix a = zero_adjacency(p, subject_name(s));
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        if (constant[i * p + j]) continue;
        const auto v = static_cast<std::int64_t>(rng.negative_binomial(rate[pair_slot[i * p + j]], cfg.dispersion));
        a.counts[i * p + j] = v;
        a.counts[j * p + i] = v;
      }
    }
    c.adjacency[s] = std::move(a);
    for (std::size_t t = 0; t < cfg.traits; ++t) {
      traits(row, static_cast<Eigen::Index>(t)) = cfg.trait_noise_sd > 0.0 ? rng.normal(0.0, cfg.trait_noise_sd) : 0.0;
    }
    for (const auto& sig : cfg.signals) {
      traits(row, static_cast<Eigen::Index>(sig.trait)) +=
          sig.effect * c.latent(row, static_cast<Eigen::Index>(slot[h.index_of(sig.node_id)]));
    }
  });

  for (const auto& [t, frac] : cfg.missing) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    Rng rng({cfg.seed, t, kMissingTag});
    rng.shuffle(rows);
    rows.resize(static_cast<std::size_t>(std::llround(frac * static_cast<double>(n))));
    std::sort(rows.begin(), rows.end());
    for (auto r : rows) traits(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) = std::numeric_limits<double>::quiet_NaN();
    c.missing_rows.push_back(std::move(rows));
  }

  std::vector<std::string> ids(n), names(cfg.traits);
  for (std::size_t s = 0; s < n; ++s) ids[s] = subject_name(s);
  for (std::size_t t = 0; t < cfg.traits; ++t) names[t] = trait_name(t);
  c.traits = make_feature_matrix(std::move(traits), std::move(ids), std::move(names));
  return c;
}

std::string format_ground_truth(const Cohort& cohort, const SynthConfig& cfg) {
  const Hierarchy& h = *cohort.hierarchy;
  std::string out = "kind,target,trait,value\n";
  for (const auto& s : cfg.signals) {
    out += "signal," + csv::escape(h.node(h.index_of(s.node_id)).name) + "," + trait_name(s.trait) + "," + fmt(s.effect) + "\n";
  }
  for (std::size_t m = 0; m < cfg.missing.size(); ++m) {
    out += "missing,," + trait_name(cfg.missing[m].first) + "," + std::to_string(cohort.missing_rows[m].size()) + "\n";
  }
  for (const auto& [t, d] : cfg.desirability) {
    out += "desirability,," + trait_name(t) + "," +
           (d == viz::Desirability::desirable ? "desirable" : d == viz::Desirability::undesirable ? "undesirable" : "unknown") +
           "\n";
  }
  for (auto [i, j] : cohort.constant_pairs) {
    out += "constant_pair,ROI_" + std::to_string(i) + "-ROI_" + std::to_string(j) + ",,0\n";
  }
  return out;
}

void write_cohort(const Cohort& cohort, const SynthConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "adj", ec);
  if (ec) throw IoError("cannot create directory '" + out_dir + "': " + ec.message());
  std::string manifest = "subject_id,adjacency_path\n";
  for (const auto& a : cohort.adjacency) {
    const std::string rel = "adj/" + a.subject_id + ".csv";
    csv::write_file((fs::path(out_dir) / rel).string(), format_adjacency(a));
    manifest += a.subject_id + "," + rel + "\n";
  }
  csv::write_file((fs::path(out_dir) / "manifest.csv").string(), manifest);
  csv::write_file((fs::path(out_dir) / "traits.csv").string(), format_table(cohort.traits));
  csv::write_file((fs::path(out_dir) / "ground_truth.csv").string(), format_ground_truth(cohort, cfg));
  csv::write_file((fs::path(out_dir) / "hierarchy.csv").string(), cohort.hierarchy->serialize());
  csv::write_file((fs::path(out_dir) / "config.csv").string(), format_config(cfg));
}

}  // namespace ctree::synth
