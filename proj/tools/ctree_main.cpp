// ctree command-line tool. Everything goes through the C API in libctree.

#include "ctree/ctree.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct CliError {
  int code;
  std::string message;
};

int exit_code(ctree_status s) {
  switch (s) {
    case CTREE_OK: return 0;
    case CTREE_ERR_COMPUTATION: return 2;
    default: return 1;
  }
}

void check(ctree_status s) {
  if (s != CTREE_OK) throw CliError{exit_code(s), std::string(ctree_status_name(s)) + ": " + ctree_last_error()};
}

void require_file(const std::string& path, const char* what) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw CliError{1, std::string(what) + " '" + path + "' does not exist or is not a file"};
}

void require_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw CliError{1, "cannot create directory '" + parent.string() + "': " + ec.message()};
}

// FNV-1a over the file bytes; identifies inputs in the run manifest.
std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

struct Run {
  std::string command;
  std::vector<std::string> argv;
  int threads = 1;
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<std::string, std::string>> inputs;  // role, path
  std::vector<std::string> outputs;
  json parameters = json::object();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void input(const std::string& role, const std::string& path) {
    require_file(path, role.c_str());
    inputs.emplace_back(role, path);
  }

  // Manifest lands next to the output: <file>.manifest.json or <dir>/run_manifest.json.
  void write_manifest(const std::string& anchor, bool is_dir) {
    json m;
    m["tool"] = "ctree";
    m["version"] = ctree_version();
    m["command"] = command;
    m["argv"] = argv;
    m["threads"] = threads;
    if (seed) m["seed"] = *seed;
    m["parameters"] = parameters;
    json in = json::array();
    for (const auto& [role, path] : inputs) {
      in.push_back({{"role", role}, {"path", path}, {"bytes", fs::file_size(path)}, {"fnv1a64", file_digest(path)}});
    }
    m["inputs"] = in;
    m["outputs"] = outputs;
    m["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto path = is_dir ? (fs::path(anchor) / "run_manifest.json").string() : anchor + ".manifest.json";
    std::ofstream out(path);
    out << m.dump(2) << "\n";
    if (!out) throw CliError{1, "cannot write manifest '" + path + "'"};
  }
};

const char* opt_c(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

int default_threads() {
  if (const char* env = std::getenv("CTREE_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t >= 1) return t;
    } catch (const std::exception&) {
    }
    std::cerr << "ctree: ignoring invalid CTREE_THREADS='" << env << "'\n";
  }
  const auto hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-resolution tree representation of structural connectomes"};
  app.set_version_flag("--version", std::string(ctree_version()));
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: CTREE_THREADS or all cores)")->check(CLI::PositiveNumber);

  Run run;
  for (int i = 0; i < argc; ++i) run.argv.emplace_back(argv[i]);

  // synth
  std::string synth_config, synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  synth->add_option("--config", synth_config, "key,value config CSV")->required();
  synth->add_option("--out-dir", synth_out, "Output directory")->required();

  // build
  std::string build_h, build_matrix, build_manifest, build_out, build_features;
  auto* build = app.add_subcommand("build", "Build tree representations");
  build->add_option("-H,--hierarchy", build_h, "Hierarchy CSV (default: bundled DK)");
  auto* bm = build->add_option("-A,--matrix", build_matrix, "Adjacency matrix CSV");
  auto* bmf = build->add_option("-m,--manifest", build_manifest, "Cohort manifest CSV");
  bm->excludes(bmf);
  build->add_option("-o,--out", build_out, "Tree CSV")->required();
  build->add_option("--features", build_features, "Also write internal-node features (manifest mode)")->needs(bmf);

  // verify-theorem
  std::string vt_h, vt_matrix, vt_out;
  std::size_t vt_budget = 100000;
  auto* vt = app.add_subcommand("verify-theorem", "Check corank = node weight with the exact homology oracle");
  vt->add_option("--hierarchy", vt_h, "Hierarchy CSV (default: bundled DK)");
  vt->add_option("--matrix", vt_matrix, "Adjacency matrix CSV")->required();
  vt->add_option("--out", vt_out, "Report CSV (default: stdout)");
  vt->add_option("--cell-budget", vt_budget, "Max one-cells per node complex")->check(CLI::PositiveNumber);

  // pca
  std::string pca_features, pca_manifest, pca_h, pca_out, pca_axes;
  std::size_t pca_k = 23;
  auto* pca = app.add_subcommand("pca", "Principal components of a feature table or of a cohort's adjacency matrices");
  auto* pf = pca->add_option("--features", pca_features, "Feature table CSV");
  auto* pm = pca->add_option("--manifest", pca_manifest, "Cohort manifest (vectorise, filter, standardise first)");
  pf->excludes(pm);
  pca->add_option("--hierarchy", pca_h, "Hierarchy CSV (manifest mode)");
  pca->add_option("-k,--components", pca_k, "Number of components")->check(CLI::PositiveNumber);
  pca->add_option("--out", pca_out, "Scores CSV")->required();
  pca->add_option("--axes", pca_axes, "Axes CSV (features mode)")->needs(pf);

  // cca
  std::string cca_features, cca_traits, cca_out;
  double cca_ridge = 1e-8;
  auto* cca = app.add_subcommand("cca", "Canonical correlation analysis with Wilks's test");
  cca->add_option("--features", cca_features, "Feature table CSV")->required();
  cca->add_option("--traits", cca_traits, "Trait table CSV")->required();
  cca->add_option("--ridge", cca_ridge, "Covariance ridge")->check(CLI::NonNegativeNumber);
  cca->add_option("--out", cca_out, "Model CSV")->required();

  // cv
  std::string cv_tree, cv_pca, cv_traits, cv_out, cv_regressors = "baseline,linear,gp";
  int cv_folds = 5, cv_repeats = 10;
  std::uint64_t cv_seed = 0;
  auto* cv = app.add_subcommand("cv", "Repeated k-fold prediction of traits");
  cv->add_option("--features-tree", cv_tree, "Tree feature table")->required();
  cv->add_option("--features-pca", cv_pca, "AM principal-component table")->required();
  cv->add_option("--traits", cv_traits, "Trait table")->required();
  cv->add_option("--folds", cv_folds)->check(CLI::Range(2, 1000000));
  cv->add_option("--repeats", cv_repeats)->check(CLI::Range(1, 1000000));
  cv->add_option("--seed", cv_seed);
  cv->add_option("--regressors", cv_regressors, "Comma-separated: baseline,linear,ridge,gp");
  cv->add_option("--out", cv_out, "Report CSV")->required();

  // bma
  std::string bma_features, bma_traits, bma_trait, bma_out;
  double bma_threshold = 0.75;
  std::size_t bma_draws = 10000;
  std::uint64_t bma_seed = 0;
  auto* bma = app.add_subcommand("bma", "Bayesian model averaging over all feature subsets");
  bma->add_option("--features", bma_features, "Feature table (at most 25 columns)")->required();
  bma->add_option("--traits", bma_traits, "Trait table")->required();
  bma->add_option("--trait", bma_trait, "Trait column")->required();
  bma->add_option("--threshold", bma_threshold, "Inclusion threshold")->check(CLI::Range(0.0, 1.0));
  bma->add_option("--draws", bma_draws, "Posterior draws for intervals");
  bma->add_option("--seed", bma_seed);
  bma->add_option("--out", bma_out, "Result CSV")->required();

  // plot
  std::string plot_kind, plot_in, plot_out, plot_h, plot_subject, plot_compare, plot_compare_subject, plot_desirability;
  bool plot_leaves = false;
  auto* plot = app.add_subcommand("plot", "Render SVG figures");
  plot->add_option("kind", plot_kind, "chord | tree | cca")->required()->check(CLI::IsMember({"chord", "tree", "cca"}));
  plot->add_option("--in", plot_in, "Tree CSV (chord, tree) or CCA model CSV (cca)")->required();
  plot->add_option("--out", plot_out, "SVG file")->required();
  plot->add_option("--hierarchy", plot_h, "Hierarchy CSV (default: bundled DK)");
  plot->add_option("--subject", plot_subject, "Subject to draw (default: cohort mean)");
  plot->add_option("--compare", plot_compare, "Second tree CSV for percent differences (tree)");
  plot->add_option("--compare-subject", plot_compare_subject, "Subject in the comparison file (default: mean)");
  plot->add_flag("--leaves", plot_leaves, "Draw leaf nodes (tree)");
  plot->add_option("--desirability", plot_desirability, "trait,desirability CSV (cca)");

  // pipeline
  std::string pl_config, pl_h, pl_manifest, pl_traits, pl_desirability, pl_out, pl_regressors = "baseline,linear,ridge",
                                                                                  pl_bma;
  ctree_pipeline_options pl_opts;
  ctree_pipeline_options_default(&pl_opts);
  auto* pl = app.add_subcommand("pipeline", "Trees, PCA, CCA, CV, BMA and figures in one run");
  auto* plc = pl->add_option("--synth-config", pl_config, "Synthetic cohort config");
  auto* plm = pl->add_option("--manifest", pl_manifest, "Cohort manifest (data mode)");
  plc->excludes(plm);
  pl->add_option("--traits", pl_traits, "Trait table (data mode)")->needs(plm);
  pl->add_option("--hierarchy", pl_h, "Hierarchy CSV (data mode, default: bundled DK)");
  pl->add_option("--desirability", pl_desirability, "trait,desirability CSV (data mode)");
  pl->add_option("--out-dir", pl_out, "Output directory")->required();
  pl->add_option("-k,--components", pl_opts.components)->check(CLI::PositiveNumber);
  pl->add_option("--folds", pl_opts.folds)->check(CLI::Range(2, 1000000));
  pl->add_option("--repeats", pl_opts.repeats)->check(CLI::Range(1, 1000000));
  pl->add_option("--seed", pl_opts.seed);
  pl->add_option("--regressors", pl_regressors, "Comma-separated regressors");
  pl->add_option("--bma-traits", pl_bma, "Comma-separated traits for BMA (default: planted traits)");
  pl->add_option("--draws", pl_opts.bma_draws);
  pl->add_option("--threshold", pl_opts.bma_threshold)->check(CLI::Range(0.0, 1.0));
  pl->add_option("--top", pl_opts.top_connections, "Connections to list after back-projection");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  run.threads = threads > 0 ? threads : default_threads();
  const int nt = run.threads;

  try {
    if (*synth) {
      run.command = "synth";
      run.input("config", synth_config);
      check(ctree_synth_file(synth_config.c_str(), synth_out.c_str(), nt));
      run.outputs = {"manifest.csv", "adj/", "traits.csv", "ground_truth.csv", "hierarchy.csv", "config.csv"};
      run.write_manifest(synth_out, true);
    } else if (*build) {
      run.command = "build";
      if (!build_h.empty()) run.input("hierarchy", build_h);
      require_parent(build_out);
      if (!build_matrix.empty()) {
        run.input("matrix", build_matrix);
        ctree_hierarchy* h = nullptr;
        ctree_adjacency* a = nullptr;
        ctree_tree* t = nullptr;
        char* csv = nullptr;
        ctree_status s = build_h.empty() ? ctree_hierarchy_default(&h) : ctree_hierarchy_load(build_h.c_str(), &h);
        if (s == CTREE_OK) s = ctree_adjacency_load(build_matrix.c_str(), nullptr, &a);
        if (s == CTREE_OK) s = ctree_tree_build(h, a, &t);
        if (s == CTREE_OK) s = ctree_tree_to_csv(t, &csv);
        if (s == CTREE_OK) {
          std::ofstream out(build_out, std::ios::binary);
          out << csv;
          if (!out) s = CTREE_ERR_IO;
        }
        const std::string err = ctree_last_error();
        ctree_string_free(csv);
        ctree_tree_free(t);
        ctree_adjacency_free(a);
        ctree_hierarchy_free(h);
        if (s == CTREE_ERR_IO && err.empty()) throw CliError{1, "cannot write '" + build_out + "'"};
        check(s);
      } else if (!build_manifest.empty()) {
        run.input("manifest", build_manifest);
        check(ctree_build_cohort_trees(opt_c(build_h), build_manifest.c_str(), nt, build_out.c_str()));
        if (!build_features.empty()) {
          require_parent(build_features);
          check(ctree_cohort_features(opt_c(build_h), build_manifest.c_str(), "tree", 0, nt, build_features.c_str()));
          run.outputs.push_back(build_features);
        }
      } else {
        throw CliError{1, "build needs --matrix or --manifest"};
      }
      run.outputs.insert(run.outputs.begin(), build_out);
      run.write_manifest(build_out, false);
    } else if (*vt) {
      run.command = "verify-theorem";
      if (!vt_h.empty()) run.input("hierarchy", vt_h);
      run.input("matrix", vt_matrix);
      run.parameters["cell_budget"] = vt_budget;
      ctree_hierarchy* h = nullptr;
      ctree_adjacency* a = nullptr;
      char* report = nullptr;
      int pass = 0;
      ctree_status s = vt_h.empty() ? ctree_hierarchy_default(&h) : ctree_hierarchy_load(vt_h.c_str(), &h);
      if (s == CTREE_OK) s = ctree_adjacency_load(vt_matrix.c_str(), nullptr, &a);
      if (s == CTREE_OK) s = ctree_verify_theorem(h, a, vt_budget, nt, &pass, &report);
      std::string text = report ? report : "";
      const std::string err = ctree_last_error();
      ctree_string_free(report);
      ctree_adjacency_free(a);
      ctree_hierarchy_free(h);
      if (s != CTREE_OK) throw CliError{exit_code(s), std::string(ctree_status_name(s)) + ": " + err};
      if (vt_out.empty()) {
        std::cout << text;
      } else {
        require_parent(vt_out);
        std::ofstream out(vt_out, std::ios::binary);
        out << text;
        if (!out) throw CliError{1, "cannot write '" + vt_out + "'"};
        run.outputs.push_back(vt_out);
        run.parameters["all_pass"] = pass == 1;
        run.write_manifest(vt_out, false);
      }
      if (!pass) {
        std::cerr << "ctree: corank differs from node weight for at least one node\n";
        return 2;
      }
    } else if (*pca) {
      run.command = "pca";
      run.parameters["components"] = pca_k;
      require_parent(pca_out);
      if (!pca_features.empty()) {
        run.input("features", pca_features);
        if (!pca_axes.empty()) require_parent(pca_axes);
        check(ctree_pca_file(pca_features.c_str(), pca_k, pca_out.c_str(), opt_c(pca_axes)));
        if (!pca_axes.empty()) run.outputs.push_back(pca_axes);
      } else if (!pca_manifest.empty()) {
        run.input("manifest", pca_manifest);
        if (!pca_h.empty()) run.input("hierarchy", pca_h);
        check(ctree_cohort_features(opt_c(pca_h), pca_manifest.c_str(), "pca", pca_k, nt, pca_out.c_str()));
      } else {
        throw CliError{1, "pca needs --features or --manifest"};
      }
      run.outputs.insert(run.outputs.begin(), pca_out);
      run.write_manifest(pca_out, false);
    } else if (*cca) {
      run.command = "cca";
      run.input("features", cca_features);
      run.input("traits", cca_traits);
      run.parameters["ridge"] = cca_ridge;
      require_parent(cca_out);
      check(ctree_cca_file(cca_features.c_str(), cca_traits.c_str(), cca_ridge, cca_out.c_str()));
      run.outputs.push_back(cca_out);
      run.write_manifest(cca_out, false);
    } else if (*cv) {
      run.command = "cv";
      run.input("features_tree", cv_tree);
      run.input("features_pca", cv_pca);
      run.input("traits", cv_traits);
      run.seed = cv_seed;
      run.parameters["folds"] = cv_folds;
      run.parameters["repeats"] = cv_repeats;
      run.parameters["regressors"] = cv_regressors;
      require_parent(cv_out);
      ctree_cv_options o;
      ctree_cv_options_default(&o);
      o.folds = cv_folds;
      o.repeats = cv_repeats;
      o.seed = cv_seed;
      o.regressors = cv_regressors.c_str();
      o.threads = nt;
      const char* paths[] = {cv_tree.c_str(), cv_pca.c_str()};
      const char* names[] = {"tree", "am_pca"};
      check(ctree_cv_file(paths, names, 2, cv_traits.c_str(), &o, cv_out.c_str()));
      run.outputs.push_back(cv_out);
      run.write_manifest(cv_out, false);
    } else if (*bma) {
      run.command = "bma";
      run.input("features", bma_features);
      run.input("traits", bma_traits);
      run.seed = bma_seed;
      run.parameters["trait"] = bma_trait;
      run.parameters["threshold"] = bma_threshold;
      run.parameters["draws"] = bma_draws;
      require_parent(bma_out);
      ctree_bma_options o;
      ctree_bma_options_default(&o);
      o.draws = bma_draws;
      o.seed = bma_seed;
      o.threads = nt;
      check(ctree_bma_file(bma_features.c_str(), bma_traits.c_str(), bma_trait.c_str(), bma_threshold, &o,
                           bma_out.c_str()));
      run.outputs.push_back(bma_out);
      run.write_manifest(bma_out, false);
    } else if (*plot) {
      run.command = "plot " + plot_kind;
      run.input("in", plot_in);
      if (!plot_h.empty()) run.input("hierarchy", plot_h);
      require_parent(plot_out);
      if (plot_kind == "chord") {
        check(ctree_plot_chord_file(opt_c(plot_h), plot_in.c_str(), opt_c(plot_subject), plot_out.c_str()));
      } else if (plot_kind == "tree") {
        if (!plot_compare.empty()) run.input("compare", plot_compare);
        check(ctree_plot_tree_file(opt_c(plot_h), plot_in.c_str(), opt_c(plot_subject), opt_c(plot_compare),
                                   opt_c(plot_compare_subject), plot_leaves ? 1 : 0, plot_out.c_str()));
      } else {
        if (!plot_desirability.empty()) run.input("desirability", plot_desirability);
        check(ctree_plot_cca_file(plot_in.c_str(), opt_c(plot_desirability), plot_out.c_str()));
      }
      run.outputs.push_back(plot_out);
      run.write_manifest(plot_out, false);
    } else if (*pl) {
      run.command = "pipeline";
      pl_opts.threads = nt;
      pl_opts.regressors = pl_regressors.c_str();
      pl_opts.bma_traits = opt_c(pl_bma);
      run.seed = pl_opts.seed;
      run.parameters["components"] = pl_opts.components;
      run.parameters["folds"] = pl_opts.folds;
      run.parameters["repeats"] = pl_opts.repeats;
      run.parameters["regressors"] = pl_regressors;
      run.parameters["bma_traits"] = pl_bma;
      run.parameters["draws"] = pl_opts.bma_draws;
      run.parameters["threshold"] = pl_opts.bma_threshold;
      if (!pl_config.empty()) {
        run.input("synth_config", pl_config);
        check(ctree_pipeline_synth(pl_config.c_str(), &pl_opts, pl_out.c_str()));
      } else if (!pl_manifest.empty()) {
        run.input("manifest", pl_manifest);
        if (pl_traits.empty()) throw CliError{1, "pipeline data mode needs --traits"};
        run.input("traits", pl_traits);
        if (!pl_h.empty()) run.input("hierarchy", pl_h);
        if (!pl_desirability.empty()) run.input("desirability", pl_desirability);
        check(ctree_pipeline_data(opt_c(pl_h), pl_manifest.c_str(), pl_traits.c_str(), opt_c(pl_desirability),
                                  &pl_opts, pl_out.c_str()));
      } else {
        throw CliError{1, "pipeline needs --synth-config or --manifest"};
      }
      for (const auto& e : fs::directory_iterator(pl_out)) {
        if (e.is_regular_file() && e.path().filename() != "run_manifest.json") {
          run.outputs.push_back(e.path().filename().string());
        }
      }
      std::sort(run.outputs.begin(), run.outputs.end());
      run.write_manifest(pl_out, true);
    }
  } catch (const CliError& e) {
    std::cerr << "ctree: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "ctree: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
