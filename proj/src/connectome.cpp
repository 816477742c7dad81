#include "ctree/connectome.hpp"

#include "ctree/csv.hpp"
#include "ctree/errors.hpp"
#include "ctree/parallel.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace ctree {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename T>
BasicAdjacency<T> parse_adjacency(std::string_view text, std::string subject_id) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw ValidationError("adjacency: empty file");
  const std::size_t p = rows.front().fields.size();
  if (rows.size() - 1 != p) {
    throw ValidationError("adjacency: header names " + std::to_string(p) + " ROIs but found " +
                          std::to_string(rows.size() - 1) + " data rows");
  }
  BasicAdjacency<T> a;
  a.p = p;
  a.subject_id = std::move(subject_id);
  a.counts.resize(p * p);
  for (std::size_t i = 0; i < p; ++i) {
    const auto& row = rows[i + 1];
    if (row.fields.size() != p) {
      throw ValidationError("adjacency line " + std::to_string(row.line) + ": ragged row with " +
                            std::to_string(row.fields.size()) + " fields, expected " + std::to_string(p));
    }
    for (std::size_t j = 0; j < p; ++j) {
      T v;
      if constexpr (std::is_integral_v<T>) {
        v = csv::parse_int(row.fields[j], row.line);
      } else {
        v = csv::parse_double(row.fields[j], row.line);
        if (!std::isfinite(v)) {
          throw ValidationError("adjacency line " + std::to_string(row.line) + ": non-finite entry");
        }
      }
      if (v < 0) {
        throw ValidationError("adjacency line " + std::to_string(row.line) + ": negative entry at column " +
                              std::to_string(j));
      }
      a.at(i, j) = v;
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      if (a.at(i, j) != a.at(j, i)) {
        throw ValidationError("adjacency: asymmetric entries (" + std::to_string(i) + "," + std::to_string(j) +
                              ") != (" + std::to_string(j) + "," + std::to_string(i) + ")");
      }
    }
  }
  return a;
}

std::vector<std::size_t> mask_positions(const std::vector<bool>& mask) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(i);
  }
  return out;
}

}  // namespace

AdjacencyMatrix zero_adjacency(std::size_t p, std::string subject_id) {
  AdjacencyMatrix a;
  a.p = p;
  a.counts.assign(p * p, 0);
  a.subject_id = std::move(subject_id);
  return a;
}

AdjacencyMatrix load_adjacency(std::string_view text, std::string subject_id) {
  return parse_adjacency<std::int64_t>(text, std::move(subject_id));
}

WeightedAdjacency load_weighted_adjacency(std::string_view text, std::string subject_id) {
  return parse_adjacency<double>(text, std::move(subject_id));
}

AdjacencyMatrix read_adjacency(const std::string& path, std::string subject_id) {
  if (subject_id.empty()) subject_id = std::filesystem::path(path).stem().string();
  try {
    return load_adjacency(csv::read_file(path), std::move(subject_id));
  } catch (const IoError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string format_adjacency(const AdjacencyMatrix& a, std::span<const std::string> names) {
  std::string out;
  out.reserve(a.p * a.p * 4);
  for (std::size_t i = 0; i < a.p; ++i) {
    if (i) out += ',';
    out += names.empty() ? "ROI_" + std::to_string(i) : csv::escape(names[i]);
  }
  out += '\n';
  for (std::size_t i = 0; i < a.p; ++i) {
    for (std::size_t j = 0; j < a.p; ++j) {
      if (j) out += ',';
      out += std::to_string(a.at(i, j));
    }
    out += '\n';
  }
  return out;
}

std::ptrdiff_t FeatureMatrix::column_index(std::string_view label) const {
  for (std::size_t j = 0; j < column_labels.size(); ++j) {
    if (column_labels[j] == label) return static_cast<std::ptrdiff_t>(j);
  }
  return -1;
}

FeatureMatrix make_feature_matrix(Eigen::MatrixXd values, std::vector<std::string> row_ids,
                                  std::vector<std::string> column_labels) {
  if (static_cast<std::size_t>(values.rows()) != row_ids.size() ||
      static_cast<std::size_t>(values.cols()) != column_labels.size()) {
    throw ValidationError("feature matrix: labels do not match value dimensions");
  }
  FeatureMatrix f;
  f.values = std::move(values);
  f.row_ids = std::move(row_ids);
  f.column_labels = std::move(column_labels);
  f.column_mask.assign(f.column_labels.size(), true);
  return f;
}

FeatureMatrix vectorize_upper(std::span<const AdjacencyMatrix> cohort) {
  if (cohort.empty()) throw ValidationError("vectorize_upper: empty cohort");
  const std::size_t p = cohort.front().p;
  for (const auto& a : cohort) {
    if (a.p != p) {
      throw ValidationError("vectorize_upper: subject '" + a.subject_id + "' has p=" + std::to_string(a.p) +
                            ", expected " + std::to_string(p));
    }
  }
  const std::size_t d = p * (p - 1) / 2;
  Eigen::MatrixXd values(cohort.size(), d);
  std::vector<std::string> labels;
  labels.reserve(d);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) labels.push_back("ROI_" + std::to_string(i) + "-ROI_" + std::to_string(j));
  }
  std::vector<std::string> ids;
  for (std::size_t s = 0; s < cohort.size(); ++s) {
    std::size_t col = 0;
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) values(s, col++) = static_cast<double>(cohort[s].at(i, j));
    }
    ids.push_back(cohort[s].subject_id);
  }
  return make_feature_matrix(std::move(values), std::move(ids), std::move(labels));
}

FeatureMatrix select_columns(const FeatureMatrix& x, std::span<const std::size_t> columns) {
  FeatureMatrix out;
  out.values.resize(x.values.rows(), static_cast<Eigen::Index>(columns.size()));
  const auto positions = mask_positions(x.column_mask);
  out.column_mask.assign(x.column_mask.size(), false);
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const auto c = columns[k];
    out.values.col(static_cast<Eigen::Index>(k)) = x.values.col(static_cast<Eigen::Index>(c));
    out.column_labels.push_back(x.column_labels[c]);
    if (c < positions.size()) out.column_mask[positions[c]] = true;
  }
  out.row_ids = x.row_ids;
  return out;
}

FeatureMatrix select_rows(const FeatureMatrix& x, std::span<const std::size_t> rows) {
  FeatureMatrix out;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), x.values.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.values.row(static_cast<Eigen::Index>(k)) = x.values.row(static_cast<Eigen::Index>(rows[k]));
    out.row_ids.push_back(x.row_ids[rows[k]]);
  }
  out.column_labels = x.column_labels;
  out.column_mask = x.column_mask;
  return out;
}

FeatureMatrix filter_zero_variance(const FeatureMatrix& x) {
  if (x.n() < 2) throw ValidationError("filter_zero_variance: need at least 2 subjects");
  std::vector<std::size_t> keep;
  for (Eigen::Index j = 0; j < x.values.cols(); ++j) {
    const double first = x.values(0, j);
    bool varies = false;
    for (Eigen::Index i = 1; i < x.values.rows() && !varies; ++i) varies = x.values(i, j) != first;
    if (varies) keep.push_back(static_cast<std::size_t>(j));
  }
  return select_columns(x, keep);
}

FeatureMatrix standardize(const FeatureMatrix& x) {
  if (x.n() < 2) throw ValidationError("standardize: need at least 2 subjects");
  FeatureMatrix out = x;
  const double n = static_cast<double>(x.n());
  for (Eigen::Index j = 0; j < x.values.cols(); ++j) {
    auto col = out.values.col(j);
    if (col.hasNaN()) throw ValidationError("standardize: column '" + x.column_labels[j] + "' has missing values");
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / (n - 1.0);
    if (!(var > 0.0)) throw ValidationError("standardize: column '" + x.column_labels[j] + "' has zero variance");
    col = (col.array() - mean) / std::sqrt(var);
  }
  return out;
}

FeatureMatrix impute_mean(const FeatureMatrix& y) {
  FeatureMatrix out = y;
  for (Eigen::Index j = 0; j < y.values.cols(); ++j) {
    auto col = out.values.col(j);
    double sum = 0.0;
    std::size_t observed = 0;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (!std::isnan(col(i))) {
        sum += col(i);
        ++observed;
      }
    }
    if (observed == 0) throw ValidationError("impute_mean: column '" + y.column_labels[j] + "' is entirely missing");
    const double mean = sum / static_cast<double>(observed);
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (std::isnan(col(i))) col(i) = mean;
    }
  }
  return out;
}

FeatureMatrix drop_sparse_traits(const FeatureMatrix& y, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("drop_sparse_traits: threshold must be in (0,1)");
  std::vector<std::size_t> keep;
  for (Eigen::Index j = 0; j < y.values.cols(); ++j) {
    const auto missing = static_cast<double>(y.values.col(j).array().isNaN().count());
    if (missing / static_cast<double>(y.n()) <= threshold) keep.push_back(static_cast<std::size_t>(j));
  }
  return select_columns(y, keep);
}

void align_rows(FeatureMatrix& a, FeatureMatrix& b) {
  std::unordered_map<std::string, std::size_t> b_index;
  for (std::size_t i = 0; i < b.row_ids.size(); ++i) b_index.emplace(b.row_ids[i], i);
  std::vector<std::size_t> rows_a;
  std::vector<std::size_t> rows_b;
  for (std::size_t i = 0; i < a.row_ids.size(); ++i) {
    auto it = b_index.find(a.row_ids[i]);
    if (it != b_index.end()) {
      rows_a.push_back(i);
      rows_b.push_back(it->second);
    }
  }
  if (rows_a.empty()) throw ValidationError("align_rows: tables share no subject ids");
  a = select_rows(a, rows_a);
  b = select_rows(b, rows_b);
}

FeatureMatrix parse_table(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw ValidationError("table: empty file");
  const auto& header = rows.front().fields;
  if (header.empty() || header.front() != "subject_id") {
    throw ValidationError("table line " + std::to_string(rows.front().line) + ": header must start with subject_id");
  }
  const std::size_t d = header.size() - 1;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(d));
  std::vector<std::string> ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != header.size()) {
      throw ValidationError("table line " + std::to_string(row.line) + ": expected " +
                            std::to_string(header.size()) + " fields, got " + std::to_string(row.fields.size()));
    }
    ids.push_back(row.fields[0]);
    for (std::size_t j = 0; j < d; ++j) {
      const auto& f = row.fields[j + 1];
      values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j)) =
          csv::is_missing_token(f) ? kNaN : csv::parse_double(f, row.line);
    }
  }
  std::vector<std::string> labels(header.begin() + 1, header.end());
  for (std::size_t a = 0; a < labels.size(); ++a) {
    for (std::size_t b = a + 1; b < labels.size(); ++b) {
      if (labels[a] == labels[b]) throw ValidationError("table: duplicate column '" + labels[a] + "'");
    }
  }
  return make_feature_matrix(std::move(values), std::move(ids), std::move(labels));
}

FeatureMatrix read_table(const std::string& path) {
  try {
    return parse_table(csv::read_file(path));
  } catch (const IoError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string format_table(const FeatureMatrix& x) {
  std::string out = "subject_id";
  for (const auto& l : x.column_labels) {
    out += ',';
    out += csv::escape(l);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < x.values.rows(); ++i) {
    out += csv::escape(x.row_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < x.values.cols(); ++j) {
      out += ',';
      out += csv::format_double(x.values(i, j));
    }
    out += '\n';
  }
  return out;
}

std::vector<ManifestEntry> parse_manifest(std::string_view text, const std::string& base_dir) {
  const auto rows = csv::parse(text);
  if (rows.empty() || rows.front().fields != std::vector<std::string>{"subject_id", "adjacency_path"}) {
    throw ValidationError("manifest: expected header 'subject_id,adjacency_path'");
  }
  std::vector<ManifestEntry> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != 2 || row.fields[0].empty() || row.fields[1].empty()) {
      throw ValidationError("manifest line " + std::to_string(row.line) + ": expected subject_id,adjacency_path");
    }
    std::filesystem::path path(row.fields[1]);
    if (path.is_relative() && !base_dir.empty()) path = std::filesystem::path(base_dir) / path;
    out.push_back({row.fields[0], path.string()});
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  return parse_manifest(csv::read_file(path), std::filesystem::path(path).parent_path().string());
}

std::vector<AdjacencyMatrix> load_cohort(std::span<const ManifestEntry> manifest, int threads) {
  std::vector<AdjacencyMatrix> out(manifest.size());
  parallel_for(manifest.size(), threads, [&](std::size_t i) {
    out[i] = read_adjacency(manifest[i].adjacency_path, manifest[i].subject_id);
  });
  return out;
}

}  // namespace ctree
