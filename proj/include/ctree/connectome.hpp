#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctree {

// Symmetric p x p connectivity matrix. The integer instantiation holds fiber
// counts; the real-valued one is for weighted connectivity.
template <typename T>
struct BasicAdjacency {
  std::size_t p = 0;
  std::vector<T> counts;  // row-major p * p
  std::string subject_id;

  T at(std::size_t i, std::size_t j) const { return counts[i * p + j]; }
  T& at(std::size_t i, std::size_t j) { return counts[i * p + j]; }
};

using AdjacencyMatrix = BasicAdjacency<std::int64_t>;
using WeightedAdjacency = BasicAdjacency<double>;

AdjacencyMatrix zero_adjacency(std::size_t p, std::string subject_id = {});

AdjacencyMatrix load_adjacency(std::string_view text, std::string subject_id = {});
WeightedAdjacency load_weighted_adjacency(std::string_view text, std::string subject_id = {});
AdjacencyMatrix read_adjacency(const std::string& path, std::string subject_id = {});
// Header of ROI names (ROI_0..ROI_{p-1} when names is empty), then p rows.
std::string format_adjacency(const AdjacencyMatrix& a, std::span<const std::string> names = {});

// Subjects x features table. Missing cells are NaN.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> row_ids;
  std::vector<std::string> column_labels;
  std::vector<bool> column_mask;  // retained columns over the original feature space

  std::size_t n() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(values.cols()); }
  std::ptrdiff_t column_index(std::string_view label) const;
};

FeatureMatrix make_feature_matrix(Eigen::MatrixXd values, std::vector<std::string> row_ids,
                                  std::vector<std::string> column_labels);

// Upper triangle (i < j), row-major, labels "ROI_i-ROI_j".
FeatureMatrix vectorize_upper(std::span<const AdjacencyMatrix> cohort);
FeatureMatrix filter_zero_variance(const FeatureMatrix& x);
// Column-wise z-scores with the n-1 denominator.
FeatureMatrix standardize(const FeatureMatrix& x);
FeatureMatrix impute_mean(const FeatureMatrix& y);
// Removes columns whose missing fraction is strictly above threshold.
FeatureMatrix drop_sparse_traits(const FeatureMatrix& y, double threshold = 0.10);

FeatureMatrix select_columns(const FeatureMatrix& x, std::span<const std::size_t> columns);
FeatureMatrix select_rows(const FeatureMatrix& x, std::span<const std::size_t> rows);
// Restricts both tables to their common subject ids, in the order of a.
void align_rows(FeatureMatrix& a, FeatureMatrix& b);

// Table CSV: header `subject_id,<labels...>`, empty cell or NA = missing.
FeatureMatrix parse_table(std::string_view text);
FeatureMatrix read_table(const std::string& path);
std::string format_table(const FeatureMatrix& x);

struct ManifestEntry {
  std::string subject_id;
  std::string adjacency_path;
};

// Cohort manifest CSV `subject_id,adjacency_path`; relative paths resolve
// against base_dir.
std::vector<ManifestEntry> parse_manifest(std::string_view text, const std::string& base_dir);
std::vector<ManifestEntry> read_manifest(const std::string& path);
std::vector<AdjacencyMatrix> load_cohort(std::span<const ManifestEntry> manifest, int threads = 1);

}  // namespace ctree
