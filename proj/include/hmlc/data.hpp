#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hmlc/grid.hpp"
#include "hmlc/hierarchy.hpp"
#include "hmlc/labels.hpp"

namespace hmlc {

struct Dataset {
  Matrix features;                           // N x F
  LabelMatrix labels;                        // N x K
  std::vector<std::string> ids;              // N
  std::vector<std::string> metadata_columns; // non-label CSV columns, in file order
  Grid<std::string> metadata;                // N x metadata_columns.size()

  std::size_t rows() const noexcept { return ids.size(); }
  // Throws DataError if row counts disagree.
  void validate() const;
};

// Column that carries the row id in label CSVs (CheXpert convention).
inline constexpr std::string_view kIdColumn = "Path";

// Reads a CheXpert-style label CSV. Every tree label must be a column; all
// other columns are kept as metadata. Rows are identified by the Path column,
// or by their 0-based position when it is absent. Features are produced by
// featurize_metadata.
Dataset load_csv(const std::filesystem::path& path, const LabelTree& tree);
Dataset parse_label_csv(std::string_view text, const LabelTree& tree);
// Inverse of load_csv for labels and metadata (features are not written).
std::string format_label_csv(const Dataset& data, const LabelTree& tree);
void write_csv(const std::filesystem::path& path, const Dataset& data, const LabelTree& tree);

// Stand-in features for label files without image features: one-hot of Sex
// (Male, Female, other), Frontal/Lateral (Frontal, Lateral), AP/PA (AP, PA,
// other) plus Age/100 and a constant 1. Absent columns leave their block zero.
inline constexpr std::size_t kMetadataFeatureDim = 10;
Matrix featurize_metadata(const Dataset& data);

// Features CSV: header `id,f0,f1,...`.
std::string format_features_csv(const Matrix& features, std::span<const std::string> ids);
void write_features_csv(const std::filesystem::path& path, const Matrix& features,
                        std::span<const std::string> ids);
struct FeatureTable {
  std::vector<std::string> ids;
  Matrix features;
};
FeatureTable read_features_csv(const std::filesystem::path& path);
// Replaces data.features with the rows of the file matched by id.
void attach_features(Dataset& data, const std::filesystem::path& path);

// mask(i, k) is set iff every ancestor of k is POS in row i. Roots are
// always set; UNC or MISSING ancestors do not count as positive.
LossMask conditional_mask(const LabelMatrix& labels, const LabelTree& tree);

// Per-cell majority over an odd panel of annotators with binary labels.
// Every annotation matrix must have the same shape.
LabelMatrix majority_vote(std::span<const LabelMatrix> annotations);

// Maps MISSING to NEG; the alternative to masking blanks out.
LabelMatrix missing_as_negative(LabelMatrix labels);

struct SyntheticSpec {
  LabelTree tree;
  // P(node positive | parent positive); marginal for roots.
  std::vector<double> theta;
  double feature_noise = 0.5;
  std::size_t feature_dim = 16;
  // Seed of the label-to-feature projection. Shared between splits so that
  // train and held-out rows come from the same distribution.
  std::uint64_t projection_seed = 0;

  // Throws ConfigError naming the first offending node.
  void validate() const;
};

struct SyntheticSample {
  Dataset dataset;
  std::vector<double> true_marginals;
};

// F x K projection with standard normal entries.
Matrix projection_matrix(const SyntheticSpec& spec);

// Rows are drawn top-down through the hierarchy; features are W y + N(0, s^2).
SyntheticSample generate_synthetic(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed);

// Each non-MISSING label becomes UNC with probability `rate`, decided per
// (seed, row, column).
Dataset inject_uncertainty(Dataset data, double rate, std::uint64_t seed);

}  // namespace hmlc
