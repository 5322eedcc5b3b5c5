#include "hmlc/data.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "hmlc/csv.hpp"
#include "hmlc/error.hpp"
#include "hmlc/rng.hpp"

namespace hmlc {

void Dataset::validate() const {
  const std::size_t n = ids.size();
  if (features.rows() != n || labels.rows() != n || metadata.rows() != n) {
    throw DataError("dataset: row counts disagree (ids " + std::to_string(n) + ", features " +
                    std::to_string(features.rows()) + ", labels " + std::to_string(labels.rows()) +
                    ")");
  }
  if (metadata.cols() != metadata_columns.size()) {
    throw DataError("dataset: metadata width does not match its header");
  }
}

Dataset parse_label_csv(std::string_view text, const LabelTree& tree) {
  const csv::Table table = csv::parse(text);
  if (table.header.empty()) throw DataError("label csv: empty file");

  const std::size_t k = tree.size();
  std::vector<long> label_col(k);
  for (std::size_t j = 0; j < k; ++j) {
    label_col[j] = table.column(tree.node(j).id);
    if (label_col[j] < 0) throw DataError("label csv: missing label column '" + tree.node(j).id + "'");
  }
  std::vector<std::size_t> meta_cols;
  Dataset data;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (!tree.find(table.header[c])) {
      meta_cols.push_back(c);
      data.metadata_columns.push_back(table.header[c]);
    }
  }
  const long id_col = table.column(kIdColumn);

  const std::size_t n = table.rows.size();
  data.labels = LabelMatrix(n, k);
  data.metadata = Grid<std::string>(n, meta_cols.size());
  data.ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    for (std::size_t j = 0; j < k; ++j) {
      try {
        data.labels(i, j) = parse_label(row[label_col[j]]);
      } catch (const DataError& e) {
        throw DataError("label csv: row " + std::to_string(i + 2) + ", column '" + tree.node(j).id +
                        "': " + e.what());
      }
    }
    for (std::size_t m = 0; m < meta_cols.size(); ++m) data.metadata(i, m) = row[meta_cols[m]];
    data.ids.push_back(id_col >= 0 ? row[id_col] : std::to_string(i));
  }
  data.features = featurize_metadata(data);
  data.validate();
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const LabelTree& tree) {
  try {
    return parse_label_csv(csv::read_file(path), tree);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_label_csv(const Dataset& data, const LabelTree& tree) {
  data.validate();
  if (data.labels.cols() != tree.size()) throw DataError("label csv: label count differs from tree");
  csv::Row header = data.metadata_columns;
  const bool has_id = std::find(header.begin(), header.end(), kIdColumn) != header.end();
  if (!has_id) header.insert(header.begin(), std::string(kIdColumn));
  for (const auto& id : tree.ids()) header.push_back(id);

  std::string out = csv::join(header) + "\n";
  for (std::size_t i = 0; i < data.rows(); ++i) {
    csv::Row row;
    if (!has_id) row.push_back(data.ids[i]);
    for (std::size_t m = 0; m < data.metadata_columns.size(); ++m) row.push_back(data.metadata(i, m));
    for (std::size_t j = 0; j < tree.size(); ++j) row.emplace_back(format_label(data.labels(i, j)));
    out += csv::join(row) + "\n";
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& data, const LabelTree& tree) {
  csv::write_file(path, format_label_csv(data, tree));
}

Matrix featurize_metadata(const Dataset& data) {
  Matrix f(data.rows(), kMetadataFeatureDim, 0.0);
  auto col = [&](std::string_view name) -> long {
    for (std::size_t m = 0; m < data.metadata_columns.size(); ++m) {
      if (data.metadata_columns[m] == name) return static_cast<long>(m);
    }
    return -1;
  };
  const long sex = col("Sex");
  const long view = col("Frontal/Lateral");
  const long proj = col("AP/PA");
  const long age = col("Age");
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (sex >= 0) {
      const auto& v = data.metadata(i, sex);
      f(i, v == "Male" ? 0 : v == "Female" ? 1 : 2) = 1.0;
    }
    if (view >= 0) {
      const auto& v = data.metadata(i, view);
      if (v == "Frontal") f(i, 3) = 1.0;
      if (v == "Lateral") f(i, 4) = 1.0;
    }
    if (proj >= 0) {
      const auto& v = data.metadata(i, proj);
      f(i, v == "AP" ? 5 : v == "PA" ? 6 : 7) = 1.0;
    }
    double years = 0.0;
    if (age >= 0 && csv::parse_double(data.metadata(i, age), years)) f(i, 8) = years / 100.0;
    f(i, 9) = 1.0;
  }
  return f;
}

std::string format_features_csv(const Matrix& features, std::span<const std::string> ids) {
  if (features.rows() != ids.size()) throw DataError("features csv: id count differs from rows");
  csv::Row header{"id"};
  for (std::size_t c = 0; c < features.cols(); ++c) header.push_back("f" + std::to_string(c));
  std::string out = csv::join(header) + "\n";
  for (std::size_t i = 0; i < features.rows(); ++i) {
    out += csv::quote(ids[i]);
    for (double v : features.row(i)) {
      out.push_back(',');
      out += csv::format_double(v);
    }
    out.push_back('\n');
  }
  return out;
}

void write_features_csv(const std::filesystem::path& path, const Matrix& features,
                        std::span<const std::string> ids) {
  csv::write_file(path, format_features_csv(features, ids));
}

FeatureTable read_features_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  if (table.header.empty() || table.header[0] != "id") {
    throw DataError(path.string() + ": features csv must start with an 'id' column");
  }
  const std::size_t width = table.header.size() - 1;
  FeatureTable out;
  out.features = Matrix(table.rows.size(), width);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    out.ids.push_back(row[0]);
    for (std::size_t c = 0; c < width; ++c) {
      if (!csv::parse_double(row[c + 1], out.features(r, c)) || !std::isfinite(out.features(r, c))) {
        throw DataError(path.string() + ": bad feature value '" + row[c + 1] + "' for id '" + row[0] +
                        "'");
      }
    }
  }
  return out;
}

void attach_features(Dataset& data, const std::filesystem::path& path) {
  const FeatureTable table = read_features_csv(path);
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t r = 0; r < table.ids.size(); ++r) {
    if (!row_of.emplace(table.ids[r], r).second) {
      throw DataError(path.string() + ": duplicate id '" + table.ids[r] + "'");
    }
  }
  Matrix features(data.rows(), table.features.cols());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto it = row_of.find(data.ids[i]);
    if (it == row_of.end()) throw DataError(path.string() + ": no features for id '" + data.ids[i] + "'");
    const auto src = table.features.row(it->second);
    std::copy(src.begin(), src.end(), features.row(i).begin());
  }
  data.features = std::move(features);
}

LossMask conditional_mask(const LabelMatrix& labels, const LabelTree& tree) {
  if (labels.cols() != tree.size()) {
    throw DataError("conditional_mask: labels have " + std::to_string(labels.cols()) +
                    " columns, tree has " + std::to_string(tree.size()) + " labels");
  }
  LossMask mask(labels.rows(), labels.cols(), 0);
  for (std::size_t i = 0; i < labels.rows(); ++i) {
    for (std::size_t k = 0; k < labels.cols(); ++k) {
      const auto path = tree.ancestor_indices(k);
      mask(i, k) = std::all_of(path.begin(), path.end(),
                               [&](std::size_t a) { return labels(i, a) == Label::kPos; });
    }
  }
  return mask;
}

LabelMatrix majority_vote(std::span<const LabelMatrix> annotations) {
  const std::size_t r = annotations.size();
  if (r == 0 || r % 2 == 0) {
    throw DataError("majority_vote: panel size must be odd (got " + std::to_string(r) + ")");
  }
  const LabelMatrix& first = annotations.front();
  LabelMatrix out(first.rows(), first.cols());
  for (const auto& a : annotations) {
    if (!a.same_shape(first)) throw DataError("majority_vote: annotation shapes differ");
  }
  for (std::size_t i = 0; i < first.rows(); ++i) {
    for (std::size_t k = 0; k < first.cols(); ++k) {
      std::size_t pos = 0;
      for (const auto& a : annotations) {
        const Label l = a(i, k);
        if (l != Label::kPos && l != Label::kNeg) {
          throw DataError("majority_vote: annotations must be POS or NEG (row " + std::to_string(i) +
                          ", label " + std::to_string(k) + ")");
        }
        pos += l == Label::kPos;
      }
      out(i, k) = 2 * pos > r ? Label::kPos : Label::kNeg;
    }
  }
  return out;
}

LabelMatrix missing_as_negative(LabelMatrix labels) {
  for (Label& l : labels.values()) {
    if (l == Label::kMissing) l = Label::kNeg;
  }
  return labels;
}

void SyntheticSpec::validate() const {
  if (theta.size() != tree.size()) {
    throw ConfigError("synthetic spec: theta has " + std::to_string(theta.size()) +
                      " entries, tree has " + std::to_string(tree.size()) + " labels");
  }
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (!(theta[k] >= 0.0 && theta[k] <= 1.0)) {
      throw ConfigError("synthetic spec: theta for node '" + tree.node(k).id + "' is " +
                        csv::format_double(theta[k]) + ", outside [0,1]");
    }
  }
  if (!(feature_noise >= 0.0) || !std::isfinite(feature_noise)) {
    throw ConfigError("synthetic spec: feature_noise must be finite and >= 0");
  }
  if (feature_dim == 0) throw ConfigError("synthetic spec: feature_dim must be >= 1");
}

Matrix projection_matrix(const SyntheticSpec& spec) {
  Rng rng(derive_seed(spec.projection_seed, Stream::kProjection));
  Matrix w(spec.feature_dim, spec.tree.size());
  for (double& v : w.values()) v = rng.normal();
  return w;
}

SyntheticSample generate_synthetic(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n == 0) throw ConfigError("generate_synthetic: n must be >= 1");
  const std::size_t k = spec.tree.size();
  const std::size_t f = spec.feature_dim;
  const Matrix w = projection_matrix(spec);

  SyntheticSample out;
  Dataset& d = out.dataset;
  d.labels = LabelMatrix(n, k, Label::kNeg);
  d.features = Matrix(n, f, 0.0);
  d.metadata = Grid<std::string>(n, 0);
  d.ids.reserve(n);

  Rng noise(derive_seed(seed, Stream::kNoise));
  std::vector<double> y(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t node : spec.tree.topological_order()) {
      const auto& parent = spec.tree.node(node).parent;
      const bool parent_pos = !parent || d.labels(i, *parent) == Label::kPos;
      const bool pos = parent_pos && cell_uniform(seed, Stream::kLabels, i, node) < spec.theta[node];
      d.labels(i, node) = pos ? Label::kPos : Label::kNeg;
      y[node] = pos ? 1.0 : 0.0;
    }
    for (std::size_t r = 0; r < f; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < k; ++c) acc += w(r, c) * y[c];
      d.features(i, r) = acc + spec.feature_noise * noise.normal();
    }
    d.ids.push_back("row" + std::to_string(i));
  }
  out.true_marginals = propagate(spec.tree, spec.theta);
  return out;
}

Dataset inject_uncertainty(Dataset data, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw ConfigError("inject_uncertainty: rate must lie in [0,1]");
  }
  LabelMatrix& labels = data.labels;
  for (std::size_t i = 0; i < labels.rows(); ++i) {
    for (std::size_t k = 0; k < labels.cols(); ++k) {
      if (labels(i, k) == Label::kMissing) continue;
      if (cell_uniform(seed, Stream::kUncertainty, i, k) < rate) labels(i, k) = Label::kUnc;
    }
  }
  return data;
}

}  // namespace hmlc
