#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmlc/grid.hpp"

namespace hmlc {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;

  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

// Vertices from sweeping every distinct score as a threshold (score >= t is
// called positive), highest first. Starts at (0,0), ends at (1,1).
struct RocCurve {
  std::vector<RocPoint> points;

  // TPR of the curve at `fpr`: the highest vertex TPR if a vertex lies at
  // exactly that FPR, otherwise linear interpolation between neighbours.
  double tpr_at(double fpr) const;
};

struct OperatingPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  std::string reader;
};

// Throws DataError unless both classes are present and sizes agree.
RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Trapezoidal area under roc_curve; equals P(pos > neg) + P(tie)/2.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Unweighted mean of the given per-label AUCs.
double mean_auc(std::span<const double> aucs);

// The five competition pathologies.
std::vector<std::string> default_eval_subset();

// Number of points strictly below the curve (ties are not below).
std::size_t readers_below(const RocCurve& curve, std::span<const OperatingPoint> points);

struct LabelEval {
  std::string label;
  std::vector<double> scores;
  std::vector<std::uint8_t> truth;
  std::vector<OperatingPoint> readers;
};

struct LabelResult {
  std::string label;
  std::optional<double> auc;  // empty when the label has a single class
  std::optional<RocCurve> roc;
  std::size_t readers = 0;
  std::size_t readers_below = 0;
  bool selected = false;
};

struct EvalReport {
  std::vector<LabelResult> labels;
  std::vector<std::string> subset;
  double mean_auc_selected = 0.0;
  double mean_readers_below = 0.0;
};

// Fills per-label AUC and reader counts for every label and summarizes the
// subset. Throws DataError if a subset label is absent or single-class.
EvalReport reader_study(std::span<const LabelEval> labels, std::span<const std::string> subset);

// Reader points CSV: header `label,reader,fpr,tpr`.
std::vector<std::pair<std::string, OperatingPoint>> load_reader_points(
    const std::filesystem::path& path);
std::string format_reader_points(std::span<const std::pair<std::string, OperatingPoint>> points);

// Empirical operating point of binary calls against the truth.
OperatingPoint operating_point(std::span<const std::uint8_t> calls,
                               std::span<const std::uint8_t> truth, std::string reader);

std::string format_report_text(const EvalReport& report);
// `metric,label,value` rows.
std::string format_report_csv(const EvalReport& report);
// `fpr,tpr` rows.
std::string format_roc_csv(const RocCurve& curve);

}  // namespace hmlc
