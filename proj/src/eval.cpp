#include "hmlc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>

#include "hmlc/csv.hpp"
#include "hmlc/error.hpp"

namespace hmlc {
namespace {

struct Counts {
  std::uint64_t pos = 0;
  std::uint64_t neg = 0;
};

Counts check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw DataError("roc: " + std::to_string(scores.size()) + " scores but " +
                    std::to_string(labels.size()) + " labels");
  }
  Counts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw DataError("roc: NaN score");
    (labels[i] ? c.pos : c.neg)++;
  }
  if (c.pos == 0 || c.neg == 0) throw DataError("roc: both classes are required");
  return c;
}

// (false positives, true positives) after each distinct-score group, highest
// score first, beginning with (0, 0).
std::vector<std::pair<std::uint64_t, std::uint64_t>> sweep(std::span<const double> scores,
                                                           std::span<const std::uint8_t> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out{{0, 0}};
  std::uint64_t fp = 0, tp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] ? tp : fp)++;
      ++i;
    }
    out.emplace_back(fp, tp);
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

double RocCurve::tpr_at(double fpr) const {
  if (points.empty()) throw DataError("roc: empty curve");
  fpr = std::clamp(fpr, 0.0, 1.0);
  double exact = -1.0;
  for (const auto& p : points) {
    if (p.fpr == fpr) exact = std::max(exact, p.tpr);
  }
  if (exact >= 0.0) return exact;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const RocPoint& a = points[i];
    const RocPoint& b = points[i + 1];
    if (a.fpr < fpr && fpr < b.fpr) {
      return a.tpr + (b.tpr - a.tpr) * (fpr - a.fpr) / (b.fpr - a.fpr);
    }
  }
  return points.back().tpr;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const Counts c = check_inputs(scores, labels);
  RocCurve curve;
  for (const auto& [fp, tp] : sweep(scores, labels)) {
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(c.neg),
                            static_cast<double>(tp) / static_cast<double>(c.pos)});
  }
  return curve;
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const Counts c = check_inputs(scores, labels);
  // Twice the trapezoid area in count units; integral, hence exact.
  const auto steps = sweep(scores, labels);
  long double twice_area = 0;
  for (std::size_t i = 1; i < steps.size(); ++i) {
    const auto [fp0, tp0] = steps[i - 1];
    const auto [fp1, tp1] = steps[i];
    twice_area += static_cast<long double>(fp1 - fp0) * static_cast<long double>(tp0 + tp1);
  }
  return static_cast<double>(twice_area / (2.0L * c.pos * c.neg));
}

double mean_auc(std::span<const double> aucs) {
  if (aucs.empty()) throw DataError("mean_auc: empty label subset");
  return std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(aucs.size());
}

std::vector<std::string> default_eval_subset() {
  return {"Atelectasis", "Cardiomegaly", "Consolidation", "Edema", "Pleural Effusion"};
}

std::size_t readers_below(const RocCurve& curve, std::span<const OperatingPoint> points) {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [&](const auto& p) {
    return p.tpr < curve.tpr_at(p.fpr);
  }));
}

EvalReport reader_study(std::span<const LabelEval> labels, std::span<const std::string> subset) {
  EvalReport report;
  report.subset.assign(subset.begin(), subset.end());
  if (subset.empty()) throw DataError("reader_study: empty evaluation subset");
  for (const auto& name : subset) {
    const auto it = std::find_if(labels.begin(), labels.end(),
                                 [&](const LabelEval& l) { return l.label == name; });
    if (it == labels.end()) throw DataError("evaluation label '" + name + "' missing from predictions");
  }
  double auc_sum = 0.0, readers_sum = 0.0;
  for (const LabelEval& l : labels) {
    LabelResult r;
    r.label = l.label;
    r.selected = std::find(subset.begin(), subset.end(), l.label) != subset.end();
    r.readers = l.readers.size();
    const auto pos = std::count(l.truth.begin(), l.truth.end(), std::uint8_t{1});
    const bool evaluable = pos > 0 && static_cast<std::size_t>(pos) < l.truth.size();
    if (evaluable) {
      r.roc = roc_curve(l.scores, l.truth);
      r.auc = auc(l.scores, l.truth);
      r.readers_below = readers_below(*r.roc, l.readers);
    } else if (r.selected) {
      throw DataError("evaluation label '" + l.label + "' has a single class in the ground truth");
    } else if (l.scores.size() != l.truth.size()) {
      throw DataError("evaluation label '" + l.label + "': score and truth counts differ");
    }
    if (r.selected) {
      auc_sum += *r.auc;
      readers_sum += static_cast<double>(r.readers_below);
    }
    report.labels.push_back(std::move(r));
  }
  const double n = static_cast<double>(subset.size());
  report.mean_auc_selected = auc_sum / n;
  report.mean_readers_below = readers_sum / n;
  return report;
}

std::vector<std::pair<std::string, OperatingPoint>> load_reader_points(
    const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const long label = t.column("label"), reader = t.column("reader"), fpr = t.column("fpr"),
             tpr = t.column("tpr");
  if (label < 0 || reader < 0 || fpr < 0 || tpr < 0) {
    throw DataError(path.string() + ": reader points need columns label,reader,fpr,tpr");
  }
  std::vector<std::pair<std::string, OperatingPoint>> out;
  for (const auto& row : t.rows) {
    OperatingPoint p;
    p.reader = row[reader];
    if (!csv::parse_double(row[fpr], p.fpr) || !csv::parse_double(row[tpr], p.tpr) ||
        !(p.fpr >= 0.0 && p.fpr <= 1.0) || !(p.tpr >= 0.0 && p.tpr <= 1.0)) {
      throw DataError(path.string() + ": bad operating point for reader '" + p.reader + "'");
    }
    out.emplace_back(row[label], std::move(p));
  }
  return out;
}

std::string format_reader_points(std::span<const std::pair<std::string, OperatingPoint>> points) {
  std::string out = "label,reader,fpr,tpr\n";
  for (const auto& [label, p] : points) {
    out += csv::join({label, p.reader, csv::format_double(p.fpr), csv::format_double(p.tpr)}) + "\n";
  }
  return out;
}

OperatingPoint operating_point(std::span<const std::uint8_t> calls,
                               std::span<const std::uint8_t> truth, std::string reader) {
  if (calls.size() != truth.size()) throw DataError("operating_point: size mismatch");
  std::uint64_t tp = 0, fp = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < calls.size(); ++i) {
    if (truth[i]) {
      ++pos;
      tp += calls[i] != 0;
    } else {
      ++neg;
      fp += calls[i] != 0;
    }
  }
  if (pos == 0 || neg == 0) throw DataError("operating_point: both classes are required");
  return {static_cast<double>(fp) / static_cast<double>(neg),
          static_cast<double>(tp) / static_cast<double>(pos), std::move(reader)};
}

std::string format_report_text(const EvalReport& report) {
  std::size_t width = 5;
  for (const auto& l : report.labels) width = std::max(width, l.label.size());
  const auto pad = [](std::string text, std::size_t n) {
    text.resize(std::max(n, text.size()), ' ');
    return text;
  };
  std::string out = "Evaluation report\n\n";
  out += pad("label", width) + "  " + pad("auc", 6) + "  " + pad("readers_below", 13) + "  selected\n";
  for (const auto& l : report.labels) {
    const std::string counts = std::to_string(l.readers_below) + "/" + std::to_string(l.readers);
    out += pad(l.label, width) + "  " + pad(l.auc ? fixed(*l.auc, 4) : "NA", 6) + "  " + pad(counts, 13) +
           "  " + (l.selected ? "yes" : "no") + "\n";
  }
  out += "\nsubset:";
  for (const auto& s : report.subset) out += " [" + s + "]";
  out += "\nmean_auc_selected: " + fixed(report.mean_auc_selected, 4) + "\n";
  out += "mean_readers_below: " + fixed(report.mean_readers_below, 2) + "\n";
  return out;
}

std::string format_report_csv(const EvalReport& report) {
  std::string out = "metric,label,value\n";
  for (const auto& l : report.labels) {
    out += csv::join({"auc", l.label, l.auc ? csv::format_double(*l.auc) : "NA"}) + "\n";
    out += csv::join({"readers_below", l.label, std::to_string(l.readers_below)}) + "\n";
    out += csv::join({"readers", l.label, std::to_string(l.readers)}) + "\n";
  }
  out += "mean_auc_selected,," + csv::format_double(report.mean_auc_selected) + "\n";
  out += "mean_readers_below,," + csv::format_double(report.mean_readers_below) + "\n";
  return out;
}

std::string format_roc_csv(const RocCurve& curve) {
  std::string out = "fpr,tpr\n";
  for (const auto& p : curve.points) {
    out += csv::format_double(p.fpr) + "," + csv::format_double(p.tpr) + "\n";
  }
  return out;
}

}  // namespace hmlc
