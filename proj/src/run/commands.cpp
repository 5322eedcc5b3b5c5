#include "hmlc/run/commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <unordered_map>

#include "hmlc/checkpoint.hpp"
#include "hmlc/csv.hpp"
#include "hmlc/data.hpp"
#include "hmlc/error.hpp"
#include "hmlc/eval.hpp"
#include "hmlc/hierarchy.hpp"
#include "hmlc/pipeline.hpp"
#include "hmlc/rng.hpp"

namespace hmlc::run {
namespace fs = std::filesystem;

namespace {

fs::path or_default(const fs::path& configured, const fs::path& fallback) {
  return configured.empty() ? fallback : configured;
}

// Labels plus features; features come from the features file when one is
// configured or present next to the labels, otherwise from metadata.
Dataset load_split(const fs::path& labels, const fs::path& configured_features,
                   const fs::path& default_features, const LabelTree& tree) {
  if (!fs::exists(labels)) throw DataError("label file not found: " + labels.string());
  Dataset d = load_csv(labels, tree);
  if (!configured_features.empty()) {
    attach_features(d, configured_features);
  } else if (fs::exists(default_features)) {
    attach_features(d, default_features);
  }
  return d;
}

std::string member_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "member_%02zu", i);
  return buf;
}

std::string safe_name(std::string_view label) {
  std::string out;
  for (char c : label) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out;
}

std::string format_loss_log(const TrainLog& log) {
  std::string out = "stage,epoch,steps,lr,mean_loss\n";
  for (const auto& e : log) {
    out += e.stage + "," + std::to_string(e.epoch) + "," + std::to_string(e.steps) + "," +
           csv::format_double(e.lr) + "," + csv::format_double(e.mean_loss) + "\n";
  }
  return out;
}

EnsembleModel load_ensemble(const fs::path& train_dir) {
  const fs::path members = train_dir / "members";
  if (!fs::is_directory(members)) {
    throw DataError("no trained members under " + members.string() + " (run 'train' first)");
  }
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(members)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<Mlp> models;
  for (const auto& d : dirs) models.push_back(load_checkpoint(d / "final.ckpt").model);
  if (models.empty()) throw DataError("no trained members under " + members.string());
  return EnsembleModel(std::move(models));
}

std::string format_predictions(const Matrix& probs, std::span<const std::string> ids,
                               const LabelTree& tree) {
  csv::Row header{"id"};
  for (const auto& id : tree.ids()) header.push_back(id);
  std::string out = csv::join(header) + "\n";
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    out += csv::quote(ids[i]);
    for (double p : probs.row(i)) out += "," + csv::format_double(p);
    out += "\n";
  }
  return out;
}

// Predictions file rows keyed by id, columns in tree order.
std::unordered_map<std::string, std::vector<double>> read_predictions(const fs::path& path,
                                                                      const LabelTree& tree) {
  const csv::Table t = csv::read(path);
  const long id = t.column("id");
  if (id < 0) throw DataError(path.string() + ": predictions need an 'id' column");
  std::vector<long> cols;
  for (const auto& label : tree.ids()) {
    const long c = t.column(label);
    if (c < 0) throw DataError(path.string() + ": missing label column '" + label + "'");
    cols.push_back(c);
  }
  std::unordered_map<std::string, std::vector<double>> out;
  for (const auto& row : t.rows) {
    std::vector<double> v(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (!csv::parse_double(row[cols[k]], v[k]) || !(v[k] >= 0.0 && v[k] <= 1.0)) {
        throw DataError(path.string() + ": bad probability '" + row[cols[k]] + "' for id '" +
                        row[id] + "'");
      }
    }
    if (!out.emplace(row[id], std::move(v)).second) {
      throw DataError(path.string() + ": duplicate id '" + row[id] + "'");
    }
  }
  return out;
}

Dataset load_ground_truth(const RunConfig& c, const LabelTree& tree) {
  std::vector<fs::path> files = c.ground_truth;
  if (files.empty()) files.push_back(or_default(c.test_labels, c.data_dir() / "test_labels.csv"));
  std::vector<Dataset> panels;
  for (const auto& f : files) {
    if (!fs::exists(f)) throw DataError("ground-truth file not found: " + f.string());
    panels.push_back(load_csv(f, tree));
  }
  Dataset truth = panels.front();
  if (panels.size() > 1) {
    std::vector<LabelMatrix> stack;
    for (const auto& p : panels) {
      if (p.ids != truth.ids) throw DataError("ground-truth files list different rows");
      stack.push_back(p.labels);
    }
    truth.labels = majority_vote(stack);
  }
  for (std::size_t i = 0; i < truth.rows(); ++i) {
    for (std::size_t k = 0; k < tree.size(); ++k) {
      const Label l = truth.labels(i, k);
      if (l != Label::kPos && l != Label::kNeg) {
        throw DataError("ground truth must be binary; row '" + truth.ids[i] + "', label '" +
                        tree.node(k).id + "'");
      }
    }
  }
  return truth;
}

std::vector<std::string> resolve_subset(const RunConfig& c, const LabelTree& tree) {
  if (!c.eval_subset.empty()) {
    for (const auto& s : c.eval_subset) {
      if (!tree.find(s)) throw DataError("evaluation label '" + s + "' is not in the hierarchy");
    }
    return c.eval_subset;
  }
  auto subset = default_eval_subset();
  const bool all_present = std::all_of(subset.begin(), subset.end(),
                                       [&](const std::string& s) { return tree.find(s).has_value(); });
  return all_present ? subset : tree.ids();
}

void replace_directory(const fs::path& staging, const fs::path& target) {
  fs::remove_all(target);
  fs::rename(staging, target);
}

}  // namespace

int cmd_gen(const RunConfig& c) {
  c.validate();
  if (!c.synthetic) throw ConfigError("gen: config has no 'synthetic' section");
  const SyntheticConfig& sc = *c.synthetic;
  const LabelTree tree = load_hierarchy(c.hierarchy);

  SyntheticSpec spec;
  spec.tree = tree;
  spec.theta.assign(tree.size(), -1.0);
  std::vector<bool> given(tree.size(), false);
  for (const auto& [name, value] : sc.theta) {
    const auto idx = tree.find(name);
    if (!idx) throw ConfigError("synthetic theta names unknown node '" + name + "'");
    spec.theta[*idx] = value;
    given[*idx] = true;
  }
  for (std::size_t k = 0; k < tree.size(); ++k) {
    if (!given[k]) throw ConfigError("synthetic theta missing for node '" + tree.node(k).id + "'");
  }
  spec.feature_dim = sc.feature_dim;
  spec.feature_noise = sc.feature_noise;
  spec.projection_seed = sc.projection_seed ? sc.projection_seed : c.seed;
  spec.validate();
  if (!(sc.uncertainty_rate >= 0.0 && sc.uncertainty_rate <= 1.0)) {
    throw ConfigError("synthetic uncertainty_rate must lie in [0,1]");
  }

  const std::uint64_t train_seed = mix64(c.seed ^ 0x7261696eULL);
  const std::uint64_t test_seed = mix64(c.seed ^ 0x74657374ULL);
  SyntheticSample train = generate_synthetic(spec, sc.train_rows, train_seed);
  SyntheticSample test = generate_synthetic(spec, sc.test_rows, test_seed);
  for (std::size_t i = 0; i < train.dataset.rows(); ++i) train.dataset.ids[i] = "train/" + std::to_string(i);
  for (std::size_t i = 0; i < test.dataset.rows(); ++i) test.dataset.ids[i] = "test/" + std::to_string(i);
  train.dataset = inject_uncertainty(std::move(train.dataset), sc.uncertainty_rate, c.seed);

  // Simulated readers call each held-out case at their sensitivity/specificity.
  std::vector<std::pair<std::string, OperatingPoint>> points;
  const LabelMatrix& truth = test.dataset.labels;
  for (std::size_t k = 0; k < tree.size(); ++k) {
    std::vector<std::uint8_t> y(truth.rows());
    for (std::size_t i = 0; i < truth.rows(); ++i) y[i] = truth(i, k) == Label::kPos;
    const auto pos = std::count(y.begin(), y.end(), std::uint8_t{1});
    if (pos == 0 || static_cast<std::size_t>(pos) == y.size()) continue;
    for (std::size_t r = 0; r < sc.readers.size(); ++r) {
      const SimulatedReader& reader = sc.readers[r];
      std::vector<std::uint8_t> calls(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double u = cell_uniform(c.seed, Stream::kReaders, i, k * sc.readers.size() + r);
        calls[i] = y[i] ? u < reader.sensitivity : u >= reader.specificity;
      }
      points.emplace_back(tree.node(k).id, operating_point(calls, y, reader.name));
    }
  }

  const fs::path dir = c.data_dir();
  fs::create_directories(dir);
  write_csv(dir / "train_labels.csv", train.dataset, tree);
  write_features_csv(dir / "train_features.csv", train.dataset.features, train.dataset.ids);
  write_csv(dir / "test_labels.csv", test.dataset, tree);
  write_features_csv(dir / "test_features.csv", test.dataset.features, test.dataset.ids);
  csv::write_file(dir / "readers.csv", format_reader_points(points));
  csv::write_file(dir / "hierarchy.csv", format_hierarchy(tree));

  nlohmann::json prov;
  prov["generator"] = "hmlc gen";
  prov["seed"] = c.seed;
  prov["projection_seed"] = spec.projection_seed;
  prov["train_seed"] = train_seed;
  prov["test_seed"] = test_seed;
  prov["train_rows"] = sc.train_rows;
  prov["test_rows"] = sc.test_rows;
  prov["feature_dim"] = spec.feature_dim;
  prov["feature_noise"] = spec.feature_noise;
  prov["uncertainty_rate"] = sc.uncertainty_rate;
  nlohmann::json theta = nlohmann::json::object(), marginals = nlohmann::json::object();
  for (std::size_t k = 0; k < tree.size(); ++k) {
    theta[tree.node(k).id] = spec.theta[k];
    marginals[tree.node(k).id] = train.true_marginals[k];
  }
  prov["theta"] = theta;
  prov["true_marginals"] = marginals;
  prov["config"] = nlohmann::json::parse(dump_config(c));
  csv::write_file(dir / "provenance.json", prov.dump(2) + "\n");
  return 0;
}

int cmd_train(const RunConfig& c) {
  c.validate();
  const LabelTree tree = load_hierarchy(c.hierarchy);
  const Dataset data =
      load_split(or_default(c.train_labels, c.data_dir() / "train_labels.csv"), c.train_features,
                 c.data_dir() / "train_features.csv", tree);
  const TrainPlan plan = c.plan();
  const std::vector<MemberRun> runs =
      train_ensemble(data, tree, plan, c.hidden, c.ensemble_size, c.seed, c.threads);

  const fs::path target = c.train_dir();
  const fs::path staging = c.out / "train.partial";
  fs::remove_all(staging);
  try {
    fs::create_directories(staging / "members");
    csv::write_file(staging / "config.json", dump_config(c));
    csv::write_file(staging / "hierarchy.csv", format_hierarchy(tree));
    std::string report = "Training report\n\n";
    report += "mode: " + std::string(plan.conditional ? "conditional" : "flat") + "\n";
    report += "policy: " + plan.policy.describe() + "\n";
    report += "rows: " + std::to_string(data.rows()) + "\n";
    report += "members: " + std::to_string(runs.size()) + "\n\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const MemberRun& r = runs[i];
      const fs::path dir = staging / "members" / member_name(i);
      if (r.stage1) save_checkpoint(dir / "stage1.ckpt", {*r.stage1, r.stage1_optimizer});
      save_checkpoint(dir / "final.ckpt", {r.model, r.optimizer});
      csv::write_file(dir / "loss_log.csv", format_loss_log(r.log));
      report += member_name(i) + " seed " + std::to_string(member_seed(c.seed, i));
      std::map<std::string, double> last;
      for (const auto& e : r.log) last[e.stage] = e.mean_loss;
      for (const auto& [stage, loss] : last) report += "  " + stage + "_loss " + csv::format_double(loss);
      report += "\n";
    }
    csv::write_file(staging / "train_report.txt", report);
    replace_directory(staging, target);
  } catch (...) {
    fs::remove_all(staging);
    throw;
  }
  return 0;
}

int cmd_predict(const RunConfig& c) {
  c.validate();
  const LabelTree tree = load_hierarchy(c.hierarchy);
  const EnsembleModel ensemble = load_ensemble(c.train_dir());
  const fs::path features = or_default(c.test_features, c.data_dir() / "test_features.csv");
  if (!fs::exists(features)) throw DataError("features file not found: " + features.string());
  const FeatureTable table = read_features_csv(features);
  const Matrix probs = predict_unconditional(ensemble, tree, table.features);
  csv::write_file(c.out / "predictions.csv", format_predictions(probs, table.ids, tree));
  return 0;
}

int cmd_eval(const RunConfig& c) {
  c.validate();
  const LabelTree tree = load_hierarchy(c.hierarchy);
  const Dataset truth = load_ground_truth(c, tree);
  const std::vector<std::string> subset = resolve_subset(c, tree);

  const fs::path dir = c.eval_dir();
  std::unordered_map<std::string, std::vector<double>> preds;
  std::string predictions_csv;
  if (!c.predictions.empty()) {
    if (!fs::exists(c.predictions)) throw DataError("predictions file not found: " + c.predictions.string());
    preds = read_predictions(c.predictions, tree);
  } else {
    const EnsembleModel ensemble = load_ensemble(c.train_dir());
    const fs::path features = or_default(c.test_features, c.data_dir() / "test_features.csv");
    Dataset d = truth;
    if (fs::exists(features)) attach_features(d, features);
    const Matrix probs = predict_unconditional(ensemble, tree, d.features);
    predictions_csv = format_predictions(probs, d.ids, tree);
    for (std::size_t i = 0; i < d.rows(); ++i) {
      preds.emplace(d.ids[i], std::vector<double>(probs.row(i).begin(), probs.row(i).end()));
    }
  }

  std::vector<LabelEval> evals(tree.size());
  for (std::size_t k = 0; k < tree.size(); ++k) evals[k].label = tree.node(k).id;
  for (std::size_t i = 0; i < truth.rows(); ++i) {
    const auto it = preds.find(truth.ids[i]);
    if (it == preds.end()) throw DataError("no prediction for row '" + truth.ids[i] + "'");
    for (std::size_t k = 0; k < tree.size(); ++k) {
      evals[k].scores.push_back(it->second[k]);
      evals[k].truth.push_back(truth.labels(i, k) == Label::kPos);
    }
  }
  const fs::path readers = or_default(c.readers, c.data_dir() / "readers.csv");
  if (!c.readers.empty() && !fs::exists(readers)) {
    throw DataError("reader points file not found: " + readers.string());
  }
  if (fs::exists(readers)) {
    for (auto& [label, point] : load_reader_points(readers)) {
      const auto idx = tree.find(label);
      if (!idx) throw DataError(readers.string() + ": unknown label '" + label + "'");
      evals[*idx].readers.push_back(std::move(point));
    }
  }

  const EvalReport report = reader_study(evals, subset);
  fs::create_directories(dir / "roc");
  if (!predictions_csv.empty()) csv::write_file(dir / "predictions.csv", predictions_csv);
  csv::write_file(dir / "report.txt", format_report_text(report));
  csv::write_file(dir / "report.csv", format_report_csv(report));
  for (const auto& l : report.labels) {
    if (l.roc) csv::write_file(dir / "roc" / (safe_name(l.label) + ".csv"), format_roc_csv(*l.roc));
  }
  return 0;
}

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical multi-label training and evaluation"};
  app.require_subcommand(1);

  std::string config_path, out, mode, policy;
  std::optional<std::uint64_t> seed;
  std::optional<double> lsr_a, lsr_b;
  std::optional<std::size_t> threads, members;
  std::string predictions;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--out", out, "Override the output directory");
  };
  const auto add_training = [&](CLI::App* sub) {
    sub->add_option("--mode", mode, "conditional | flat")
        ->check(CLI::IsMember({"conditional", "flat"}));
    sub->add_option("--policy", policy, "ignore | ones | zeros | ones-lsr | zeros-lsr");
    sub->add_option("--lsr-a", lsr_a, "Lower LSR bound");
    sub->add_option("--lsr-b", lsr_b, "Upper LSR bound");
    sub->add_option("--threads", threads, "Worker threads for ensemble members");
    sub->add_option("--ensemble-size", members, "Number of ensemble members");
  };
  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic hierarchical dataset");
  CLI::App* train = app.add_subcommand("train", "Train the ensemble");
  CLI::App* predict = app.add_subcommand("predict", "Write ensemble predictions for test features");
  CLI::App* eval = app.add_subcommand("eval", "ROC/AUC and reader-study report");
  for (CLI::App* sub : {gen, train, predict, eval}) add_common(sub);
  add_training(train);
  eval->add_option("--predictions", predictions, "Evaluate this predictions CSV instead of the ensemble");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig c = load_config(config_path);
    if (seed) {
      c.seed = *seed;
      c.has_seed = true;
    }
    if (!out.empty()) c.out = fs::absolute(out).lexically_normal();
    if (!mode.empty()) c.conditional = mode == "conditional";
    if (!policy.empty() || lsr_a || lsr_b) {
      const PolicyKind kind = policy.empty() ? c.policy.kind() : parse_policy_kind(policy);
      std::optional<LsrParams> lsr;
      if (kind == PolicyKind::kOnesLsr || kind == PolicyKind::kZerosLsr) {
        LsrParams p = c.policy.kind() == kind && c.policy.lsr()
                          ? *c.policy.lsr()
                          : (kind == PolicyKind::kOnesLsr ? kDefaultOnesLsr : kDefaultZerosLsr);
        if (lsr_a) p.a = *lsr_a;
        if (lsr_b) p.b = *lsr_b;
        lsr = p;
      } else if (lsr_a || lsr_b) {
        throw ConfigError("--lsr-a/--lsr-b apply only to ones-lsr and zeros-lsr");
      }
      c.policy = UncertaintyPolicy(kind, lsr);
    }
    if (threads) c.threads = *threads;
    if (members) c.ensemble_size = *members;
    if (!predictions.empty()) c.predictions = fs::absolute(predictions).lexically_normal();

    if (*gen) return cmd_gen(c);
    if (*train) return cmd_train(c);
    if (*predict) return cmd_predict(c);
    return cmd_eval(c);
  } catch (const Error& e) {
    std::cerr << "hmlc: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "hmlc: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace hmlc::run
