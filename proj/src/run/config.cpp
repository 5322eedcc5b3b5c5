#include "hmlc/run/config.hpp"

#include <json.hpp>

#include "hmlc/csv.hpp"
#include "hmlc/error.hpp"

namespace hmlc::run {
namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal();
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void read_path(const json& obj, const char* key, const std::filesystem::path& base,
               std::filesystem::path& out) {
  if (obj.contains(key)) out = resolve(base, obj.at(key).get<std::string>());
}

UncertaintyPolicy read_policy(const json& p) {
  const auto kind = parse_policy_kind(p.at("kind").get<std::string>());
  std::optional<LsrParams> lsr;
  if (kind == PolicyKind::kOnesLsr || kind == PolicyKind::kZerosLsr) {
    LsrParams defaults = kind == PolicyKind::kOnesLsr ? kDefaultOnesLsr : kDefaultZerosLsr;
    read(p, "a", defaults.a);
    read(p, "b", defaults.b);
    lsr = defaults;
  } else if (p.contains("a") || p.contains("b")) {
    throw ConfigError("policy '" + std::string(to_string(kind)) + "' takes no LSR bounds");
  }
  return UncertaintyPolicy(kind, lsr);
}

}  // namespace

TrainPlan RunConfig::plan() const {
  TrainPlan p;
  p.policy = policy;
  p.optimizer = optimizer;
  p.optimizer.seed = seed;
  p.stage1_iterations = stage1_iterations;
  p.stage2_iterations = stage2_iterations;
  p.conditional = conditional;
  p.missing_as_negative = missing_as_negative;
  return p;
}

void RunConfig::validate() const {
  if (!has_seed) throw ConfigError("config: 'seed' is required");
  if (out.empty()) throw ConfigError("config: output directory ('out' or --out) is required");
  if (hierarchy.empty()) throw ConfigError("config: 'hierarchy' is required");
  optimizer.validate();
  if (ensemble_size == 0) throw ConfigError("config: ensemble_size must be >= 1");
  if (threads == 0) throw ConfigError("config: threads must be >= 1");
  for (std::size_t h : hidden) {
    if (h == 0) throw ConfigError("config: hidden layer widths must be >= 1");
  }
  if (synthetic) {
    if (synthetic->train_rows == 0 || synthetic->test_rows == 0) {
      throw ConfigError("config: synthetic row counts must be >= 1");
    }
    for (const auto& r : synthetic->readers) {
      if (!(r.sensitivity >= 0 && r.sensitivity <= 1 && r.specificity >= 0 && r.specificity <= 1)) {
        throw ConfigError("config: reader '" + r.name + "' needs sensitivity/specificity in [0,1]");
      }
    }
  }
  if (ground_truth.size() > 1 && ground_truth.size() % 2 == 0) {
    throw ConfigError("config: majority vote needs an odd number of ground-truth files");
  }
}

RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base) {
  RunConfig c;
  try {
    const json j = json::parse(json_text);
    if (j.contains("seed")) {
      c.seed = j.at("seed").get<std::uint64_t>();
      c.has_seed = true;
    }
    read_path(j, "hierarchy", base, c.hierarchy);
    read_path(j, "out", base, c.out);
    read(j, "missing_as_negative", c.missing_as_negative);

    if (j.contains("synthetic")) {
      const json& s = j.at("synthetic");
      SyntheticConfig sc;
      for (const auto& [name, value] : s.at("theta").items()) {
        sc.theta.emplace_back(name, value.get<double>());
      }
      read(s, "feature_dim", sc.feature_dim);
      read(s, "feature_noise", sc.feature_noise);
      read(s, "projection_seed", sc.projection_seed);
      read(s, "train_rows", sc.train_rows);
      read(s, "test_rows", sc.test_rows);
      read(s, "uncertainty_rate", sc.uncertainty_rate);
      if (s.contains("readers")) {
        for (const json& r : s.at("readers")) {
          SimulatedReader reader;
          reader.name = r.at("name").get<std::string>();
          read(r, "sensitivity", reader.sensitivity);
          read(r, "specificity", reader.specificity);
          sc.readers.push_back(std::move(reader));
        }
      }
      c.synthetic = std::move(sc);
    }
    if (j.contains("data")) {
      const json& d = j.at("data");
      read_path(d, "train_labels", base, c.train_labels);
      read_path(d, "train_features", base, c.train_features);
      read_path(d, "test_labels", base, c.test_labels);
      read_path(d, "test_features", base, c.test_features);
      read_path(d, "readers", base, c.readers);
      if (d.contains("ground_truth")) {
        for (const auto& g : d.at("ground_truth")) c.ground_truth.push_back(resolve(base, g.get<std::string>()));
      }
      read_path(d, "predictions", base, c.predictions);
    }
    if (j.contains("policy")) c.policy = read_policy(j.at("policy"));
    if (j.contains("model")) read(j.at("model"), "hidden", c.hidden);
    if (j.contains("optimizer")) {
      const json& o = j.at("optimizer");
      read(o, "beta1", c.optimizer.beta1);
      read(o, "beta2", c.optimizer.beta2);
      read(o, "lr0", c.optimizer.lr0);
      read(o, "epsilon", c.optimizer.epsilon);
      read(o, "decay_factor", c.optimizer.decay_factor);
      read(o, "batch_size", c.optimizer.batch_size);
      read(o, "iterations", c.optimizer.iterations);
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      if (t.contains("mode")) {
        const auto mode = t.at("mode").get<std::string>();
        if (mode != "conditional" && mode != "flat") {
          throw ConfigError("config: train.mode must be 'conditional' or 'flat'");
        }
        c.conditional = mode == "conditional";
      }
      read(t, "stage1_iterations", c.stage1_iterations);
      read(t, "stage2_iterations", c.stage2_iterations);
      read(t, "ensemble_size", c.ensemble_size);
      read(t, "threads", c.threads);
    }
    if (j.contains("eval")) read(j.at("eval"), "subset", c.eval_subset);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  std::string text;
  try {
    text = csv::read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  RunConfig c = parse_config(text, std::filesystem::absolute(path).parent_path());
  c.source = path;
  return c;
}

std::string dump_config(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["hierarchy"] = c.hierarchy.string();
  j["out"] = c.out.string();
  j["missing_as_negative"] = c.missing_as_negative;
  if (c.synthetic) {
    json s;
    json theta = json::object();
    for (const auto& [name, v] : c.synthetic->theta) theta[name] = v;
    s["theta"] = theta;
    s["feature_dim"] = c.synthetic->feature_dim;
    s["feature_noise"] = c.synthetic->feature_noise;
    s["projection_seed"] = c.synthetic->projection_seed;
    s["train_rows"] = c.synthetic->train_rows;
    s["test_rows"] = c.synthetic->test_rows;
    s["uncertainty_rate"] = c.synthetic->uncertainty_rate;
    json readers = json::array();
    for (const auto& r : c.synthetic->readers) {
      readers.push_back({{"name", r.name}, {"sensitivity", r.sensitivity}, {"specificity", r.specificity}});
    }
    s["readers"] = readers;
    j["synthetic"] = s;
  }
  json d;
  const auto put = [&](const char* key, const std::filesystem::path& p) {
    if (!p.empty()) d[key] = p.string();
  };
  put("train_labels", c.train_labels);
  put("train_features", c.train_features);
  put("test_labels", c.test_labels);
  put("test_features", c.test_features);
  put("readers", c.readers);
  put("predictions", c.predictions);
  if (!c.ground_truth.empty()) {
    json g = json::array();
    for (const auto& p : c.ground_truth) g.push_back(p.string());
    d["ground_truth"] = g;
  }
  if (!d.is_null()) j["data"] = d;
  json p{{"kind", std::string(to_string(c.policy.kind()))}};
  if (c.policy.lsr()) {
    p["a"] = c.policy.lsr()->a;
    p["b"] = c.policy.lsr()->b;
  }
  j["policy"] = p;
  j["model"] = {{"hidden", c.hidden}};
  j["optimizer"] = {{"beta1", c.optimizer.beta1},       {"beta2", c.optimizer.beta2},
                    {"lr0", c.optimizer.lr0},           {"epsilon", c.optimizer.epsilon},
                    {"decay_factor", c.optimizer.decay_factor},
                    {"batch_size", c.optimizer.batch_size},
                    {"iterations", c.optimizer.iterations}};
  j["train"] = {{"mode", c.conditional ? "conditional" : "flat"},
                {"stage1_iterations", c.stage1_iterations},
                {"stage2_iterations", c.stage2_iterations},
                {"ensemble_size", c.ensemble_size},
                {"threads", c.threads}};
  j["eval"] = {{"subset", c.eval_subset}};
  return j.dump(2) + "\n";
}

}  // namespace hmlc::run
