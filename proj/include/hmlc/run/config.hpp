#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hmlc/model.hpp"
#include "hmlc/pipeline.hpp"
#include "hmlc/policy.hpp"

namespace hmlc::run {

struct SimulatedReader {
  std::string name;
  double sensitivity = 0.8;
  double specificity = 0.8;
};

struct SyntheticConfig {
  // label id -> theta; every hierarchy label needs an entry.
  std::vector<std::pair<std::string, double>> theta;
  std::size_t feature_dim = 16;
  double feature_noise = 0.5;
  std::uint64_t projection_seed = 0;
  std::size_t train_rows = 2000;
  std::size_t test_rows = 1000;
  double uncertainty_rate = 0.0;
  std::vector<SimulatedReader> readers;
};

// Inputs of a run. Paths are absolute once loaded (relative entries are
// resolved against the config file's directory).
struct RunConfig {
  std::filesystem::path source;  // config file, empty when built in code
  std::filesystem::path hierarchy;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  bool has_seed = false;

  std::optional<SyntheticConfig> synthetic;

  // Data files; default to the files gen writes under out/data.
  std::filesystem::path train_labels, train_features, test_labels, test_features, readers;
  std::vector<std::filesystem::path> ground_truth;  // odd count > 1: majority vote
  std::filesystem::path predictions;                 // eval: skip inference, use this file

  UncertaintyPolicy policy = UncertaintyPolicy::ones_lsr();
  bool missing_as_negative = false;
  std::vector<std::size_t> hidden{32};
  OptimizerConfig optimizer;
  bool conditional = true;
  std::size_t stage1_iterations = 50000;
  std::size_t stage2_iterations = 50000;
  std::size_t ensemble_size = 6;
  std::size_t threads = 1;

  std::vector<std::string> eval_subset;

  TrainPlan plan() const;
  std::filesystem::path data_dir() const { return out / "data"; }
  std::filesystem::path train_dir() const { return out / "train"; }
  std::filesystem::path eval_dir() const { return out / "eval"; }
  // Throws ConfigError when the seed is missing or a knob is out of range.
  void validate() const;
};

// Parses JSON text; `base` resolves relative paths. Throws ConfigError.
RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base);
RunConfig load_config(const std::filesystem::path& path);

// Effective configuration as JSON (stable key order), for run snapshots.
std::string dump_config(const RunConfig& config);

}  // namespace hmlc::run
