#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hmlc/csv.hpp"
#include "hmlc/error.hpp"
#include "hmlc/run/commands.hpp"
#include "hmlc/run/config.hpp"

namespace fs = std::filesystem;
using namespace hmlc;
using namespace hmlc::run;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

struct Workspace {
  fs::path root;
  explicit Workspace(const std::string& name) {
    root = fs::temp_directory_path() / ("hmlc_cmd_" + name);
    fs::remove_all(root);
    fs::create_directories(root);
    spit(root / "tree.csv", "name,parent\nA,\nB,A\nC,B\nD,\n");
  }
  ~Workspace() { fs::remove_all(root); }

  fs::path config(const std::string& theta_a = "0.6", const std::string& extra = "") const {
    const std::string text = R"({
  "seed": 5,
  "hierarchy": "tree.csv",
  "out": "run",
  "synthetic": {
    "theta": {"A": )" + theta_a + R"(, "B": 0.6, "C": 0.5, "D": 0.4},
    "feature_dim": 8, "train_rows": 300, "test_rows": 200, "uncertainty_rate": 0.2,
    "readers": [{"name": "r1", "sensitivity": 0.7, "specificity": 0.8}]
  },
  "model": {"hidden": [8]},
  "optimizer": {"lr0": 0.01, "decay_factor": 0.9},
  "train": {"stage1_iterations": 40, "stage2_iterations": 40, "ensemble_size": 2},
  "eval": {"subset": ["A", "C", "D"]})" + extra + "\n}\n";
    spit(root / "config.json", text);
    return root / "config.json";
  }

  int cli(const std::string& args) const {
    const std::string cmd = std::string("\"") + HMLC_CLI + "\" " + args + " > \"" +
                            (root / "stdout.txt").string() + "\" 2> \"" + (root / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string err() const { return slurp(root / "stderr.txt"); }
};

}  // namespace

TEST(Config, ParsesAndResolvesPaths) {
  const RunConfig c = parse_config(R"({"seed": 3, "hierarchy": "h.csv", "out": "o",
      "policy": {"kind": "zeros-lsr", "a": 0.05, "b": 0.25}, "train": {"mode": "flat"}})",
                                   "/base");
  EXPECT_EQ(c.hierarchy, fs::path("/base/h.csv"));
  EXPECT_EQ(c.out, fs::path("/base/o"));
  EXPECT_EQ(c.policy.kind(), PolicyKind::kZerosLsr);
  EXPECT_EQ(c.policy.lsr()->b, 0.25);
  EXPECT_FALSE(c.conditional);
  const RunConfig again = parse_config(dump_config(c), "/elsewhere");
  EXPECT_EQ(dump_config(again), dump_config(c));
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("{", "/"), ConfigError);
  EXPECT_THROW(parse_config(R"({"hierarchy": "h", "out": "o"})", "/").validate(), ConfigError);
  EXPECT_THROW(parse_config(R"({"seed": 1, "hierarchy": "h", "out": "o", "train": {"mode": "x"}})", "/"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"seed": 1, "hierarchy": "h", "out": "o",
      "policy": {"kind": "ones-lsr", "a": 0.9, "b": 0.2}})", "/"),
               ConfigError);
}

TEST(Commands, GenTrainEvalInProcess) {
  Workspace w("inproc");
  const RunConfig c = load_config(w.config());
  EXPECT_EQ(cmd_gen(c), 0);
  EXPECT_EQ(cmd_train(c), 0);
  EXPECT_EQ(cmd_predict(c), 0);
  EXPECT_EQ(cmd_eval(c), 0);
  const fs::path run = w.root / "run";
  for (const char* f : {"data/train_labels.csv", "data/test_features.csv", "data/readers.csv",
                        "train/members/member_00/stage1.ckpt", "train/members/member_01/final.ckpt",
                        "train/members/member_00/loss_log.csv", "train/train_report.txt",
                        "predictions.csv", "eval/report.txt", "eval/report.csv", "eval/roc/A.csv"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
  EXPECT_FALSE(fs::exists(run / "train.partial"));
  const std::string report = slurp(run / "eval/report.csv");
  EXPECT_NE(report.find("mean_auc_selected"), std::string::npos);
  EXPECT_NE(report.find("mean_readers_below"), std::string::npos);
  EXPECT_EQ(slurp(run / "predictions.csv"), slurp(run / "eval/predictions.csv"));
}

TEST(Commands, PerfectPredictionsScoreOne) {
  Workspace w("perfect");
  const RunConfig c = load_config(w.config());
  cmd_gen(c);
  const csv::Table labels = csv::read(c.data_dir() / "test_labels.csv");
  std::string preds = "id,A,B,C,D\n";
  for (const auto& row : labels.rows) {
    preds += row[labels.column("Path")];
    for (const char* l : {"A", "B", "C", "D"}) preds += row[labels.column(l)] == "1.0" ? ",1" : ",0";
    preds += "\n";
  }
  spit(w.root / "perfect.csv", preds);
  ASSERT_EQ(w.cli("eval --config \"" + w.config().string() + "\" --predictions \"" +
                  (w.root / "perfect.csv").string() + "\""),
            0)
      << w.err();
  const csv::Table rep = csv::read(w.root / "run/eval/report.csv");
  for (const auto& row : rep.rows) {
    if (row[0] == "auc" || row[0] == "mean_auc_selected") EXPECT_EQ(row[2], "1") << row[1];
  }
}

TEST(Commands, MismatchedPredictionColumnsFail) {
  Workspace w("mismatch");
  const RunConfig c = load_config(w.config());
  cmd_gen(c);
  spit(w.root / "bad.csv", "id,A,B,C\ntest/0,0.1,0.1,0.1\n");
  EXPECT_NE(w.cli("eval --config \"" + w.config().string() + "\" --predictions \"" +
                  (w.root / "bad.csv").string() + "\""),
            0);
  EXPECT_NE(w.err().find("'D'"), std::string::npos) << w.err();
}

TEST(Commands, InvalidThetaNamesNode) {
  Workspace w("theta");
  const int code = w.cli("gen --config \"" + w.config("1.5").string() + "\"");
  EXPECT_EQ(code, 1);
  EXPECT_NE(w.err().find("'A'"), std::string::npos) << w.err();
}

TEST(Commands, MissingHierarchyLeavesNoTrainDir) {
  Workspace w("nohier");
  const fs::path cfg = w.config();
  ASSERT_EQ(w.cli("gen --config \"" + cfg.string() + "\""), 0) << w.err();
  fs::remove(w.root / "tree.csv");
  EXPECT_NE(w.cli("train --config \"" + cfg.string() + "\""), 0);
  EXPECT_FALSE(fs::exists(w.root / "run/train"));
  EXPECT_FALSE(fs::exists(w.root / "run/train.partial"));
}

TEST(Commands, MissingSeedAndBadFlagsFail) {
  Workspace w("flags");
  spit(w.root / "noseed.json", R"({"hierarchy": "tree.csv", "out": "run"})");
  EXPECT_EQ(w.cli("gen --config \"" + (w.root / "noseed.json").string() + "\""), 1);
  EXPECT_EQ(w.cli("train --config \"" + w.config().string() + "\" --mode sideways"), 1);
  EXPECT_EQ(w.cli("nonsense"), 1);
}

TEST(Commands, CliRerunsAreByteIdentical) {
  Workspace w("rerun");
  const fs::path cfg = w.config();
  const auto run = [&](const std::string& out) {
    const std::string common = " --config \"" + cfg.string() + "\" --out \"" + (w.root / out).string() + "\"";
    EXPECT_EQ(w.cli("gen" + common), 0) << w.err();
    EXPECT_EQ(w.cli("train" + common + " --threads 2"), 0) << w.err();
    EXPECT_EQ(w.cli("eval" + common), 0) << w.err();
  };
  run("one");
  run("two");
  for (const char* f : {"data/train_features.csv", "train/members/member_01/final.ckpt",
                        "train/members/member_00/loss_log.csv", "eval/report.txt", "eval/report.csv"}) {
    EXPECT_EQ(slurp(w.root / "one" / f), slurp(w.root / "two" / f)) << f;
  }
}
