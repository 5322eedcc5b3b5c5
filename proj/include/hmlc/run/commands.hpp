#pragma once

#include "hmlc/run/config.hpp"

namespace hmlc::run {

// Each command returns 0 on success and throws hmlc::Error otherwise; the
// error's exit_code() is the process status.

// Writes out/data: {train,test}_{labels,features}.csv, readers.csv,
// hierarchy.csv and provenance.json.
int cmd_gen(const RunConfig& config);

// Writes out/train: config.json, hierarchy.csv, members/member_NN/
// {stage1.ckpt, final.ckpt, loss_log.csv} and train_report.txt. Output
// appears only when every member trained successfully.
int cmd_train(const RunConfig& config);

// Ensemble predictions for the test features: out/predictions.csv.
int cmd_predict(const RunConfig& config);

// Writes out/eval: predictions.csv (unless given), report.txt, report.csv
// and roc/<label>.csv.
int cmd_eval(const RunConfig& config);

// Parses argv (subcommand + flags) and dispatches; maps errors to exit codes.
int main(int argc, char** argv);

}  // namespace hmlc::run
