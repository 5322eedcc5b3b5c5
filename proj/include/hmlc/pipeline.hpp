#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmlc/data.hpp"
#include "hmlc/hierarchy.hpp"
#include "hmlc/model.hpp"
#include "hmlc/policy.hpp"

namespace hmlc {

struct TrainPlan {
  UncertaintyPolicy policy = UncertaintyPolicy::ones();
  OptimizerConfig optimizer;
  std::size_t stage1_iterations = 50000;
  std::size_t stage2_iterations = 50000;
  // false: a single flat stage of optimizer.iterations steps.
  bool conditional = true;
  bool missing_as_negative = false;
};

struct EpochLoss {
  std::string stage;
  std::size_t epoch = 0;
  std::size_t steps = 0;  // optimizer steps taken in this epoch
  double lr = 0.0;
  double mean_loss = 0.0;  // mean per-row loss over the epoch's rows
};
using TrainLog = std::vector<EpochLoss>;

// Policy targets and masks as the plan prepares them (LSR draws fixed once).
PolicyTargets prepare_targets(const Dataset& data, const TrainPlan& plan);

// Mini-batch Adam on masked targets. An epoch is one pass over the rows
// with at least one masked-in label, reshuffled each epoch; the learning
// rate follows lr_schedule by epoch. Throws DataError if no row has a
// masked-in label and NumericError on a non-finite loss.
Mlp train_masked(Mlp model, const Matrix& features, const Matrix& targets, const LossMask& mask,
                 const OptimizerConfig& optimizer, std::size_t iterations,
                 std::uint64_t shuffle_seed, std::string_view stage, TrainLog* log = nullptr,
                 AdamState* final_state = nullptr);

// `final_state`, when given, receives the optimizer state after the last step.

// Stage 1: loss restricted to labels whose ancestors are all positive.
Mlp train_stage1(Mlp model, const Dataset& data, const LabelTree& tree, const TrainPlan& plan,
                 TrainLog* log = nullptr, AdamState* final_state = nullptr);

// Stage 2: only the last layer is trained, on every row with the policy mask.
// Throws NumericError if a frozen layer changed.
Mlp train_stage2(Mlp model, const Dataset& data, const TrainPlan& plan, TrainLog* log = nullptr,
                 AdamState* final_state = nullptr);

// Single-stage baseline with the policy mask. Uses the same shuffle stream
// as stage 1, so with an all-true conditional mask the two agree bit for bit.
Mlp train_flat(Mlp model, const Dataset& data, const TrainPlan& plan, TrainLog* log = nullptr,
               AdamState* final_state = nullptr);

struct MemberRun {
  std::optional<Mlp> stage1;  // absent in flat mode
  std::optional<AdamState> stage1_optimizer;
  Mlp model;
  AdamState optimizer;
  TrainLog log;
};

// Initializes a model from `seed` and trains it per plan.conditional. The
// plan's optimizer seed is replaced by `seed`.
MemberRun train_member(const Dataset& data, const LabelTree& tree, const TrainPlan& plan,
                       std::span<const std::size_t> hidden, std::uint64_t seed);

// Seed of ensemble member i.
std::uint64_t member_seed(std::uint64_t seed, std::size_t i);

// Members train on up to `threads` workers; results do not depend on it.
std::vector<MemberRun> train_ensemble(const Dataset& data, const LabelTree& tree,
                                      const TrainPlan& plan, std::span<const std::size_t> hidden,
                                      std::size_t members, std::uint64_t seed, std::size_t threads);

class EnsembleModel {
 public:
  // Throws ConfigError if empty or the members disagree on input/output size.
  explicit EnsembleModel(std::vector<Mlp> members);

  std::span<const Mlp> members() const noexcept { return members_; }
  std::size_t input_dim() const { return members_.front().input_dim(); }
  std::size_t output_dim() const { return members_.front().output_dim(); }

 private:
  std::vector<Mlp> members_;
};

// Correctly rounded mean (compensated sum, then a remainder-corrected
// division). Identical inputs return that value exactly; the result is
// monotone in every input.
double average(std::span<const double> values);

// Mean over members of propagate(tree, forward(member, x)).
std::vector<double> predict_unconditional(const EnsembleModel& ensemble, const LabelTree& tree,
                                          std::span<const double> x);
Matrix predict_unconditional(const EnsembleModel& ensemble, const LabelTree& tree,
                             const Matrix& features);

}  // namespace hmlc
