#include "hmlc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "hmlc/error.hpp"
#include "hmlc/rng.hpp"

namespace hmlc {
namespace {

std::uint64_t shuffle_seed_for(const TrainPlan& plan, std::uint64_t stage_tag) {
  return mix64(derive_seed(plan.optimizer.seed, Stream::kShuffle) ^ stage_tag);
}

constexpr std::uint64_t kStage1Tag = 1;
constexpr std::uint64_t kStage2Tag = 2;

void check_dataset(const Dataset& data, const Mlp& model) {
  data.validate();
  if (data.features.cols() != model.input_dim()) {
    throw DataError("training: dataset has " + std::to_string(data.features.cols()) +
                    " features, model expects " + std::to_string(model.input_dim()));
  }
  if (data.labels.cols() != model.output_dim()) {
    throw DataError("training: dataset has " + std::to_string(data.labels.cols()) +
                    " labels, model outputs " + std::to_string(model.output_dim()));
  }
}

}  // namespace

PolicyTargets prepare_targets(const Dataset& data, const TrainPlan& plan) {
  const std::uint64_t seed = derive_seed(plan.optimizer.seed, Stream::kPolicy);
  if (plan.missing_as_negative) return apply_policy(missing_as_negative(data.labels), plan.policy, seed);
  return apply_policy(data.labels, plan.policy, seed);
}

Mlp train_masked(Mlp model, const Matrix& features, const Matrix& targets, const LossMask& mask,
                 const OptimizerConfig& optimizer, std::size_t iterations,
                 std::uint64_t shuffle_seed, std::string_view stage, TrainLog* log,
                 AdamState* final_state) {
  optimizer.validate();
  if (!targets.same_shape(features.rows(), model.output_dim()) || !mask.same_shape(targets)) {
    throw DataError("training: targets/mask shape does not match the data");
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < mask.rows(); ++i) {
    const auto m = mask.row(i);
    if (std::any_of(m.begin(), m.end(), [](std::uint8_t v) { return v != 0; })) rows.push_back(i);
  }
  if (rows.empty()) {
    throw DataError(std::string(stage) + ": empty effective training signal (every label masked out)");
  }
  Rng rng(shuffle_seed);
  AdamState state = AdamState::for_model(model);
  if (iterations == 0) {
    if (final_state) *final_state = std::move(state);
    return model;
  }
  Gradients grads = Gradients::zeros_like(model);

  std::size_t epoch = 0;
  std::size_t cursor = rows.size();  // forces a shuffle before the first batch
  double epoch_loss = 0.0;
  std::size_t epoch_rows = 0, epoch_steps = 0;
  const auto flush = [&] {
    if (log && epoch_steps > 0) {
      log->push_back({std::string(stage), epoch, epoch_steps, lr_schedule(optimizer, epoch),
                      epoch_loss / static_cast<double>(epoch_rows)});
    }
    epoch_loss = 0.0;
    epoch_rows = epoch_steps = 0;
  };

  for (std::size_t step = 0; step < iterations; ++step) {
    if (cursor == rows.size()) {
      if (step > 0) {
        flush();
        ++epoch;
      }
      rng.shuffle(std::span<std::size_t>(rows));
      cursor = 0;
    }
    const std::size_t batch = std::min(optimizer.batch_size, rows.size() - cursor);
    const double scale = 1.0 / static_cast<double>(batch);
    for (auto& w : grads.weights) std::fill(w.values().begin(), w.values().end(), 0.0);
    for (auto& b : grads.bias) std::fill(b.begin(), b.end(), 0.0);
    for (std::size_t j = 0; j < batch; ++j) {
      const std::size_t i = rows[cursor + j];
      const double loss =
          accumulate_gradients(model, features.row(i), targets.row(i), mask.row(i), scale, grads);
      if (!std::isfinite(loss)) {
        throw NumericError(std::string(stage) + ": non-finite loss at step " + std::to_string(step));
      }
      epoch_loss += loss;
    }
    cursor += batch;
    epoch_rows += batch;
    ++epoch_steps;
    adam_step(model, state, grads, optimizer, lr_schedule(optimizer, epoch));
  }
  flush();
  if (final_state) *final_state = std::move(state);
  return model;
}

Mlp train_stage1(Mlp model, const Dataset& data, const LabelTree& tree, const TrainPlan& plan,
                 TrainLog* log, AdamState* final_state) {
  check_dataset(data, model);
  PolicyTargets pt = prepare_targets(data, plan);
  const LossMask cond = conditional_mask(data.labels, tree);
  for (std::size_t i = 0; i < pt.mask.size(); ++i) pt.mask.values()[i] &= cond.values()[i];
  return train_masked(std::move(model), data.features, pt.targets, pt.mask, plan.optimizer,
                      plan.stage1_iterations, shuffle_seed_for(plan, kStage1Tag), "stage1", log,
                      final_state);
}

Mlp train_stage2(Mlp model, const Dataset& data, const TrainPlan& plan, TrainLog* log,
                 AdamState* final_state) {
  check_dataset(data, model);
  model = freeze_all_but_last(std::move(model));
  const Mlp before = model;
  const PolicyTargets pt = prepare_targets(data, plan);
  Mlp after = train_masked(std::move(model), data.features, pt.targets, pt.mask, plan.optimizer,
                           plan.stage2_iterations, shuffle_seed_for(plan, kStage2Tag), "stage2", log,
                           final_state);
  const auto a = after.layers();
  const auto b = before.layers();
  for (std::size_t l = 0; l + 1 < a.size(); ++l) {
    if (!(a[l] == b[l])) {
      throw NumericError("stage2: frozen layer " + std::to_string(l) + " changed during finetuning");
    }
  }
  return after;
}

Mlp train_flat(Mlp model, const Dataset& data, const TrainPlan& plan, TrainLog* log,
               AdamState* final_state) {
  check_dataset(data, model);
  const PolicyTargets pt = prepare_targets(data, plan);
  return train_masked(std::move(model), data.features, pt.targets, pt.mask, plan.optimizer,
                      plan.optimizer.iterations, shuffle_seed_for(plan, kStage1Tag), "flat", log,
                      final_state);
}

MemberRun train_member(const Dataset& data, const LabelTree& tree, const TrainPlan& plan,
                       std::span<const std::size_t> hidden, std::uint64_t seed) {
  TrainPlan p = plan;
  p.optimizer.seed = seed;
  Mlp init = Mlp::create(data.features.cols(), hidden, tree.size(), seed);
  MemberRun run;
  if (p.conditional) {
    AdamState stage1_state;
    run.stage1 = train_stage1(std::move(init), data, tree, p, &run.log, &stage1_state);
    run.stage1_optimizer = std::move(stage1_state);
    run.model = train_stage2(*run.stage1, data, p, &run.log, &run.optimizer);
  } else {
    run.model = train_flat(std::move(init), data, p, &run.log, &run.optimizer);
  }
  return run;
}

std::uint64_t member_seed(std::uint64_t seed, std::size_t i) {
  return mix64(derive_seed(seed, Stream::kMember) + i);
}

std::vector<MemberRun> train_ensemble(const Dataset& data, const LabelTree& tree,
                                      const TrainPlan& plan, std::span<const std::size_t> hidden,
                                      std::size_t members, std::uint64_t seed, std::size_t threads) {
  if (members == 0) throw ConfigError("ensemble size must be >= 1");
  std::vector<std::optional<MemberRun>> runs(members);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < members; i = next++) {
      try {
        runs[i] = train_member(data, tree, plan, hidden, member_seed(seed, i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, members);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<MemberRun> out;
  out.reserve(members);
  for (auto& r : runs) out.push_back(std::move(*r));
  return out;
}

EnsembleModel::EnsembleModel(std::vector<Mlp> members) : members_(std::move(members)) {
  if (members_.empty()) throw ConfigError("ensemble: at least one member is required");
  for (const Mlp& m : members_) {
    if (m.output_dim() != members_.front().output_dim() ||
        m.input_dim() != members_.front().input_dim()) {
      throw ConfigError("ensemble: members disagree on input or output size");
    }
  }
}

double average(std::span<const double> values) {
  if (values.empty()) throw ConfigError("average of no values");
  // Neumaier summation into (hi, lo).
  double hi = 0.0, lo = 0.0;
  for (double v : values) {
    const double s = hi + v;
    lo += std::abs(hi) >= std::abs(v) ? (hi - s) + v : (v - s) + hi;
    hi = s;
  }
  const double n = static_cast<double>(values.size());
  const double q = hi / n;
  const double remainder = std::fma(-q, n, hi);  // exact
  return q + (remainder + lo) / n;
}

std::vector<double> predict_unconditional(const EnsembleModel& ensemble, const LabelTree& tree,
                                          std::span<const double> x) {
  if (ensemble.output_dim() != tree.size()) {
    throw DataError("predict: ensemble outputs " + std::to_string(ensemble.output_dim()) +
                    " labels, hierarchy has " + std::to_string(tree.size()));
  }
  const auto members = ensemble.members();
  std::vector<std::vector<double>> per_member;
  per_member.reserve(members.size());
  for (const Mlp& m : members) per_member.push_back(propagate(tree, forward(m, x)));
  std::vector<double> out(tree.size());
  std::vector<double> column(members.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (std::size_t j = 0; j < members.size(); ++j) column[j] = per_member[j][k];
    out[k] = average(column);
  }
  return out;
}

Matrix predict_unconditional(const EnsembleModel& ensemble, const LabelTree& tree,
                             const Matrix& features) {
  Matrix out(features.rows(), tree.size());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto p = predict_unconditional(ensemble, tree, features.row(i));
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace hmlc
