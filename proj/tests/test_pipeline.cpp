#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hmlc/error.hpp"
#include "hmlc/eval.hpp"
#include "hmlc/pipeline.hpp"

using namespace hmlc;

namespace {

const std::vector<std::size_t> kHidden{8};

LabelTree chain_ab() { return build_tree(std::vector<NodeSpec>{{"A", {}, {}}, {"B", "A", {}}}); }

LabelTree flat_forest() {
  return build_tree(std::vector<NodeSpec>{{"A", {}, {}}, {"B", {}, {}}, {"C", {}, {}}});
}

Dataset synthetic(const LabelTree& tree, std::vector<double> theta, std::size_t n, std::uint64_t seed,
                  double noise = 0.5) {
  SyntheticSpec spec;
  spec.tree = tree;
  spec.theta = std::move(theta);
  spec.feature_dim = 8;
  spec.feature_noise = noise;
  spec.projection_seed = 17;
  return generate_synthetic(spec, n, seed).dataset;
}

TrainPlan quick_plan(std::size_t iterations) {
  TrainPlan p;
  p.policy = UncertaintyPolicy::ones();
  p.optimizer.lr0 = 0.01;
  p.optimizer.decay_factor = 0.9;
  p.optimizer.iterations = iterations;
  p.optimizer.seed = 4;
  p.stage1_iterations = iterations;
  p.stage2_iterations = iterations;
  return p;
}

std::vector<double> column_scores(const Matrix& probs, std::size_t k) {
  std::vector<double> out;
  for (std::size_t i = 0; i < probs.rows(); ++i) out.push_back(probs(i, k));
  return out;
}

std::vector<std::uint8_t> column_truth(const LabelMatrix& labels, std::size_t k) {
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < labels.rows(); ++i) out.push_back(labels(i, k) == Label::kPos);
  return out;
}

}  // namespace

TEST(Pipeline, Stage1IgnoresChildLossWhenParentNegative) {
  // Rows with A = NEG carry B labels that would pull B's output to 1 if used.
  const LabelTree tree = chain_ab();
  Dataset d = synthetic(tree, {0.5, 0.5}, 400, 1);
  Dataset poisoned = d;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    if (d.labels(i, 0) == Label::kNeg) poisoned.labels(i, 1) = Label::kPos;
  }
  const TrainPlan plan = quick_plan(200);
  const Mlp init = Mlp::create(8, kHidden, 2, 3);
  EXPECT_EQ(train_stage1(init, d, tree, plan), train_stage1(init, poisoned, tree, plan));
  EXPECT_NE(train_flat(init, d, plan), train_flat(init, poisoned, plan));
}

TEST(Pipeline, Stage1EqualsFlatOnRootsOnlyForest) {
  const LabelTree tree = flat_forest();
  const Dataset d = synthetic(tree, {0.3, 0.5, 0.7}, 300, 2);
  const TrainPlan plan = quick_plan(150);
  const Mlp init = Mlp::create(8, kHidden, 3, 5);
  EXPECT_EQ(train_stage1(init, d, tree, plan), train_flat(init, d, plan));
}

TEST(Pipeline, TrainingIsDeterministic) {
  const LabelTree tree = chain_ab();
  const Dataset d = synthetic(tree, {0.6, 0.5}, 300, 3);
  const TrainPlan plan = quick_plan(120);
  const Mlp init = Mlp::create(8, kHidden, 2, 9);
  EXPECT_EQ(train_flat(init, d, plan), train_flat(init, d, plan));
  const auto a = train_member(d, tree, plan, kHidden, 77);
  const auto b = train_member(d, tree, plan, kHidden, 77);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.optimizer, b.optimizer);
  ASSERT_EQ(a.log.size(), b.log.size());
}

TEST(Pipeline, EmptyTrainingSignalIsAnError) {
  const LabelTree tree = chain_ab();
  Dataset d = synthetic(tree, {0.5, 0.5}, 50, 1);
  for (Label& l : d.labels.values()) l = Label::kUnc;
  TrainPlan plan = quick_plan(10);
  plan.policy = UncertaintyPolicy::ignore();
  const Mlp init = Mlp::create(8, kHidden, 2, 1);
  EXPECT_THROW(train_flat(init, d, plan), DataError);
  EXPECT_THROW(train_stage1(init, d, tree, plan), DataError);
}

TEST(Pipeline, ShapeMismatchIsAnError) {
  const LabelTree tree = chain_ab();
  const Dataset d = synthetic(tree, {0.5, 0.5}, 50, 1);
  EXPECT_THROW(train_flat(Mlp::create(7, kHidden, 2, 1), d, quick_plan(5)), DataError);
  EXPECT_THROW(train_flat(Mlp::create(8, kHidden, 3, 1), d, quick_plan(5)), DataError);
}

TEST(Pipeline, Stage2WithZeroIterationsOnlyFreezes) {
  const LabelTree tree = chain_ab();
  const Dataset d = synthetic(tree, {0.5, 0.5}, 100, 1);
  TrainPlan plan = quick_plan(50);
  const Mlp s1 = train_stage1(Mlp::create(8, kHidden, 2, 2), d, tree, plan);
  plan.stage2_iterations = 0;
  EXPECT_EQ(train_stage2(s1, d, plan), freeze_all_but_last(s1));
}

TEST(Pipeline, Stage2KeepsHiddenLayers) {
  const LabelTree tree = chain_ab();
  const Dataset d = synthetic(tree, {0.5, 0.5}, 300, 1);
  const TrainPlan plan = quick_plan(100);
  const Mlp s1 = train_stage1(Mlp::create(8, kHidden, 2, 2), d, tree, plan);
  const Mlp s2 = train_stage2(s1, d, plan);
  EXPECT_EQ(s2.layers()[0].weights, s1.layers()[0].weights);
  EXPECT_EQ(s2.layers()[0].bias, s1.layers()[0].bias);
  EXPECT_NE(s2.layers()[1].weights, s1.layers()[1].weights);
}

TEST(Pipeline, LossLogCoversEveryStep) {
  const LabelTree tree = chain_ab();
  const Dataset d = synthetic(tree, {0.5, 0.5}, 100, 1);
  TrainPlan plan = quick_plan(30);
  plan.optimizer.batch_size = 32;
  TrainLog log;
  train_flat(Mlp::create(8, kHidden, 2, 2), d, plan, &log);
  std::size_t steps = 0;
  for (const auto& e : log) {
    steps += e.steps;
    EXPECT_TRUE(std::isfinite(e.mean_loss));
    EXPECT_DOUBLE_EQ(e.lr, lr_schedule(plan.optimizer, e.epoch));
  }
  EXPECT_EQ(steps, 30u);
  // 100 rows in batches of 32 is 4 steps per epoch.
  EXPECT_EQ(log.front().steps, 4u);
  EXPECT_EQ(log.size(), 8u);
}

TEST(Pipeline, Stage1RecoversConditionalProbability) {
  // Chain A -> B with theta_B = 0.5: on held-out rows with A positive the
  // stage-1 output for B estimates P(B | A).
  const LabelTree tree = chain_ab();
  const double theta_b = 0.5;
  const Dataset train = synthetic(tree, {0.6, theta_b}, 5000, 11);
  const Dataset test = synthetic(tree, {0.6, theta_b}, 4000, 12);
  TrainPlan plan = quick_plan(2000);
  const Mlp s1 = train_stage1(Mlp::create(8, std::vector<std::size_t>{16}, 2, 3), train, tree, plan);
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < test.rows(); ++i) {
    if (test.labels(i, 0) != Label::kPos) continue;
    sum += forward(s1, test.features.row(i))[1];
    ++count;
  }
  EXPECT_NEAR(sum / static_cast<double>(count), theta_b, 0.05);
}

TEST(Pipeline, Stage2DoesNotHurtRootAuc) {
  const LabelTree tree = chain_ab();
  const Dataset train = synthetic(tree, {0.6, 0.5}, 3000, 21, 1.5);
  const Dataset test = synthetic(tree, {0.6, 0.5}, 3000, 22, 1.5);
  const TrainPlan plan = quick_plan(1000);
  const Mlp s1 = train_stage1(Mlp::create(8, kHidden, 2, 4), train, tree, plan);
  const Mlp s2 = train_stage2(s1, train, plan);
  const auto root_auc = [&](const Mlp& m) {
    std::vector<double> scores;
    for (std::size_t i = 0; i < test.rows(); ++i) scores.push_back(forward(m, test.features.row(i))[0]);
    return auc(scores, column_truth(test.labels, 0));
  };
  EXPECT_GE(root_auc(s2), root_auc(s1) - 0.02);
}

TEST(Pipeline, AverageIsExactForIdenticalValues) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const double x = u(gen);
    const std::vector<double> same(1 + gen() % 12, x);
    ASSERT_EQ(average(same), x);
  }
  EXPECT_THROW(average(std::vector<double>{}), ConfigError);
}

TEST(Pipeline, AverageOfTwoWithinOneUlp) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const double a = u(gen), b = u(gen);
    const long double exact = (static_cast<long double>(a) + b) / 2;
    const double got = average(std::vector<double>{a, b});
    const double ulp = std::nextafter(got, 2.0) - got;
    ASSERT_LE(std::abs(static_cast<long double>(got) - exact), ulp);
  }
}

TEST(Pipeline, AverageIsBoundedAndMonotone) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5000; ++trial) {
    std::vector<double> v(1 + gen() % 8);
    for (double& x : v) x = u(gen);
    const double m = average(v);
    ASSERT_GE(m, *std::min_element(v.begin(), v.end()));
    ASSERT_LE(m, *std::max_element(v.begin(), v.end()));
    std::vector<double> lower = v;
    for (double& x : lower) x *= u(gen);
    ASSERT_LE(average(lower), m);
  }
}

TEST(Pipeline, EnsemblePrediction) {
  const LabelTree tree = chain_ab();
  const Mlp a = Mlp::create(8, kHidden, 2, 1);
  const Mlp b = Mlp::create(8, kHidden, 2, 2);
  const std::vector<double> x{0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8};
  const auto pa = propagate(tree, forward(a, x));
  const auto pb = propagate(tree, forward(b, x));
  EXPECT_EQ(predict_unconditional(EnsembleModel({a}), tree, x), pa);
  EXPECT_EQ(predict_unconditional(EnsembleModel({a, a, a, a, a, a}), tree, x), pa);
  const auto both = predict_unconditional(EnsembleModel({a, b}), tree, x);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_NEAR(both[k], (pa[k] + pb[k]) / 2, 1e-16);
    EXPECT_GE(both[k], std::min(pa[k], pb[k]));
    EXPECT_LE(both[k], std::max(pa[k], pb[k]));
  }
  EXPECT_LE(both[1], both[0]);
  EXPECT_THROW(EnsembleModel({}), ConfigError);
  EXPECT_THROW(EnsembleModel({a, Mlp::create(7, kHidden, 2, 1)}), ConfigError);
}

TEST(Pipeline, EnsembleThreadCountDoesNotChangeResults) {
  const LabelTree tree = chain_ab();
  const Dataset d = synthetic(tree, {0.6, 0.5}, 200, 3);
  const TrainPlan plan = quick_plan(60);
  const auto serial = train_ensemble(d, tree, plan, kHidden, 3, 99, 1);
  const auto parallel = train_ensemble(d, tree, plan, kHidden, 3, 99, 3);
  ASSERT_EQ(serial.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(serial[i].model, parallel[i].model);
  EXPECT_NE(serial[0].model, serial[1].model);
}

TEST(Pipeline, EnsembleMonotoneAlongHierarchy) {
  const LabelTree tree =
      build_tree(std::vector<NodeSpec>{{"A", {}, {}}, {"B", "A", {}}, {"C", "B", {}}, {"D", "A", {}}});
  std::vector<Mlp> members;
  for (std::uint64_t s = 0; s < 5; ++s) members.push_back(Mlp::create(3, kHidden, 4, s));
  const EnsembleModel ens(members);
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::vector<double> x{n(gen), n(gen), n(gen)};
    const auto p = predict_unconditional(ens, tree, x);
    for (std::size_t k = 0; k < tree.size(); ++k) {
      if (auto parent = tree.node(k).parent) ASSERT_LE(p[k], p[*parent]);
    }
  }
}
