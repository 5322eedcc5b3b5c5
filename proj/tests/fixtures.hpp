#pragma once

// Random inputs shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "hmlc/hierarchy.hpp"
#include "hmlc/model.hpp"

namespace hmlc::fixture {

// Random forest on k nodes: node i picks a parent among earlier nodes or none,
// then indices are shuffled so parents do not always precede children.
inline LabelTree random_forest(std::mt19937_64& gen, std::size_t k) {
  std::vector<std::size_t> perm(k);
  for (std::size_t i = 0; i < k; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), gen);
  std::vector<NodeSpec> specs;
  for (std::size_t i = 0; i < k; ++i) {
    NodeSpec s{"n" + std::to_string(i), {}, perm[i]};
    if (i > 0 && gen() % 4 != 0) s.parent = "n" + std::to_string(gen() % i);
    specs.push_back(s);
  }
  return build_tree(specs);
}

struct ModelInstance {
  Mlp model;
  std::vector<double> x, targets;
  std::vector<std::uint8_t> mask;
};

inline ModelInstance random_model_instance(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), t(0.0, 1.0);
  const std::size_t in = 2 + gen() % 4, out = 1 + gen() % 4;
  std::vector<std::size_t> hidden;
  for (std::size_t h = gen() % 3; h > 0; --h) hidden.push_back(2 + gen() % 5);
  ModelInstance inst{Mlp::create(in, hidden, out, gen()), {}, {}, {}};
  for (auto& layer : inst.model.layers()) {
    for (double& b : layer.bias) b = 0.3 * u(gen);
  }
  for (std::size_t i = 0; i < in; ++i) inst.x.push_back(2.0 * u(gen));
  for (std::size_t k = 0; k < out; ++k) {
    inst.targets.push_back(t(gen));
    inst.mask.push_back(gen() % 4 != 0);
  }
  return inst;
}

}  // namespace hmlc::fixture
