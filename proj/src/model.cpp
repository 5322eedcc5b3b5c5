#include "hmlc/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hmlc/error.hpp"
#include "hmlc/rng.hpp"

namespace hmlc {
namespace {

double sigmoid(double z) {
  double p;
  if (z >= 0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  // Keep the open interval even when exp saturates.
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - 0x1.0p-53;
  return std::clamp(p, lo, hi);
}

// Pre-activations and activations of every layer for one input.
struct Trace {
  std::vector<std::vector<double>> pre;   // z_l
  std::vector<std::vector<double>> post;  // a_l; post[0] is the input
};

Trace run(const Mlp& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw DataError("forward: input has " + std::to_string(x.size()) + " features, model expects " +
                    std::to_string(model.input_dim()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("forward: non-finite input");
  }
  const auto layers = model.layers();
  Trace t;
  t.pre.resize(layers.size());
  t.post.resize(layers.size() + 1);
  t.post[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    const auto& in = t.post[l];
    auto& z = t.pre[l];
    z.assign(layer.bias.begin(), layer.bias.end());
    for (std::size_t o = 0; o < layer.outputs(); ++o) {
      const auto w = layer.weights.row(o);
      double acc = z[o];
      for (std::size_t i = 0; i < in.size(); ++i) acc += w[i] * in[i];
      z[o] = acc;
    }
    auto& a = t.post[l + 1];
    a.resize(z.size());
    const bool last = l + 1 == layers.size();
    for (std::size_t o = 0; o < z.size(); ++o) a[o] = last ? sigmoid(z[o]) : std::max(0.0, z[o]);
  }
  return t;
}

void check_targets(std::size_t k, std::span<const double> targets,
                   std::span<const std::uint8_t> mask) {
  if (targets.size() != k || mask.size() != k) {
    throw DataError("loss: expected " + std::to_string(k) + " targets and mask entries, got " +
                    std::to_string(targets.size()) + " and " + std::to_string(mask.size()));
  }
}

}  // namespace

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("mlp: at least one layer is required");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    if (layer.bias.size() != layer.outputs() || layer.outputs() == 0 || layer.inputs() == 0) {
      throw ConfigError("mlp: layer " + std::to_string(l) + " has inconsistent shape");
    }
    if (l > 0 && layers_[l - 1].outputs() != layer.inputs()) {
      throw ConfigError("mlp: layer " + std::to_string(l) + " input size does not match layer " +
                        std::to_string(l - 1) + " output size");
    }
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(layer.weights.values().begin(), layer.weights.values().end(), finite) ||
        !std::all_of(layer.bias.begin(), layer.bias.end(), finite)) {
      throw ConfigError("mlp: layer " + std::to_string(l) + " has non-finite parameters");
    }
  }
}

Mlp Mlp::zeros(std::size_t inputs, std::span<const std::size_t> hidden, std::size_t outputs) {
  std::vector<Layer> layers;
  std::size_t in = inputs;
  for (std::size_t h : hidden) {
    layers.push_back({Matrix(h, in, 0.0), std::vector<double>(h, 0.0), false});
    in = h;
  }
  layers.push_back({Matrix(outputs, in, 0.0), std::vector<double>(outputs, 0.0), false});
  return Mlp(std::move(layers));
}

Mlp Mlp::create(std::size_t inputs, std::span<const std::size_t> hidden, std::size_t outputs,
                std::uint64_t seed) {
  Mlp model = zeros(inputs, hidden, outputs);
  Rng rng(derive_seed(seed, Stream::kInit));
  for (Layer& layer : model.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.inputs()));
    for (double& w : layer.weights.values()) w = rng.uniform(-bound, bound);
  }
  return model;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

Gradients Gradients::zeros_like(const Mlp& model) {
  Gradients g;
  for (const Layer& l : model.layers()) {
    g.weights.emplace_back(l.outputs(), l.inputs(), 0.0);
    g.bias.emplace_back(l.outputs(), 0.0);
  }
  return g;
}

void Gradients::scale(double factor) {
  for (auto& w : weights) {
    for (double& v : w.values()) v *= factor;
  }
  for (auto& b : bias) {
    for (double& v : b) v *= factor;
  }
}

std::vector<double> forward(const Mlp& model, std::span<const double> x) {
  return std::move(run(model, x).post.back());
}

double masked_bce(std::span<const double> probs, std::span<const double> targets,
                  std::span<const std::uint8_t> mask) {
  check_targets(probs.size(), targets, mask);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (!mask[k]) continue;
    const double p = std::clamp(probs[k], kProbClamp, 1.0 - kProbClamp);
    const double y = targets[k];
    sum += y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    ++count;
  }
  return count == 0 ? 0.0 : -sum / static_cast<double>(count);
}

double accumulate_gradients(const Mlp& model, std::span<const double> x,
                            std::span<const double> targets, std::span<const std::uint8_t> mask,
                            double scale, Gradients& grads) {
  const Trace t = run(model, x);
  const auto& probs = t.post.back();
  check_targets(probs.size(), targets, mask);
  const double loss = masked_bce(probs, targets, mask);

  const auto count = static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(),
                                                            [](std::uint8_t m) { return m != 0; }));
  if (count == 0) return loss;

  const auto layers = model.layers();
  std::vector<double> delta(probs.size(), 0.0);
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (mask[k]) delta[k] = (probs[k] - targets[k]) / static_cast<double>(count);
  }
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Layer& layer = layers[l];
    const auto& in = t.post[l];
    Matrix& gw = grads.weights[l];
    auto& gb = grads.bias[l];
    for (std::size_t o = 0; o < layer.outputs(); ++o) {
      const double d = delta[o] * scale;
      if (d == 0.0) continue;
      gb[o] += d;
      auto row = gw.row(o);
      for (std::size_t i = 0; i < in.size(); ++i) row[i] += d * in[i];
    }
    if (l == 0) break;
    std::vector<double> prev(layer.inputs(), 0.0);
    for (std::size_t o = 0; o < layer.outputs(); ++o) {
      if (delta[o] == 0.0) continue;
      const auto w = layer.weights.row(o);
      for (std::size_t i = 0; i < prev.size(); ++i) prev[i] += w[i] * delta[o];
    }
    const auto& z = t.pre[l - 1];
    for (std::size_t i = 0; i < prev.size(); ++i) {
      if (z[i] <= 0.0) prev[i] = 0.0;
    }
    delta = std::move(prev);
  }
  return loss;
}

Gradients backward(const Mlp& model, std::span<const double> x, std::span<const double> targets,
                   std::span<const std::uint8_t> mask) {
  Gradients g = Gradients::zeros_like(model);
  accumulate_gradients(model, x, targets, mask, 1.0, g);
  return g;
}

void OptimizerConfig::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("optimizer: beta1 and beta2 must lie in [0, 1)");
  }
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw ConfigError("optimizer: lr0 must be > 0");
  if (!(epsilon > 0.0)) throw ConfigError("optimizer: epsilon must be > 0");
  if (!(decay_factor > 0.0) || !std::isfinite(decay_factor)) {
    throw ConfigError("optimizer: decay_factor must be > 0");
  }
  if (batch_size == 0) throw ConfigError("optimizer: batch_size must be >= 1");
}

AdamState AdamState::for_model(const Mlp& model) {
  AdamState s;
  for (const Layer& l : model.layers()) {
    s.m_weights.emplace_back(l.outputs(), l.inputs(), 0.0);
    s.v_weights.emplace_back(l.outputs(), l.inputs(), 0.0);
    s.m_bias.emplace_back(l.outputs(), 0.0);
    s.v_bias.emplace_back(l.outputs(), 0.0);
  }
  return s;
}

void adam_step(Mlp& model, AdamState& state, const Gradients& grads, const OptimizerConfig& config,
               double lr) {
  auto layers = model.layers();
  const std::size_t n = layers.size();
  if (grads.weights.size() != n || grads.bias.size() != n || state.m_weights.size() != n ||
      state.v_weights.size() != n || state.m_bias.size() != n || state.v_bias.size() != n) {
    throw DataError("adam_step: layer count mismatch");
  }
  for (std::size_t l = 0; l < n; ++l) {
    const Layer& layer = layers[l];
    const auto rows = layer.outputs(), cols = layer.inputs();
    if (!grads.weights[l].same_shape(rows, cols) || grads.bias[l].size() != rows ||
        !state.m_weights[l].same_shape(rows, cols) || !state.v_weights[l].same_shape(rows, cols) ||
        state.m_bias[l].size() != rows || state.v_bias[l].size() != rows) {
      throw DataError("adam_step: shape mismatch in layer " + std::to_string(l));
    }
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(grads.weights[l].values().begin(), grads.weights[l].values().end(), finite) ||
        !std::all_of(grads.bias[l].begin(), grads.bias[l].end(), finite)) {
      throw NumericError("adam_step: non-finite gradient in layer " + std::to_string(l));
    }
  }

  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  const auto update = [&](double& param, double& m, double& v, double g) {
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g * g;
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    param -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
  };
  for (std::size_t l = 0; l < n; ++l) {
    Layer& layer = layers[l];
    if (layer.frozen) continue;
    auto& w = layer.weights.values();
    const auto& gw = grads.weights[l].values();
    auto& mw = state.m_weights[l].values();
    auto& vw = state.v_weights[l].values();
    for (std::size_t i = 0; i < w.size(); ++i) update(w[i], mw[i], vw[i], gw[i]);
    for (std::size_t i = 0; i < layer.bias.size(); ++i) {
      update(layer.bias[i], state.m_bias[l][i], state.v_bias[l][i], grads.bias[l][i]);
    }
  }
}

Mlp freeze_all_but_last(Mlp model) {
  auto layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) layers[l].frozen = l + 1 < layers.size();
  return model;
}

double lr_schedule(const OptimizerConfig& config, std::size_t epoch) {
  return config.lr0 * std::pow(config.decay_factor, static_cast<double>(epoch));
}

}  // namespace hmlc
