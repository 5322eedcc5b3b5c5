#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hmlc/grid.hpp"

namespace hmlc {

// Fully connected layer: out = weights * in + bias. weights is out x in.
struct Layer {
  Matrix weights;
  std::vector<double> bias;
  bool frozen = false;

  std::size_t inputs() const noexcept { return weights.cols(); }
  std::size_t outputs() const noexcept { return weights.rows(); }

  friend bool operator==(const Layer&, const Layer&) = default;
};

// Feed-forward multi-label classifier: ReLU hidden layers, sigmoid outputs.
class Mlp {
 public:
  Mlp() = default;
  // Throws ConfigError if the layer shapes do not chain or a value is non-finite.
  explicit Mlp(std::vector<Layer> layers);

  // Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
  static Mlp create(std::size_t inputs, std::span<const std::size_t> hidden, std::size_t outputs,
                    std::uint64_t seed);
  static Mlp zeros(std::size_t inputs, std::span<const std::size_t> hidden, std::size_t outputs);

  std::size_t input_dim() const { return layers_.front().inputs(); }
  std::size_t output_dim() const { return layers_.back().outputs(); }
  std::size_t depth() const noexcept { return layers_.size(); }
  std::size_t parameter_count() const;

  std::span<const Layer> layers() const noexcept { return layers_; }
  std::span<Layer> layers() noexcept { return layers_; }

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::vector<Layer> layers_;
};

// Same shapes as the model's parameters.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;

  static Gradients zeros_like(const Mlp& model);
  void scale(double factor);
};

// Probabilities kept inside masked_bce's log arguments.
inline constexpr double kProbClamp = 1e-7;

// Sigmoid probabilities, each strictly inside (0, 1). Throws DataError on a
// dimension mismatch or non-finite input.
std::vector<double> forward(const Mlp& model, std::span<const double> x);

// Mean binary cross-entropy over masked-in labels (0 when none are).
// Probabilities are clamped to [1e-7, 1 - 1e-7].
double masked_bce(std::span<const double> probs, std::span<const double> targets,
                  std::span<const std::uint8_t> mask);

// Gradient of masked_bce(forward(model, x), targets, mask) with respect to
// every parameter, frozen layers included. The output-unit term is p - y,
// i.e. the clamp is treated as the identity.
Gradients backward(const Mlp& model, std::span<const double> x, std::span<const double> targets,
                   std::span<const std::uint8_t> mask);

// backward() accumulated into `grads` with weight `scale`; returns the
// example's loss. Used by the training loop to avoid per-row allocation.
double accumulate_gradients(const Mlp& model, std::span<const double> x,
                            std::span<const double> targets, std::span<const std::uint8_t> mask,
                            double scale, Gradients& grads);

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double lr0 = 1e-4;
  double epsilon = 1e-8;
  double decay_factor = 0.1;  // lr multiplier applied after each epoch
  std::size_t batch_size = 32;
  std::size_t iterations = 50000;
  std::uint64_t seed = 0;

  // Throws ConfigError when a field is out of range.
  void validate() const;
};

struct AdamState {
  std::vector<Matrix> m_weights, v_weights;
  std::vector<std::vector<double>> m_bias, v_bias;
  std::uint64_t t = 0;

  static AdamState for_model(const Mlp& model);

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

// Bias-corrected Adam update of every non-frozen layer. Frozen layers keep
// both parameters and moments; t advances regardless. Throws NumericError
// on a non-finite gradient, DataError on a shape mismatch.
void adam_step(Mlp& model, AdamState& state, const Gradients& grads, const OptimizerConfig& config,
               double lr);

// Marks every layer except the last as frozen.
Mlp freeze_all_but_last(Mlp model);

// lr0 * decay_factor^epoch.
double lr_schedule(const OptimizerConfig& config, std::size_t epoch);

}  // namespace hmlc
