#pragma once

#include <cstdint>
#include <vector>

#include "dvis/grid.hpp"

namespace dvis {

enum class LayerKind { conv, relu, upsample, global_avg_pool };

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int kernel = 3;
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  int factor = 1;  // upsample factor

  static LayerSpec conv(int in, int out, int kernel = 3, int stride = 1) {
    return {LayerKind::conv, kernel, in, out, stride, 1};
  }
  static LayerSpec relu() { return {LayerKind::relu, 0, 0, 0, 1, 1}; }
  static LayerSpec upsample(int factor) { return {LayerKind::upsample, 0, 0, 0, 1, factor}; }
  static LayerSpec global_avg_pool() { return {LayerKind::global_avg_pool, 0, 0, 0, 1, 1}; }

  bool operator==(const LayerSpec&) const = default;
};

// A chain of layers. Convolutions use zero "same" padding (kernel / 2), so a
// stride-s convolution maps HxW to (H/s)x(W/s).
struct NetConfig {
  int input_channels = 3;
  std::vector<LayerSpec> layers;
  std::uint64_t init_seed = 0;
  double input_offset = 0.0;  // subtracted from every input value before the first layer

  // Product of strides divided by the product of upsample factors.
  int downsample_factor() const;
  int output_channels() const;
  // Channel chaining and positive sizes.
  void validate() const;
  // validate() plus: one output channel, ends with a ReLU.
  void validate_segmentation() const;

  // 6 conv layers, widths 16-32-32-32-16-1, stride 2 on the second layer.
  static NetConfig segmentation_default(int input_channels = 3, std::uint64_t seed = 0);

  bool operator==(const NetConfig&) const = default;
};

struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, double fill = 0.0);
  bool operator==(const Tensor&) const = default;
};

// Weight [out, in, k, k] and bias [out]; both empty for parameter-free layers.
struct LayerParams {
  Tensor weight;
  Tensor bias;
  bool operator==(const LayerParams&) const = default;
};

struct ParamSet {
  NetConfig config;
  std::vector<LayerParams> layers;
  std::uint64_t version = 0;  // changes whenever the optimizer rewrites the weights

  std::size_t parameter_count() const;
  // Flat view over all weights then biases, layer by layer.
  double& parameter(std::size_t i);
  double parameter(std::size_t i) const;
  // Assigns a fresh version so existing tapes become stale.
  void touch();
};

// Parameter gradients, laid out like ParamSet::layers.
struct Gradients {
  std::vector<LayerParams> layers;

  std::size_t parameter_count() const;
  double parameter(std::size_t i) const;
};

struct Tape {
  std::uint64_t version = 0;
  std::vector<ImageGrid> inputs;  // input of every layer
  int output_height = 0;
  int output_width = 0;
  int output_channels = 0;
};

struct ForwardResult {
  ImageGrid output;
  Tape tape;
};

struct OptState {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;  // applied to conv weights, not biases
  std::vector<LayerParams> buffers;
};

// He-scaled normal weights (std sqrt(2 / fan_in)), zero biases.
ParamSet init(const NetConfig& cfg);

ForwardResult forward(const ParamSet& params, const ImageGrid& image);

// Throws NumericError("stale tape") if the parameters changed since forward.
Gradients backward(const ParamSet& params, const Tape& tape, const ImageGrid& grad_output);

// acc += scale * g; an empty accumulator starts from zero with g's layout.
void accumulate(Gradients& acc, const Gradients& g, double scale);

// Rescales g to at most max_norm (global L2 norm); max_norm <= 0 disables.
void clip_gradients(Gradients& g, double max_norm);

OptState make_opt_state(const ParamSet& params, double learning_rate, double momentum, double weight_decay);

// buffer = momentum * buffer + (grad + weight_decay * w);  w -= lr * buffer.
// Throws NumericError when a gradient is non-finite; params are left untouched.
void sgd_step(ParamSet& params, const Gradients& grads, OptState& opt);

}  // namespace dvis
