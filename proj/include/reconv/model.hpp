#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "reconv/ops.hpp"
#include "reconv/tensor.hpp"

namespace reconv {

class Dataset;

// Architecture hyperparameters. M is the number of feature maps in every
// layer and L the number of 3x3 layers stacked after the pooled first layer.
struct ArchConfig {
  std::size_t feature_maps = 32;  // M
  std::size_t layers = 1;         // L
  bool tied = false;
  std::size_t input_height = 32;
  std::size_t input_width = 32;
  std::size_t input_channels = 3;
  std::size_t first_kernel = 8;
  std::size_t pool = 4;
  std::size_t higher_kernel = 3;
  std::size_t classes = 10;
  double sigma_v = 0.1;

  // Throws ConfigError when an invariant does not hold.
  void validate() const;

  std::size_t pooled_height() const noexcept { return input_height / pool; }
  std::size_t pooled_width() const noexcept { return input_width / pool; }
  // Number of distinct higher-layer weight sets.
  std::size_t weight_sets() const noexcept { return tied ? 1 : layers; }

  Shape image_shape() const { return {input_height, input_width, input_channels}; }
  Shape first_kernel_shape() const { return {first_kernel, first_kernel, input_channels, feature_maps}; }
  Shape higher_kernel_shape() const { return {higher_kernel, higher_kernel, feature_maps, feature_maps}; }
  Shape classifier_shape() const { return {pooled_height(), pooled_width(), feature_maps, classes}; }

  std::string describe() const;
};

// Weight and bias tensors of one network. Also used for gradients and
// optimizer buffers, which share the layout.
struct ParamTensors {
  Tensor v;                // first-layer kernels, k x k x C x M
  Tensor b0;               // first-layer biases, M
  std::vector<Tensor> w;   // higher-layer kernels, one per weight set
  std::vector<Tensor> b;   // higher-layer biases, one per weight set
  Tensor c;                // classifier, H/p x W/p x M x K
  Tensor c_bias;           // classifier biases, K

  // Zero tensors shaped for `config`.
  static ParamTensors zeros(const ArchConfig& config);

  // Visits every tensor in a fixed order: V, b0, W[0..], b[0..], C, c_bias.
  void for_each(const std::function<void(const std::string& name, Tensor&)>& fn);
  void for_each(const std::function<void(const std::string& name, const Tensor&)>& fn) const;

  std::size_t scalar_count() const;
  bool congruent_with(const ParamTensors& other) const;

  friend bool operator==(const ParamTensors&, const ParamTensors&) = default;
};

struct Params : ParamTensors {};
struct Grads : ParamTensors {};

// Forward activations retained for the backward pass.
struct Tape {
  Tensor x;                     // input image
  Tensor pre_pool;              // P = relu(b0 + V * X)
  ops::PoolIndex pool_index;    // argmax record of the first pooling
  std::vector<Tensor> hidden;   // Z^1 .. Z^{L+1}
  Tensor normalized;            // pixel-wise L2 normalised Z^{L+1}
  Tensor logits;                // Y'
  Tensor probs;                 // Y

  const Tensor& top() const { return hidden.back(); }
};

// V ~ N(0, sigma_v^2) from a generator seeded with `seed`; each W is the
// identity kernel; biases and the classifier start at zero.
Params init_params(const ArchConfig& config, std::uint64_t seed);

// Kernel of shape k x k x M x M that copies its input under conv2d_same.
Tensor identity_kernel(std::size_t extent, std::size_t maps);

// Throws ShapeError unless `params` is laid out for `config`.
void check_params(const ArchConfig& config, const ParamTensors& params);

Tape forward(const ArchConfig& config, const Params& params, const Tensor& x);

// Negative log-likelihood of `label` under the tape's prediction.
double nll(const Tape& tape, std::size_t label);

// Reverse sweep over a recorded tape. Gradients are accumulated into
// `grads`, so several examples can be summed into one buffer. For tied
// models the single W/b gradient holds the sum over all applications.
void backward(const ArchConfig& config, const Params& params, const Tape& tape, std::size_t label,
              Grads& grads);

struct LossAndGrads {
  double loss = 0.0;
  Grads grads;
};

LossAndGrads loss_and_grads(const ArchConfig& config, const Params& params, const Tensor& x, std::size_t label);

// Summed loss and gradients over data[indices], reduced in index order.
LossAndGrads batch_loss_and_grads(const ArchConfig& config, const Params& params, const Dataset& data,
                                  const std::vector<std::size_t>& indices);

// Class with the highest probability; ties go to the lowest index.
std::size_t predict(const Tape& tape);

double error_rate(const ArchConfig& config, const Params& params, const Dataset& data);

// Expands tied parameters into the equivalent untied set (L copies of W/b).
Params untie(const ArchConfig& config, const Params& tied);

}  // namespace reconv
