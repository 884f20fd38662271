#include "reconv/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "reconv/data.hpp"
#include "reconv/error.hpp"
#include "reconv/random.hpp"

namespace reconv {

void ArchConfig::validate() const {
  auto fail = [this](const std::string& why) { throw ConfigError("invalid architecture " + describe() + ": " + why); };
  if (feature_maps == 0) fail("feature maps (M) must be positive");
  if (layers == 0) fail("layers beyond the first (L) must be positive");
  if (input_height == 0 || input_width == 0 || input_channels == 0) fail("input extents must be positive");
  if (first_kernel == 0 || higher_kernel == 0) fail("kernel extents must be positive");
  if (pool == 0 || input_height % pool != 0 || input_width % pool != 0) {
    fail("pool extent must divide the input height and width");
  }
  if (classes == 0) fail("classes (K) must be positive");
  if (!(sigma_v > 0.0) || !std::isfinite(sigma_v)) fail("sigma_v must be positive");
}

std::string ArchConfig::describe() const {
  std::ostringstream os;
  os << (tied ? "tied" : "untied") << " M=" << feature_maps << " L=" << layers << " input=" << input_height << 'x'
     << input_width << 'x' << input_channels << " K=" << classes;
  return os.str();
}

ParamTensors ParamTensors::zeros(const ArchConfig& config) {
  ParamTensors p;
  p.v = Tensor(config.first_kernel_shape());
  p.b0 = Tensor({config.feature_maps});
  for (std::size_t l = 0; l < config.weight_sets(); ++l) {
    p.w.emplace_back(config.higher_kernel_shape());
    p.b.emplace_back(Shape{config.feature_maps});
  }
  p.c = Tensor(config.classifier_shape());
  p.c_bias = Tensor({config.classes});
  return p;
}

void ParamTensors::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("V", v);
  fn("b0", b0);
  for (std::size_t l = 0; l < w.size(); ++l) fn("W" + std::to_string(l + 1), w[l]);
  for (std::size_t l = 0; l < b.size(); ++l) fn("b" + std::to_string(l + 1), b[l]);
  fn("C", c);
  fn("c_bias", c_bias);
}

void ParamTensors::for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const {
  const_cast<ParamTensors*>(this)->for_each([&](const std::string& name, Tensor& t) { fn(name, t); });
}

std::size_t ParamTensors::scalar_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

bool ParamTensors::congruent_with(const ParamTensors& other) const {
  if (w.size() != other.w.size() || b.size() != other.b.size()) return false;
  if (v.shape() != other.v.shape() || b0.shape() != other.b0.shape() || c.shape() != other.c.shape() ||
      c_bias.shape() != other.c_bias.shape()) {
    return false;
  }
  for (std::size_t l = 0; l < w.size(); ++l) {
    if (w[l].shape() != other.w[l].shape() || b[l].shape() != other.b[l].shape()) return false;
  }
  return true;
}

Tensor identity_kernel(std::size_t extent, std::size_t maps) {
  Tensor k({extent, extent, maps, maps});
  const std::size_t center = ops::same_offset(extent);
  for (std::size_t m = 0; m < maps; ++m) k.at(center, center, m, m) = 1.0;
  return k;
}

Params init_params(const ArchConfig& config, std::uint64_t seed) {
  config.validate();
  Params p{ParamTensors::zeros(config)};
  auto rng = make_rng(seed, Stream::init);
  std::normal_distribution<double> gauss(0.0, config.sigma_v);
  for (auto& value : p.v.values()) value = gauss(rng);
  for (auto& w : p.w) w = identity_kernel(config.higher_kernel, config.feature_maps);
  return p;
}

void check_params(const ArchConfig& config, const ParamTensors& params) {
  bool ok = params.v.shape() == config.first_kernel_shape() && params.b0.shape() == Shape{config.feature_maps} &&
            params.c.shape() == config.classifier_shape() && params.c_bias.shape() == Shape{config.classes} &&
            params.w.size() == config.weight_sets() && params.b.size() == config.weight_sets();
  for (std::size_t l = 0; ok && l < params.w.size(); ++l) {
    ok = params.w[l].shape() == config.higher_kernel_shape() && params.b[l].shape() == Shape{config.feature_maps};
  }
  if (!ok) {
    throw ShapeError("parameters do not match architecture " + config.describe());
  }
}

Tape forward(const ArchConfig& config, const Params& params, const Tensor& x) {
  if (x.shape() != config.image_shape()) {
    throw ShapeError("forward: image " + shape_string(x.shape()) + " does not match architecture input " +
                     shape_string(config.image_shape()));
  }
  check_params(config, params);
  const std::size_t maps = config.feature_maps;

  Tape tape;
  tape.x = x;
  tape.pre_pool = ops::conv2d_same(x, params.v);
  for (std::size_t p = 0; p < tape.pre_pool.size(); ++p) tape.pre_pool[p] += params.b0[p % maps];
  ops::relu_inplace(tape.pre_pool);

  auto pooled = ops::max_pool(tape.pre_pool, config.pool);
  tape.pool_index = std::move(pooled.index);
  tape.hidden.reserve(config.layers + 1);
  tape.hidden.push_back(std::move(pooled.output));

  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::size_t set = config.tied ? 0 : l;
    Tensor z = ops::conv2d_same(tape.hidden.back(), params.w[set]);
    const Tensor& bias = params.b[set];
    for (std::size_t p = 0; p < z.size(); ++p) z[p] += bias[p % maps];
    ops::relu_inplace(z);
    tape.hidden.push_back(std::move(z));
  }

  tape.normalized = ops::l2norm_pixel(tape.top());
  tape.logits = params.c_bias;
  const std::size_t k_count = config.classes;
  const double* c = params.c.data();
  for (std::size_t f = 0; f < tape.normalized.size(); ++f) {
    const double z = tape.normalized[f];
    const double* row = c + f * k_count;
    for (std::size_t k = 0; k < k_count; ++k) tape.logits[k] += row[k] * z;
  }
  tape.probs = ops::softmax(tape.logits);
  return tape;
}

double nll(const Tape& tape, std::size_t label) {
  if (label >= tape.probs.size()) {
    throw ShapeError("label " + std::to_string(label) + " is out of range for " + std::to_string(tape.probs.size()) +
                     " classes");
  }
  // log-sum-exp form keeps the loss finite when the probability underflows
  double top = tape.logits[0];
  for (double v : tape.logits.values()) top = std::max(top, v);
  double total = 0.0;
  for (double v : tape.logits.values()) total += std::exp(v - top);
  return top + std::log(total) - tape.logits[label];
}

namespace {

// Adds the spatial sum of grad (H x W x M) into bias_grad (M).
void accumulate_bias(const Tensor& grad, Tensor& bias_grad) {
  const std::size_t maps = bias_grad.size();
  for (std::size_t p = 0; p < grad.size(); ++p) bias_grad[p % maps] += grad[p];
}

}  // namespace

void backward(const ArchConfig& config, const Params& params, const Tape& tape, std::size_t label, Grads& grads) {
  if (label >= config.classes) {
    throw ShapeError("label " + std::to_string(label) + " is out of range for " + std::to_string(config.classes) +
                     " classes");
  }
  check_params(config, grads);
  const std::size_t k_count = config.classes;

  Tensor d_logits = tape.probs;
  d_logits[label] -= 1.0;
  grads.c_bias += d_logits;

  Tensor d_normalized(tape.normalized.shape());
  const double* c = params.c.data();
  double* dc = grads.c.data();
  for (std::size_t f = 0; f < tape.normalized.size(); ++f) {
    const double z = tape.normalized[f];
    const double* row = c + f * k_count;
    double* drow = dc + f * k_count;
    double acc = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      drow[k] += z * d_logits[k];
      acc += row[k] * d_logits[k];
    }
    d_normalized[f] = acc;
  }

  Tensor d_hidden = ops::l2norm_pixel_backward(tape.top(), d_normalized);
  for (std::size_t l = config.layers; l-- > 0;) {
    const std::size_t set = config.tied ? 0 : l;
    const Tensor d_pre = ops::relu_backward(tape.hidden[l + 1], d_hidden);
    grads.w[set] += ops::conv2d_same_kernel_grad(tape.hidden[l], d_pre, params.w[set].shape());
    accumulate_bias(d_pre, grads.b[set]);
    d_hidden = ops::conv2d_same_input_grad(d_pre, params.w[set]);
  }

  const Tensor d_pool = ops::max_pool_backward(d_hidden, tape.pool_index);
  const Tensor d_pre0 = ops::relu_backward(tape.pre_pool, d_pool);
  grads.v += ops::conv2d_same_kernel_grad(tape.x, d_pre0, params.v.shape());
  accumulate_bias(d_pre0, grads.b0);
}

LossAndGrads loss_and_grads(const ArchConfig& config, const Params& params, const Tensor& x, std::size_t label) {
  if (label >= config.classes) {
    throw ShapeError("label " + std::to_string(label) + " is out of range for " + std::to_string(config.classes) +
                     " classes");
  }
  LossAndGrads out{0.0, Grads{ParamTensors::zeros(config)}};
  const Tape tape = forward(config, params, x);
  out.loss = nll(tape, label);
  backward(config, params, tape, label, out.grads);
  return out;
}

LossAndGrads batch_loss_and_grads(const ArchConfig& config, const Params& params, const Dataset& data,
                                  const std::vector<std::size_t>& indices) {
  LossAndGrads out{0.0, Grads{ParamTensors::zeros(config)}};
  for (const std::size_t n : indices) {
    const Tape tape = forward(config, params, data.image(n));
    out.loss += nll(tape, data.label(n));
    backward(config, params, tape, data.label(n), out.grads);
  }
  return out;
}

std::size_t predict(const Tape& tape) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < tape.probs.size(); ++k) {
    if (tape.probs[k] > tape.probs[best]) best = k;
  }
  return best;
}

double error_rate(const ArchConfig& config, const Params& params, const Dataset& data) {
  if (data.empty()) throw FormatError("error_rate: dataset is empty");
  std::size_t wrong = 0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (predict(forward(config, params, data.image(n))) != data.label(n)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

Params untie(const ArchConfig& config, const Params& tied) {
  check_params(config, tied);
  Params out = tied;
  if (!config.tied) return out;
  out.w.assign(config.layers, tied.w.front());
  out.b.assign(config.layers, tied.b.front());
  return out;
}

}  // namespace reconv
