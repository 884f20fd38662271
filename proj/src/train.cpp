#include "reconv/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "reconv/error.hpp"

namespace reconv {
namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
}

TrainState TrainState::for_params(const ParamTensors& params) {
  TrainState state;
  state.velocity = params;
  state.velocity.for_each([](const std::string&, Tensor& t) { t.fill(0.0); });
  return state;
}

void sgd_momentum_step(Params& params, const Grads& grads, TrainState& state, const TrainConfig& cfg) {
  if (!params.congruent_with(grads) || !params.congruent_with(state.velocity)) {
    throw ShapeError("sgd_momentum_step: gradient or momentum buffers do not match the parameters");
  }
  std::vector<Tensor*> p_list, v_list;
  std::vector<const Tensor*> g_list;
  params.for_each([&](const std::string&, Tensor& t) { p_list.push_back(&t); });
  state.velocity.for_each([&](const std::string&, Tensor& t) { v_list.push_back(&t); });
  grads.for_each([&](const std::string&, const Tensor& t) { g_list.push_back(&t); });

  for (std::size_t i = 0; i < p_list.size(); ++i) {
    Tensor& p = *p_list[i];
    Tensor& v = *v_list[i];
    const Tensor& g = *g_list[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      v[j] = cfg.momentum * v[j] + g[j];
      p[j] -= cfg.learning_rate * v[j];
    }
  }
  ++state.steps;
}

void train_epochs(const ArchConfig& arch, Params& params, TrainState& state, const Dataset& train_data,
                  const Dataset& test_data, const TrainConfig& cfg, std::vector<EpochRecord>& records,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_data.empty()) throw FormatError("train: training set is empty");
  if (train_data.image_shape() != arch.image_shape()) {
    throw ShapeError("train: images " + shape_string(train_data.image_shape()) + " do not match architecture input " +
                     shape_string(arch.image_shape()));
  }
  using clock = std::chrono::steady_clock;

  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto start = clock::now();
    const std::size_t epoch = state.epochs_completed;
    const auto batches = minibatches(train_data.size(), cfg.batch_size, cfg.shuffle_seed, epoch);
    double loss_sum = 0.0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      auto step = batch_loss_and_grads(arch, params, train_data, batches[bi]);
      if (!std::isfinite(step.loss)) {
        throw NumericError("non-finite loss in epoch " + std::to_string(epoch + 1) + ", batch " + std::to_string(bi + 1));
      }
      loss_sum += step.loss;
      sgd_momentum_step(params, step.grads, state, cfg);
    }
    ++state.epochs_completed;

    EpochRecord record;
    record.epoch = state.epochs_completed;
    record.train_loss = loss_sum / static_cast<double>(train_data.size());
    const bool last = e + 1 == cfg.epochs;
    const bool evaluate = last || (cfg.eval_every > 0 && record.epoch % cfg.eval_every == 0);
    if (evaluate) {
      record.train_error = error_rate(arch, params, train_data);
      if (!test_data.empty()) record.test_error = error_rate(arch, params, test_data);
    }
    if (cfg.record_time) record.seconds = std::chrono::duration<double>(clock::now() - start).count();
    records.push_back(record);
    if (on_epoch) on_epoch(record);
  }
}

TrainResult train(const ArchConfig& arch, const Dataset& train_data, const Dataset& test_data, const TrainConfig& cfg,
                  std::uint64_t seed, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_data.empty()) throw FormatError("train: training set is empty");
  TrainResult result;
  result.params = init_params(arch, seed);
  TrainState state = TrainState::for_params(result.params);
  train_epochs(arch, result.params, state, train_data, test_data, cfg, result.epochs, on_epoch);
  return result;
}

void write_metrics_csv(std::ostream& os, const std::vector<EpochRecord>& records) {
  os << "epoch,train_loss,train_error,test_error,seconds\n";
  for (const auto& r : records) {
    os << r.epoch << ',' << format_number(r.train_loss) << ',' << format_optional(r.train_error) << ','
       << format_optional(r.test_error) << ',' << format_number(r.seconds) << '\n';
  }
}

}  // namespace reconv
