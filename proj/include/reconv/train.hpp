#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "reconv/data.hpp"
#include "reconv/model.hpp"

namespace reconv {

struct TrainConfig {
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::size_t epochs = 10;
  std::uint64_t shuffle_seed = 1;
  // Train/test error are measured after every `eval_every`-th epoch and
  // after the last one. 0 disables per-epoch evaluation.
  std::size_t eval_every = 1;
  // When false the seconds column is recorded as 0 so that reruns produce
  // identical output.
  bool record_time = false;

  void validate() const;
};

struct TrainState {
  ParamTensors velocity;  // g, one buffer per parameter tensor
  std::size_t epochs_completed = 0;
  std::size_t steps = 0;

  static TrainState for_params(const ParamTensors& params);
};

// g <- momentum * g + grads; params <- params - learning_rate * g.
// `grads` is the sum over the minibatch.
void sgd_momentum_step(Params& params, const Grads& grads, TrainState& state, const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean per-example loss over the epoch's batches
  std::optional<double> train_error;
  std::optional<double> test_error;
  double seconds = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  Params params;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains a freshly initialised model (init_params(arch, seed)) with momentum
// SGD over seed-shuffled minibatches. `test` may be empty.
TrainResult train(const ArchConfig& arch, const Dataset& train_data, const Dataset& test_data, const TrainConfig& cfg,
                  std::uint64_t seed, const EpochCallback& on_epoch = {});

// Continues training from given parameters and optimizer state.
void train_epochs(const ArchConfig& arch, Params& params, TrainState& state, const Dataset& train_data,
                  const Dataset& test_data, const TrainConfig& cfg, std::vector<EpochRecord>& records,
                  const EpochCallback& on_epoch = {});

// CSV with header epoch,train_loss,train_error,test_error,seconds.
void write_metrics_csv(std::ostream& os, const std::vector<EpochRecord>& records);

}  // namespace reconv
