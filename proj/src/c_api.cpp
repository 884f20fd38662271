#include "reconv/reconv.h"

#include <cstring>
#include <exception>
#include <string>

#include "reconv/data.hpp"
#include "reconv/error.hpp"
#include "reconv/model.hpp"
#include "reconv/param_count.hpp"
#include "reconv/run_config.hpp"
#include "reconv/runner.hpp"
#include "reconv/train.hpp"

struct reconv_config {
  reconv::RunConfig config;
};

struct reconv_dataset {
  reconv::Dataset data;
};

struct reconv_model {
  reconv::ArchConfig arch;
  reconv::TrainConfig train;
  reconv::Params params;
  reconv::TrainState state;
};

namespace {

thread_local std::string last_error;

reconv_status status_of(reconv::ErrorKind kind) {
  switch (kind) {
    case reconv::ErrorKind::usage: return RECONV_ERR_USAGE;
    case reconv::ErrorKind::config: return RECONV_ERR_CONFIG;
    case reconv::ErrorKind::data_format: return RECONV_ERR_DATA_FORMAT;
    case reconv::ErrorKind::numeric: return RECONV_ERR_NUMERIC;
    case reconv::ErrorKind::shape: return RECONV_ERR_SHAPE;
  }
  return RECONV_ERR_INTERNAL;
}

template <typename Fn>
reconv_status guarded(Fn&& fn) noexcept {
  try {
    last_error.clear();
    return fn();
  } catch (const reconv::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return RECONV_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return RECONV_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return RECONV_ERR_INTERNAL;
  }
}

reconv_status null_argument(const char* what) {
  last_error = std::string("null argument: ") + what;
  return RECONV_ERR_USAGE;
}

reconv::Tensor image_from(const reconv_model* model, const double* image, std::size_t len) {
  const auto shape = model->arch.image_shape();
  if (len != reconv::element_count(shape)) {
    throw reconv::ShapeError("image buffer holds " + std::to_string(len) + " values, architecture expects " +
                             reconv::shape_string(shape));
  }
  return reconv::Tensor(shape, std::vector<double>(image, image + len));
}

}  // namespace

extern "C" {

const char* reconv_version(void) { return reconv::kToolVersion.data(); }

const char* reconv_last_error(void) { return last_error.c_str(); }

const char* reconv_status_name(reconv_status status) {
  switch (status) {
    case RECONV_OK: return "ok";
    case RECONV_ERR_USAGE: return "usage";
    case RECONV_ERR_CONFIG: return "config";
    case RECONV_ERR_DATA_FORMAT: return "data-format";
    case RECONV_ERR_NUMERIC: return "numeric";
    case RECONV_ERR_SHAPE: return "shape";
    case RECONV_ERR_INTERNAL: return "internal";
  }
  return "internal";
}

size_t reconv_config_key_count(void) { return reconv::config_keys().size(); }

reconv_status reconv_config_key_info(size_t index, reconv_key_info* out) {
  if (!out) return null_argument("out");
  const auto keys = reconv::config_keys();
  if (index >= keys.size()) {
    last_error = "key index out of range";
    return RECONV_ERR_USAGE;
  }
  // The key table is built from string literals, so the views are
  // NUL-terminated.
  const auto& k = keys[index];
  out->name = k.name.data();
  out->type = static_cast<reconv_key_type>(k.type);
  out->default_value = k.default_value.data();
  out->help = k.help.data();
  return RECONV_OK;
}

reconv_status reconv_config_create(reconv_config** out) {
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = new reconv_config{};
    return RECONV_OK;
  });
}

reconv_status reconv_config_load(const char* path, reconv_config** out) {
  if (!path || !out) return null_argument("path/out");
  return guarded([&] {
    *out = new reconv_config{reconv::RunConfig::load(path)};
    return RECONV_OK;
  });
}

void reconv_config_destroy(reconv_config* config) { delete config; }

reconv_status reconv_config_set(reconv_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return null_argument("config/key/value");
  return guarded([&] {
    config->config.set(key, value);
    return RECONV_OK;
  });
}

reconv_status reconv_config_get(const reconv_config* config, const char* key, char* buf, size_t capacity,
                                size_t* needed) {
  if (!config || !key) return null_argument("config/key");
  return guarded([&] {
    const std::string& value = config->config.get(key);
    if (needed) *needed = value.size() + 1;
    if (buf) {
      if (capacity < value.size() + 1) {
        last_error = "buffer too small for value of '" + std::string(key) + "'";
        return RECONV_ERR_USAGE;
      }
      std::memcpy(buf, value.c_str(), value.size() + 1);
    }
    return RECONV_OK;
  });
}

reconv_status reconv_run(const char* subcommand, const reconv_config* config, const char* out_dir, reconv_log_fn log,
                         void* user) {
  if (!subcommand || !config || !out_dir) return null_argument("subcommand/config/out_dir");
  return guarded([&] {
    reconv::runner::LogSink sink;
    if (log) sink = [&](std::string_view line) { log(user, std::string(line).c_str()); };
    const int code = reconv::runner::run(subcommand, config->config, out_dir, sink);
    if (code != 0) {
      last_error = "gradient check failed";
      return RECONV_ERR_NUMERIC;
    }
    return RECONV_OK;
  });
}

reconv_status reconv_param_count(size_t feature_maps, size_t layers, int tied, size_t* out) {
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = reconv::param_count(feature_maps, layers, tied != 0);
    return RECONV_OK;
  });
}

reconv_status reconv_dataset_load_cifar10(const char* const* paths, size_t count, reconv_dataset** out) {
  if (!paths || !out) return null_argument("paths/out");
  return guarded([&] {
    std::vector<std::string> list;
    for (size_t i = 0; i < count; ++i) {
      if (!paths[i]) return null_argument("paths[i]");
      list.emplace_back(paths[i]);
    }
    *out = new reconv_dataset{reconv::load_cifar10(list)};
    return RECONV_OK;
  });
}

reconv_status reconv_dataset_load_raw(const char* image_file, const char* label_file, size_t n, size_t classes,
                                      reconv_dataset** out) {
  if (!image_file || !label_file || !out) return null_argument("image_file/label_file/out");
  return guarded([&] {
    *out = new reconv_dataset{reconv::load_raw(image_file, label_file, n, classes)};
    return RECONV_OK;
  });
}

reconv_status reconv_dataset_synthetic(size_t n, uint64_t seed, reconv_dataset** out) {
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = new reconv_dataset{reconv::synthetic_color_dataset(n, seed)};
    return RECONV_OK;
  });
}

reconv_status reconv_dataset_write_raw(const reconv_dataset* data, const char* image_file, const char* label_file) {
  if (!data || !image_file || !label_file) return null_argument("data/image_file/label_file");
  return guarded([&] {
    reconv::write_raw(data->data, image_file, label_file);
    return RECONV_OK;
  });
}

size_t reconv_dataset_size(const reconv_dataset* data) { return data ? data->data.size() : 0; }

reconv_status reconv_dataset_label(const reconv_dataset* data, size_t index, size_t* out) {
  if (!data || !out) return null_argument("data/out");
  if (index >= data->data.size()) {
    last_error = "example index out of range";
    return RECONV_ERR_USAGE;
  }
  *out = data->data.label(index);
  return RECONV_OK;
}

reconv_status reconv_dataset_image(const reconv_dataset* data, size_t index, double* out, size_t len) {
  if (!data || !out) return null_argument("data/out");
  return guarded([&] {
    const auto image = data->data.image(index);
    if (len != image.size()) {
      last_error = "image buffer must hold " + std::to_string(image.size()) + " values";
      return RECONV_ERR_SHAPE;
    }
    std::memcpy(out, image.data(), image.size() * sizeof(double));
    return RECONV_OK;
  });
}

void reconv_dataset_destroy(reconv_dataset* data) { delete data; }

reconv_status reconv_model_create(const reconv_config* config, uint64_t seed, reconv_model** out) {
  if (!config || !out) return null_argument("config/out");
  return guarded([&] {
    auto model = new reconv_model{config->config.arch(), config->config.train(), {}, {}};
    model->params = reconv::init_params(model->arch, seed);
    model->state = reconv::TrainState::for_params(model->params);
    *out = model;
    return RECONV_OK;
  });
}

void reconv_model_destroy(reconv_model* model) { delete model; }

size_t reconv_model_param_count(const reconv_model* model) { return model ? model->params.scalar_count() : 0; }

reconv_status reconv_model_predict(const reconv_model* model, const double* image, size_t len, double* probs,
                                   size_t classes) {
  if (!model || !image || !probs) return null_argument("model/image/probs");
  return guarded([&] {
    if (classes != model->arch.classes) {
      last_error = "probability buffer must hold " + std::to_string(model->arch.classes) + " values";
      return RECONV_ERR_SHAPE;
    }
    const auto tape = reconv::forward(model->arch, model->params, image_from(model, image, len));
    std::memcpy(probs, tape.probs.data(), classes * sizeof(double));
    return RECONV_OK;
  });
}

reconv_status reconv_model_loss(const reconv_model* model, const double* image, size_t len, size_t label,
                                double* loss) {
  if (!model || !image || !loss) return null_argument("model/image/loss");
  return guarded([&] {
    const auto tape = reconv::forward(model->arch, model->params, image_from(model, image, len));
    *loss = reconv::nll(tape, label);
    return RECONV_OK;
  });
}

reconv_status reconv_model_train(reconv_model* model, const reconv_dataset* train, const reconv_dataset* test,
                                 size_t epochs) {
  if (!model || !train) return null_argument("model/train");
  return guarded([&] {
    reconv::TrainConfig cfg = model->train;
    cfg.epochs = epochs;
    std::vector<reconv::EpochRecord> records;
    const reconv::Dataset empty;
    reconv::train_epochs(model->arch, model->params, model->state, train->data, test ? test->data : empty, cfg,
                         records);
    return RECONV_OK;
  });
}

reconv_status reconv_model_error_rate(const reconv_model* model, const reconv_dataset* data, double* out) {
  if (!model || !data || !out) return null_argument("model/data/out");
  return guarded([&] {
    *out = reconv::error_rate(model->arch, model->params, data->data);
    return RECONV_OK;
  });
}

}  // extern "C"
