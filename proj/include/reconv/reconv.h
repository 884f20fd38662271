/* C interface to the reconv library. All objects are opaque handles owned by
 * the caller and released with the matching *_destroy function. Functions
 * return a reconv_status; on failure reconv_last_error() describes the
 * problem for the calling thread. */
#ifndef RECONV_RECONV_H
#define RECONV_RECONV_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(RECONV_BUILDING_LIBRARY)
#    define RECONV_API __declspec(dllexport)
#  else
#    define RECONV_API __declspec(dllimport)
#  endif
#else
#  define RECONV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum reconv_status {
  RECONV_OK = 0,
  RECONV_ERR_USAGE = 1,
  RECONV_ERR_CONFIG = 2,
  RECONV_ERR_DATA_FORMAT = 3,
  RECONV_ERR_NUMERIC = 4,
  RECONV_ERR_SHAPE = 5,
  RECONV_ERR_INTERNAL = 6
} reconv_status;

typedef enum reconv_key_type {
  RECONV_KEY_INTEGER = 0,
  RECONV_KEY_REAL = 1,
  RECONV_KEY_BOOLEAN = 2,
  RECONV_KEY_TEXT = 3,
  RECONV_KEY_INTEGER_LIST = 4
} reconv_key_type;

typedef struct reconv_key_info {
  const char* name;
  reconv_key_type type;
  const char* default_value;
  const char* help;
} reconv_key_info;

typedef struct reconv_config reconv_config;
typedef struct reconv_dataset reconv_dataset;
typedef struct reconv_model reconv_model;

typedef void (*reconv_log_fn)(void* user, const char* line);

RECONV_API const char* reconv_version(void);
RECONV_API const char* reconv_last_error(void);
/* "ok", "usage", "config", "data-format", "numeric", "shape" or "internal". */
RECONV_API const char* reconv_status_name(reconv_status status);

/* ---- configuration ---------------------------------------------------- */

RECONV_API size_t reconv_config_key_count(void);
RECONV_API reconv_status reconv_config_key_info(size_t index, reconv_key_info* out);

RECONV_API reconv_status reconv_config_create(reconv_config** out);
/* Parses a key=value file ('#' starts a comment line). */
RECONV_API reconv_status reconv_config_load(const char* path, reconv_config** out);
RECONV_API void reconv_config_destroy(reconv_config* config);
RECONV_API reconv_status reconv_config_set(reconv_config* config, const char* key, const char* value);
/* Copies the value (NUL-terminated) into buf. *needed receives the buffer
 * size required, including the terminator; buf may be NULL to query it. */
RECONV_API reconv_status reconv_config_get(const reconv_config* config, const char* key, char* buf, size_t capacity,
                                           size_t* needed);

/* ---- subcommands ------------------------------------------------------- */

/* Runs one of "train", "experiment", "pairs", "gradcheck", "contours" or
 * "convert-check", writing CSV artifacts and manifest.txt into out_dir.
 * Progress lines are passed to log (which may be NULL). A failing gradient
 * check returns RECONV_ERR_NUMERIC. */
RECONV_API reconv_status reconv_run(const char* subcommand, const reconv_config* config, const char* out_dir,
                                    reconv_log_fn log, void* user);

/* ---- parameter accounting --------------------------------------------- */

RECONV_API reconv_status reconv_param_count(size_t feature_maps, size_t layers, int tied, size_t* out);

/* ---- datasets ---------------------------------------------------------- */

RECONV_API reconv_status reconv_dataset_load_cifar10(const char* const* paths, size_t count, reconv_dataset** out);
RECONV_API reconv_status reconv_dataset_load_raw(const char* image_file, const char* label_file, size_t n,
                                                 size_t classes, reconv_dataset** out);
RECONV_API reconv_status reconv_dataset_synthetic(size_t n, uint64_t seed, reconv_dataset** out);
RECONV_API reconv_status reconv_dataset_write_raw(const reconv_dataset* data, const char* image_file,
                                                  const char* label_file);
RECONV_API size_t reconv_dataset_size(const reconv_dataset* data);
RECONV_API reconv_status reconv_dataset_label(const reconv_dataset* data, size_t index, size_t* out);
/* Copies image `index` as H x W x C doubles (3072 values for 32x32x3). */
RECONV_API reconv_status reconv_dataset_image(const reconv_dataset* data, size_t index, double* out, size_t len);
RECONV_API void reconv_dataset_destroy(reconv_dataset* data);

/* ---- models ------------------------------------------------------------ */

/* Architecture and optimizer settings are taken from config. */
RECONV_API reconv_status reconv_model_create(const reconv_config* config, uint64_t seed, reconv_model** out);
RECONV_API void reconv_model_destroy(reconv_model* model);
RECONV_API size_t reconv_model_param_count(const reconv_model* model);
/* Class probabilities for one H x W x C image. */
RECONV_API reconv_status reconv_model_predict(const reconv_model* model, const double* image, size_t len,
                                              double* probs, size_t classes);
RECONV_API reconv_status reconv_model_loss(const reconv_model* model, const double* image, size_t len, size_t label,
                                           double* loss);
/* Runs `epochs` further epochs of momentum SGD; test may be NULL. */
RECONV_API reconv_status reconv_model_train(reconv_model* model, const reconv_dataset* train,
                                            const reconv_dataset* test, size_t epochs);
RECONV_API reconv_status reconv_model_error_rate(const reconv_model* model, const reconv_dataset* data, double* out);

#ifdef __cplusplus
}
#endif

#endif
