#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reconv/experiments.hpp"
#include "reconv/model.hpp"
#include "reconv/train.hpp"

namespace reconv {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum class KeyType { integer, real, boolean, text, integer_list };

struct ConfigKey {
  std::string_view name;
  KeyType type;
  std::string_view default_value;
  std::string_view help;
};

// Every recognised configuration key, in manifest order.
std::span<const ConfigKey> config_keys();

// Flat key=value run configuration. Lines starting with '#' and blank lines
// are ignored; later assignments override earlier ones.
class RunConfig {
 public:
  RunConfig();  // all defaults

  static RunConfig parse(std::string_view text, const std::string& source = "<string>");
  static RunConfig load(const std::string& path);

  // Throws ConfigError for unknown keys (listing the valid ones) and for
  // values that do not parse as the key's type.
  void set(std::string_view key, std::string_view value);
  const std::string& get(std::string_view key) const;

  std::int64_t get_int(std::string_view key) const;
  std::size_t get_size(std::string_view key) const;
  double get_real(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<std::size_t> get_size_list(std::string_view key) const;
  std::vector<std::string> get_text_list(std::string_view key) const;

  ArchConfig arch() const;
  TrainConfig train() const;
  ExperimentSpec experiment() const;

  // Replaces an empty data_dir with $RECONV_DATA_DIR so that the manifest
  // records the directory actually used.
  void resolve_environment();

  // key=value lines for every key, in config_keys() order.
  void write(std::ostream& os) const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace reconv
