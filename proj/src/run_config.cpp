#include "reconv/run_config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "reconv/error.hpp"

namespace reconv {
namespace {

// Training defaults: batch 128, learning rate 1e-3, momentum 0.9, sigma_v 0.1.
// Grid sizes are scaled down to run on a workstation.
constexpr std::array kKeys{
    ConfigKey{"seed", KeyType::integer, "1", "initialisation seed (also the default experiment seed)"},
    ConfigKey{"threads", KeyType::integer, "1", "worker threads for experiment cells"},
    ConfigKey{"record_time", KeyType::boolean, "false", "write wall-clock seconds instead of 0"},
    ConfigKey{"m", KeyType::integer, "16", "feature maps per layer (M)"},
    ConfigKey{"l", KeyType::integer, "2", "layers after the first (L)"},
    ConfigKey{"tied", KeyType::boolean, "false", "share W and b across the higher layers"},
    ConfigKey{"sigma_v", KeyType::real, "0.1", "std-dev of the first-layer kernel initialisation"},
    ConfigKey{"input_height", KeyType::integer, "32", "image height"},
    ConfigKey{"input_width", KeyType::integer, "32", "image width"},
    ConfigKey{"input_channels", KeyType::integer, "3", "image channels"},
    ConfigKey{"first_kernel", KeyType::integer, "8", "first-layer kernel extent"},
    ConfigKey{"pool", KeyType::integer, "4", "max-pool window extent"},
    ConfigKey{"higher_kernel", KeyType::integer, "3", "higher-layer kernel extent"},
    ConfigKey{"classes", KeyType::integer, "10", "number of classes (K)"},
    ConfigKey{"batch_size", KeyType::integer, "128", "minibatch size"},
    ConfigKey{"learning_rate", KeyType::real, "0.001", "SGD learning rate"},
    ConfigKey{"momentum", KeyType::real, "0.9", "SGD momentum"},
    ConfigKey{"epochs", KeyType::integer, "10", "training epochs"},
    ConfigKey{"shuffle_seed", KeyType::integer, "1", "minibatch shuffling seed (train subcommand)"},
    ConfigKey{"eval_every", KeyType::integer, "1", "measure train/test error every N epochs (0: last epoch only)"},
    ConfigKey{"dataset", KeyType::text, "synthetic", "synthetic | noise | cifar10 | raw"},
    ConfigKey{"data_dir", KeyType::text, "", "dataset root; empty uses $RECONV_DATA_DIR"},
    ConfigKey{"cifar_train_files", KeyType::text,
              "data_batch_1.bin,data_batch_2.bin,data_batch_3.bin,data_batch_4.bin,data_batch_5.bin",
              "CIFAR-10 training batches, relative to data_dir"},
    ConfigKey{"cifar_test_files", KeyType::text, "test_batch.bin", "CIFAR-10 test batches, relative to data_dir"},
    ConfigKey{"raw_train_images", KeyType::text, "train_images.bin", "raw-format training images"},
    ConfigKey{"raw_train_labels", KeyType::text, "train_labels.bin", "raw-format training labels"},
    ConfigKey{"raw_train_count", KeyType::integer, "0", "number of raw training images"},
    ConfigKey{"raw_test_images", KeyType::text, "test_images.bin", "raw-format test images"},
    ConfigKey{"raw_test_labels", KeyType::text, "test_labels.bin", "raw-format test labels"},
    ConfigKey{"raw_test_count", KeyType::integer, "0", "number of raw test images (0: no test set)"},
    ConfigKey{"train_limit", KeyType::integer, "0", "use only the first N training images (0: all)"},
    ConfigKey{"test_limit", KeyType::integer, "0", "use only the first N test images (0: all)"},
    ConfigKey{"synthetic_train", KeyType::integer, "2000", "synthetic/noise training set size"},
    ConfigKey{"synthetic_test", KeyType::integer, "1000", "synthetic/noise test set size"},
    ConfigKey{"synthetic_seed", KeyType::integer, "7", "generator seed for synthetic/noise data"},
    ConfigKey{"kind", KeyType::text, "layers-tied",
              "overview-grid | layers-tied | params-layers-untied | pair-tied-vs-untied | pair-matched-features"},
    ConfigKey{"m_list", KeyType::integer_list, "8,16,32", "experiment feature-map grid"},
    ConfigKey{"l_list", KeyType::integer_list, "1,2,4", "experiment layer grid"},
    ConfigKey{"seeds", KeyType::integer_list, "1", "experiment seeds, one run per cell and seed"},
    ConfigKey{"m_min", KeyType::integer, "16", "smallest M considered for matched pairs"},
    ConfigKey{"m_max", KeyType::integer, "256", "largest M considered for matched pairs"},
    ConfigKey{"tolerance", KeyType::real, "0.01", "matched-pair relative parameter difference"},
    ConfigKey{"max_pairs", KeyType::integer, "0", "train only the N closest matched pairs per L (0: all)"},
    ConfigKey{"gradcheck_tol", KeyType::real, "1e-4", "gradient check relative tolerance"},
    ConfigKey{"gradcheck_eps", KeyType::real, "1e-5", "central-difference step"},
};

const ConfigKey* find_key(std::string_view name) {
  for (const auto& k : kKeys) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string valid_keys() {
  std::string out;
  for (const auto& k : kKeys) {
    if (!out.empty()) out += ", ";
    out += k.name;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto at = s.find(sep);
    parts.push_back(trim(s.substr(0, at)));
    if (at == std::string_view::npos) break;
    s.remove_prefix(at + 1);
  }
  return parts;
}

bool parse_int(std::string_view text, std::int64_t& out) {
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

bool parse_real(std::string_view text, double& out) {
  if (text.empty()) return false;
  const std::string copy(text);
  char* end = nullptr;
  out = std::strtod(copy.c_str(), &end);
  return end == copy.c_str() + copy.size() && std::isfinite(out);
}

bool parse_bool(std::string_view text, bool& out) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") {
    out = true;
    return true;
  }
  if (text == "false" || text == "0" || text == "no" || text == "off") {
    out = false;
    return true;
  }
  return false;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "' (expected " +
                    std::string(expected) + ")");
}

}  // namespace

std::span<const ConfigKey> config_keys() { return kKeys; }

RunConfig::RunConfig() {
  for (const auto& k : kKeys) values_.emplace(std::string(k.name), std::string(k.default_value));
}

RunConfig RunConfig::parse(std::string_view text, const std::string& source) {
  RunConfig config;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key=value, got '" + std::string(line) + "'");
    }
    try {
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path);
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const ConfigKey* spec = find_key(key);
  if (!spec) throw ConfigError("unknown key '" + std::string(key) + "'; valid keys: " + valid_keys());
  value = trim(value);
  std::int64_t i = 0;
  double r = 0.0;
  bool b = false;
  switch (spec->type) {
    case KeyType::integer:
      if (!parse_int(value, i) || i < 0) bad_value(key, value, "a non-negative integer");
      break;
    case KeyType::real:
      if (!parse_real(value, r)) bad_value(key, value, "a finite number");
      break;
    case KeyType::boolean:
      if (!parse_bool(value, b)) bad_value(key, value, "true or false");
      value = b ? "true" : "false";
      break;
    case KeyType::integer_list:
      for (auto part : split(value, ',')) {
        if (!parse_int(part, i) || i < 0) bad_value(key, value, "a comma-separated list of non-negative integers");
      }
      break;
    case KeyType::text:
      break;
  }
  values_[std::string(key)] = std::string(value);
}

const std::string& RunConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + std::string(key) + "'; valid keys: " + valid_keys());
  return it->second;
}

std::int64_t RunConfig::get_int(std::string_view key) const {
  std::int64_t v = 0;
  if (!parse_int(get(key), v)) bad_value(key, get(key), "an integer");
  return v;
}

std::size_t RunConfig::get_size(std::string_view key) const { return static_cast<std::size_t>(get_int(key)); }

double RunConfig::get_real(std::string_view key) const {
  double v = 0.0;
  if (!parse_real(get(key), v)) bad_value(key, get(key), "a number");
  return v;
}

bool RunConfig::get_bool(std::string_view key) const {
  bool v = false;
  if (!parse_bool(get(key), v)) bad_value(key, get(key), "true or false");
  return v;
}

std::vector<std::size_t> RunConfig::get_size_list(std::string_view key) const {
  std::vector<std::size_t> out;
  for (auto part : split(get(key), ',')) {
    std::int64_t v = 0;
    if (!parse_int(part, v) || v < 0) bad_value(key, get(key), "a list of integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<std::string> RunConfig::get_text_list(std::string_view key) const {
  std::vector<std::string> out;
  for (auto part : split(get(key), ',')) {
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

ArchConfig RunConfig::arch() const {
  ArchConfig a;
  a.feature_maps = get_size("m");
  a.layers = get_size("l");
  a.tied = get_bool("tied");
  a.sigma_v = get_real("sigma_v");
  a.input_height = get_size("input_height");
  a.input_width = get_size("input_width");
  a.input_channels = get_size("input_channels");
  a.first_kernel = get_size("first_kernel");
  a.pool = get_size("pool");
  a.higher_kernel = get_size("higher_kernel");
  a.classes = get_size("classes");
  a.validate();
  return a;
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.batch_size = get_size("batch_size");
  t.learning_rate = get_real("learning_rate");
  t.momentum = get_real("momentum");
  t.epochs = get_size("epochs");
  t.shuffle_seed = static_cast<std::uint64_t>(get_int("shuffle_seed"));
  t.eval_every = get_size("eval_every");
  t.record_time = get_bool("record_time");
  t.validate();
  return t;
}

ExperimentSpec RunConfig::experiment() const {
  ExperimentSpec spec;
  spec.kind = parse_experiment_kind(get("kind"));
  spec.m_list = get_size_list("m_list");
  spec.l_list = get_size_list("l_list");
  spec.seeds.clear();
  for (auto s : get_size_list("seeds")) spec.seeds.push_back(s);
  spec.m_min = get_size("m_min");
  spec.m_max = get_size("m_max");
  spec.tolerance = get_real("tolerance");
  spec.max_pairs = get_size("max_pairs");
  spec.base = arch();
  spec.train = train();
  spec.validate();
  return spec;
}

void RunConfig::resolve_environment() {
  if (!get("data_dir").empty()) return;
  if (const char* env = std::getenv("RECONV_DATA_DIR"); env && *env) values_["data_dir"] = env;
}

void RunConfig::write(std::ostream& os) const {
  for (const auto& k : kKeys) os << k.name << '=' << get(k.name) << '\n';
}

}  // namespace reconv
