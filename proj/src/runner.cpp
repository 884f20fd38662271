#include "reconv/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "reconv/error.hpp"
#include "reconv/experiments.hpp"
#include "reconv/gradcheck.hpp"
#include "reconv/param_count.hpp"
#include "reconv/train.hpp"

namespace reconv::runner {
namespace fs = std::filesystem;

namespace {

void emit(const LogSink& log, const std::string& line) {
  if (log) log(line);
}

std::string data_path(const RunConfig& config, const std::string& name) {
  const fs::path p(name);
  if (p.is_absolute()) return name;
  const std::string& dir = config.get("data_dir");
  if (dir.empty()) {
    throw FormatError("no dataset directory: set data_dir or RECONV_DATA_DIR (needed for '" + name + "')");
  }
  return (fs::path(dir) / p).string();
}

std::vector<std::string> data_paths(const RunConfig& config, std::string_view key) {
  std::vector<std::string> out;
  for (const auto& name : config.get_text_list(key)) out.push_back(data_path(config, name));
  if (out.empty()) throw FormatError("no files listed under '" + std::string(key) + "'");
  return out;
}

std::ofstream open_artifact(const std::string& out_dir, const std::string& name) {
  std::ofstream os(fs::path(out_dir) / name, std::ios::trunc);
  if (!os) throw FormatError("cannot write " + (fs::path(out_dir) / name).string());
  return os;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

int cmd_train(const RunConfig& config, const std::string& out_dir, const LogSink& log) {
  const ArchConfig arch = config.arch();
  const TrainConfig cfg = config.train();
  const Datasets data = load_datasets(config);
  emit(log, "train " + arch.describe() + " params=" + std::to_string(param_count(arch)) +
                " examples=" + std::to_string(data.train.size()));
  const auto result = train(arch, data.train, data.test, cfg, static_cast<std::uint64_t>(config.get_int("seed")),
                            [&](const EpochRecord& r) {
                              std::string line = "epoch " + std::to_string(r.epoch) + " loss " + fmt("%.6f", r.train_loss);
                              if (r.train_error) line += " train_err " + fmt("%.4f", *r.train_error);
                              if (r.test_error) line += " test_err " + fmt("%.4f", *r.test_error);
                              emit(log, line);
                            });
  auto os = open_artifact(out_dir, "metrics.csv");
  write_metrics_csv(os, result.epochs);
  write_manifest(out_dir, "train", config, {"metrics.csv"});
  return 0;
}

int cmd_experiment(const RunConfig& config, const std::string& out_dir, const LogSink& log) {
  const ExperimentSpec spec = config.experiment();
  const Datasets data = load_datasets(config);
  std::vector<std::string> artifacts{"results.csv"};
  if (spec.kind == ExperimentKind::pair_matched_features) {
    std::vector<ModelPair> all;
    for (auto l : spec.l_list) {
      auto pairs = match_pairs(l, spec.m_min, spec.m_max, spec.tolerance, spec.base);
      if (spec.max_pairs > 0 && pairs.size() > spec.max_pairs) pairs.resize(spec.max_pairs);
      all.insert(all.end(), pairs.begin(), pairs.end());
    }
    auto os = open_artifact(out_dir, "pairs.csv");
    write_pairs_csv(os, all);
    artifacts.push_back("pairs.csv");
  }
  emit(log, "experiment " + std::string(to_string(spec.kind)) + ": " + std::to_string(experiment_cells(spec).size()) +
                " cells x " + std::to_string(spec.seeds.size()) + " seeds");
  const auto result = run_experiment(spec, data.train, data.test, config.get_size("threads"),
                                     [&](const ExperimentRecord& r) {
                                       std::string line = std::string(r.cell.tied ? "tied" : "untied") +
                                                          " M=" + std::to_string(r.cell.feature_maps) +
                                                          " L=" + std::to_string(r.cell.layers) +
                                                          " P=" + std::to_string(r.param_count);
                                       if (r.failed()) {
                                         line += " FAILED: " + r.failure;
                                       } else {
                                         if (r.train_error) line += " train_err " + fmt("%.4f", *r.train_error);
                                         if (r.test_error) line += " test_err " + fmt("%.4f", *r.test_error);
                                       }
                                       emit(log, line);
                                     });
  auto os = open_artifact(out_dir, "results.csv");
  result.write_csv(os);
  write_manifest(out_dir, "experiment", config, artifacts);
  return 0;
}

int cmd_pairs(const RunConfig& config, const std::string& out_dir, const LogSink& log) {
  ArchConfig base = config.arch();
  const auto pairs =
      match_pairs(config.get_size("l"), config.get_size("m_min"), config.get_size("m_max"), config.get_real("tolerance"), base);
  auto os = open_artifact(out_dir, "pairs.csv");
  write_pairs_csv(os, pairs);
  write_manifest(out_dir, "pairs", config, {"pairs.csv"});
  emit(log, std::to_string(pairs.size()) + " matched pairs");
  return 0;
}

int cmd_gradcheck(const RunConfig& config, const std::string& out_dir, const LogSink& log) {
  const ArchConfig arch = config.arch();
  GradCheckOptions options;
  options.eps = config.get_real("gradcheck_eps");
  const auto report = check_model_grads(arch, static_cast<std::uint64_t>(config.get_int("seed")),
                                        config.get_real("gradcheck_tol"), options);
  std::ostringstream text;
  report.write_text(text);
  {
    auto os = open_artifact(out_dir, "gradcheck.csv");
    report.write_csv(os);
  }
  {
    auto os = open_artifact(out_dir, "gradcheck.txt");
    os << text.str();
  }
  write_manifest(out_dir, "gradcheck", config, {"gradcheck.csv", "gradcheck.txt"});
  std::istringstream lines(text.str());
  for (std::string line; std::getline(lines, line);) emit(log, line);
  return report.pass() ? 0 : 1;
}

int cmd_contours(const RunConfig& config, const std::string& out_dir, const LogSink& log) {
  const ArchConfig base = config.arch();
  const auto table = emit_contours(config.get_size_list("m_list"), config.get_size_list("l_list"), base.tied, base);
  auto os = open_artifact(out_dir, "contours.csv");
  table.write_csv(os);
  write_manifest(out_dir, "contours", config, {"contours.csv"});
  emit(log, std::to_string(table.levels.size()) + " contour levels");
  return 0;
}

// Validates a converted dataset: class histogram, pixel range and a
// lossless write/read round trip through the raw format.
int cmd_convert_check(const RunConfig& config, const std::string& out_dir, const LogSink& log) {
  const Datasets data = load_datasets(config);
  auto os = open_artifact(out_dir, "class_counts.csv");
  os << "split,class,count\n";
  auto report = [&](const char* split, const Dataset& d) {
    if (d.empty()) return;
    std::vector<std::size_t> counts(d.classes(), 0);
    for (auto label : d.labels()) ++counts[label];
    for (std::size_t k = 0; k < counts.size(); ++k) os << split << ',' << k << ',' << counts[k] << '\n';

    const auto encoded = encode_planar(d);
    const Dataset back = decode_planar(encoded, d.labels(), d.classes());
    if (encode_planar(back) != encoded) throw FormatError(std::string(split) + ": raw round trip is not lossless");
    emit(log, std::string(split) + ": " + std::to_string(d.size()) + " images, round trip ok");
  };
  report("train", data.train);
  report("test", data.test);
  write_manifest(out_dir, "convert-check", config, {"class_counts.csv"});
  return 0;
}

}  // namespace

Datasets load_datasets(const RunConfig& config) {
  const std::string& kind = config.get("dataset");
  const std::size_t classes = config.get_size("classes");
  Datasets out;
  if (kind == "synthetic") {
    const auto seed = static_cast<std::uint64_t>(config.get_int("synthetic_seed"));
    out.train = synthetic_color_dataset(config.get_size("synthetic_train"), seed);
    out.test = synthetic_color_dataset(config.get_size("synthetic_test"), seed + 1);
  } else if (kind == "noise") {
    const auto seed = static_cast<std::uint64_t>(config.get_int("synthetic_seed"));
    out.train = random_noise_dataset(config.get_size("synthetic_train"), classes, seed);
    out.test = random_noise_dataset(config.get_size("synthetic_test"), classes, seed + 1);
  } else if (kind == "cifar10") {
    out.train = load_cifar10(data_paths(config, "cifar_train_files"));
    if (!config.get_text_list("cifar_test_files").empty()) out.test = load_cifar10(data_paths(config, "cifar_test_files"));
  } else if (kind == "raw") {
    out.train = load_raw(data_path(config, config.get("raw_train_images")),
                         data_path(config, config.get("raw_train_labels")), config.get_size("raw_train_count"), classes);
    if (config.get_size("raw_test_count") > 0) {
      out.test = load_raw(data_path(config, config.get("raw_test_images")),
                          data_path(config, config.get("raw_test_labels")), config.get_size("raw_test_count"), classes);
    }
  } else {
    throw ConfigError("unknown dataset '" + kind + "' (expected synthetic, noise, cifar10 or raw)");
  }
  out.train = out.train.head(config.get_size("train_limit"));
  out.test = out.test.head(config.get_size("test_limit"));
  if (out.train.empty()) throw FormatError("training set is empty");
  return out;
}

void write_manifest(const std::string& out_dir, std::string_view subcommand, const RunConfig& config,
                    const std::vector<std::string>& artifacts) {
  auto os = open_artifact(out_dir, "manifest.txt");
  os << "# reconv run manifest\n";
  os << "# tool_version=" << kToolVersion << '\n';
  os << "# subcommand=" << subcommand << '\n';
  os << "# artifacts=";
  for (std::size_t i = 0; i < artifacts.size(); ++i) os << (i ? "," : "") << artifacts[i];
  os << '\n';
  config.write(os);
}

int run(std::string_view subcommand, RunConfig config, const std::string& out_dir, const LogSink& log) {
  if (std::find(std::begin(kSubcommands), std::end(kSubcommands), subcommand) == std::end(kSubcommands)) {
    throw Error(ErrorKind::usage, "unknown subcommand '" + std::string(subcommand) +
                                      "' (expected train, experiment, pairs, gradcheck, contours or convert-check)");
  }
  if (out_dir.empty()) throw Error(ErrorKind::usage, "an output directory is required");
  config.resolve_environment();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw FormatError("cannot create output directory " + out_dir + ": " + ec.message());

  if (subcommand == "train") return cmd_train(config, out_dir, log);
  if (subcommand == "experiment") return cmd_experiment(config, out_dir, log);
  if (subcommand == "pairs") return cmd_pairs(config, out_dir, log);
  if (subcommand == "gradcheck") return cmd_gradcheck(config, out_dir, log);
  if (subcommand == "contours") return cmd_contours(config, out_dir, log);
  return cmd_convert_check(config, out_dir, log);
}

}  // namespace reconv::runner
