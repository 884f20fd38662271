#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reconv/data.hpp"
#include "reconv/run_config.hpp"

// Subcommand implementations shared by the C API and the command-line tool.
// Each writes its CSV artifacts plus manifest.txt under `out_dir`.
namespace reconv::runner {

using LogSink = std::function<void(std::string_view line)>;

inline constexpr std::string_view kSubcommands[] = {"train",     "experiment", "pairs",
                                                    "gradcheck", "contours",   "convert-check"};

struct Datasets {
  Dataset train;
  Dataset test;
};

// Loads the train/test sets selected by the `dataset` key.
Datasets load_datasets(const RunConfig& config);

// Writes the manifest: header comments (tool version, subcommand,
// artifacts) followed by the fully resolved configuration.
void write_manifest(const std::string& out_dir, std::string_view subcommand, const RunConfig& config,
                    const std::vector<std::string>& artifacts);

// Returns 0 on success. gradcheck returns 1 when a tensor fails; every
// other failure is raised as reconv::Error.
int run(std::string_view subcommand, RunConfig config, const std::string& out_dir, const LogSink& log = {});

}  // namespace reconv::runner
