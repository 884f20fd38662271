// Command-line front end. Everything goes through the C API in reconv.h.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "reconv/reconv.h"

namespace {

struct Overrides {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  CLI::Option* untied = nullptr;
};

std::string flag_name(const char* key) {
  std::string name = key;
  for (auto& ch : name) {
    if (ch == '_') ch = '-';
  }
  return "--" + name;
}

const char* category(reconv_status status) {
  // Shape mismatches at this level come from inconsistent settings.
  return status == RECONV_ERR_SHAPE ? "config" : reconv_status_name(status);
}

int fail(reconv_status status, const std::string& message) {
  std::fprintf(stderr, "reconv: %s error: %s\n", category(status), message.c_str());
  return static_cast<int>(status == RECONV_ERR_SHAPE ? RECONV_ERR_CONFIG : status);
}

void add_key_options(CLI::App* sub, Overrides& o) {
  const size_t count = reconv_config_key_count();
  for (size_t i = 0; i < count; ++i) {
    reconv_key_info info{};
    if (reconv_config_key_info(i, &info) != RECONV_OK) continue;
    std::string names = flag_name(info.name);
    if (std::string(info.name) == "l") names += ",--layers";
    if (std::string(info.name) == "tolerance") names += ",--tol";
    std::string help = std::string(info.help) + " [default: " + info.default_value + "]";
    auto& slot = o.values[info.name];
    CLI::Option* opt = nullptr;
    if (info.type == RECONV_KEY_BOOLEAN) {
      opt = sub->add_option(names, slot, help)->expected(0, 1)->default_str("true");
    } else {
      opt = sub->add_option(names, slot, help);
    }
    o.options[info.name] = opt;
  }
  o.untied = sub->add_flag("--untied", "shorthand for --tied=false");
}

void print_line(void*, const char* line) { std::printf("%s\n", line); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recursive convolutional network experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", reconv_version());

  std::string config_path;
  std::string out_dir = "out";
  std::map<std::string, Overrides> overrides;
  std::map<std::string, CLI::App*> subs;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"train", "train a single model and write per-epoch metrics"},
      {"experiment", "run a declarative grid or pair experiment"},
      {"pairs", "enumerate tied/untied pairs with matched parameter counts"},
      {"gradcheck", "compare analytic gradients with finite differences"},
      {"contours", "emit parameter counts and iso-parameter contours over an (M, L) grid"},
      {"convert-check", "validate a dataset and its raw-format round trip"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key=value configuration file");
    sub->add_option("--out", out_dir, "output directory [default: out]");
    add_key_options(sub, overrides[name]);
    sub->allow_extras();
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(RECONV_ERR_USAGE, e.what());
  }

  std::string command;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }
  Overrides& o = overrides[command];

  reconv_config* config = nullptr;
  reconv_status status =
      config_path.empty() ? reconv_config_create(&config) : reconv_config_load(config_path.c_str(), &config);
  if (status != RECONV_OK) return fail(status, reconv_last_error());

  // Flags override file values, applied in key-table order.
  const size_t count = reconv_config_key_count();
  for (size_t i = 0; i < count && status == RECONV_OK; ++i) {
    reconv_key_info info{};
    reconv_config_key_info(i, &info);
    if (o.options[info.name]->count() == 0) continue;
    std::string value = o.values[info.name];
    if (info.type == RECONV_KEY_BOOLEAN && value.empty()) value = "true";
    status = reconv_config_set(config, info.name, value.c_str());
  }
  if (status == RECONV_OK && o.untied->count() > 0) status = reconv_config_set(config, "tied", "false");

  // Unrecognised --flags are passed through as keys so that a misspelt key
  // is reported as a configuration error listing the valid keys.
  const std::vector<std::string> extras = subs[command]->remaining();
  for (size_t i = 0; i < extras.size() && status == RECONV_OK; ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0) {
      reconv_config_destroy(config);
      return fail(RECONV_ERR_USAGE, "unexpected argument '" + arg + "'");
    }
    std::string key = arg.substr(2), value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else if (i + 1 < extras.size() && extras[i + 1].rfind("--", 0) != 0) {
      value = extras[++i];
    }
    for (auto& ch : key) {
      if (ch == '-') ch = '_';
    }
    status = reconv_config_set(config, key.c_str(), value.c_str());
  }
  if (status != RECONV_OK) {
    std::string message = reconv_last_error();
    reconv_config_destroy(config);
    return fail(status, message);
  }

  status = reconv_run(command.c_str(), config, out_dir.c_str(), print_line, nullptr);
  reconv_config_destroy(config);
  if (status != RECONV_OK) return fail(status, reconv_last_error());
  return 0;
}
