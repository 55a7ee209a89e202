// Copyright 2026 The ASD Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line entry point. Exit status: 0 success, 1 bad input or
// configuration, 2 internal failure (including numeric divergence).

#include <algorithm>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "asd/commands.h"
#include "asd/config.h"
#include "asd/error.h"

namespace {

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio-visual active speaker detection"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("-c,--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--set", sets, "override as key=value (repeatable)");
  std::map<std::string, std::string> overrides;
  for (const std::string& key : asd::RunConfig::keys()) {
    app.add_option(flag_name(key), overrides[key], "overrides '" + key + "'");
  }

  using Command = std::function<void(const asd::RunConfig&, std::ostream&)>;
  const std::vector<std::pair<std::string, std::pair<std::string, Command>>> commands = {
      {"synth", {"generate a synthetic dataset", asd::cmd_synth}},
      {"train", {"train the encoders and back-end(s)", asd::cmd_train}},
      {"infer", {"write per-frame scores for an annotation CSV", asd::cmd_infer}},
      {"smooth", {"smooth a prediction CSV per entity", asd::cmd_smooth}},
      {"score", {"mAP report for predictions against ground truth", asd::cmd_score}},
      {"import", {"pack PPM frames and raw audio into a bundle", asd::cmd_import}},
  };
  Command selected;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->fallthrough();
    sub->callback([&selected, run = entry.second] { selected = run; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    asd::RunConfig config;
    if (!config_path.empty()) config = asd::load_config_file(config_path);
    // Per-key flags, then --set in order given, so --set wins on conflicts.
    for (const std::string& key : asd::RunConfig::keys()) {
      if (app.count(flag_name(key)) > 0) config.set(key, overrides[key]);
    }
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw asd::ConfigError("--set expects key=value, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    selected(config, std::cout);
  } catch (const asd::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const asd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
