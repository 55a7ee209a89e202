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

#include "asd/config.h"

#include <cctype>
#include <charconv>
#include <filesystem>
#include <functional>
#include <map>

#include "asd/annotations.h"
#include "asd/error.h"

namespace asd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* want) {
  throw ConfigError("value '" + std::string(value) + "' for '" + std::string(key) +
                    "' is not " + want);
}

std::int64_t to_int(std::string_view key, std::string_view v) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

double to_real(std::string_view key, std::string_view v) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean");
}

using Setter = std::function<void(RunConfig&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const auto* table = [] {
    auto* t = new std::map<std::string, Setter, std::less<>>;
    auto integer = [](std::int64_t RunConfig::*field) {
      return [field](RunConfig& c, std::string_view k, std::string_view v) {
        c.*field = to_int(k, v);
      };
    };
    auto real = [](double RunConfig::*field) {
      return [field](RunConfig& c, std::string_view k, std::string_view v) {
        c.*field = to_real(k, v);
      };
    };
    auto text = [](std::string RunConfig::*field) {
      return [field](RunConfig& c, std::string_view, std::string_view v) {
        c.*field = std::string(v);
      };
    };
    auto flag = [](bool RunConfig::*field) {
      return [field](RunConfig& c, std::string_view k, std::string_view v) {
        c.*field = to_bool(k, v);
      };
    };
    (*t)["clip_frames"] = integer(&RunConfig::clip_frames);
    (*t)["batch_size"] = integer(&RunConfig::batch_size);
    (*t)["learning_rate"] = real(&RunConfig::learning_rate);
    (*t)["max_steps"] = integer(&RunConfig::max_steps);
    (*t)["seed"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      const std::int64_t s = to_int(k, v);
      if (s < 0) bad_value(k, v, "a non-negative integer");
      c.seed = static_cast<std::uint64_t>(s);
    };
    (*t)["backend"] = [](RunConfig& c, std::string_view, std::string_view v) {
      c.backend = parse_backend_choice(std::string(v));
    };
    (*t)["smoothing"] = [](RunConfig& c, std::string_view, std::string_view v) {
      c.smoothing = parse_smoothing_method(v);
    };
    (*t)["window_seconds"] = real(&RunConfig::window_seconds);
    (*t)["preset"] = [](RunConfig& c, std::string_view, std::string_view v) {
      c.preset = parse_preset(v);
    };
    (*t)["freeze_frontend"] = flag(&RunConfig::freeze_frontend);
    (*t)["not_audible_positive"] = flag(&RunConfig::not_audible_positive);
    (*t)["eval_every"] = integer(&RunConfig::eval_every);
    (*t)["target_map"] = real(&RunConfig::target_map);
    (*t)["synth_tracks"] = integer(&RunConfig::synth_tracks);
    (*t)["synth_frames"] = integer(&RunConfig::synth_frames);
    (*t)["synth_positive_rate"] = real(&RunConfig::synth_positive_rate);
    (*t)["val_fraction"] = real(&RunConfig::val_fraction);
    (*t)["data_dir"] = text(&RunConfig::data_dir);
    (*t)["bundles_dir"] = text(&RunConfig::bundles_dir);
    (*t)["train_csv"] = text(&RunConfig::train_csv);
    (*t)["val_csv"] = text(&RunConfig::val_csv);
    (*t)["annotations"] = text(&RunConfig::annotations);
    (*t)["checkpoint"] = text(&RunConfig::checkpoint);
    (*t)["init_checkpoint"] = text(&RunConfig::init_checkpoint);
    (*t)["output"] = text(&RunConfig::output);
    (*t)["input"] = text(&RunConfig::input);
    (*t)["ground_truth"] = text(&RunConfig::ground_truth);
    (*t)["predictions"] = text(&RunConfig::predictions);
    (*t)["pr_curve"] = text(&RunConfig::pr_curve);
    (*t)["log_file"] = text(&RunConfig::log_file);
    (*t)["import_frames_dir"] = text(&RunConfig::import_frames_dir);
    (*t)["import_audio"] = text(&RunConfig::import_audio);
    (*t)["entity_id"] = text(&RunConfig::entity_id);
    return t;
  }();
  return *table;
}

std::string joined(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

std::string preset_name(ModelPreset preset) {
  return preset == ModelPreset::kTiny ? "tiny" : "full";
}

ModelPreset parse_preset(std::string_view name) {
  if (name == "tiny") return ModelPreset::kTiny;
  if (name == "full") return ModelPreset::kFull;
  throw ConfigError("unknown preset '" + std::string(name) + "' (expected tiny or full)");
}

void RunConfig::set(std::string_view key, std::string_view value) {
  if (key == "T") key = "clip_frames";
  auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second(*this, key, trim(value));
}

void RunConfig::validate() const {
  if (clip_frames < 5 || clip_frames > 25 || clip_frames % 2 == 0) {
    throw ConfigError("clip_frames (T) must be odd and within [5, 25], got " +
                      std::to_string(clip_frames));
  }
  if (batch_size <= 0 || batch_size % 2 != 0) {
    throw ConfigError("batch_size must be a positive even number");
  }
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
  if (!(window_seconds > 0)) throw ConfigError("window_seconds must be positive");
  if (eval_every < 0) throw ConfigError("eval_every must be non-negative");
  if (!(val_fraction >= 0 && val_fraction < 1)) throw ConfigError("val_fraction must be in [0, 1)");
}

std::string RunConfig::bundles_path() const {
  return bundles_dir.empty() ? joined(data_dir, "bundles") : bundles_dir;
}
std::string RunConfig::train_csv_path() const {
  return train_csv.empty() ? joined(data_dir, "train.csv") : train_csv;
}
std::string RunConfig::val_csv_path() const {
  return val_csv.empty() ? joined(data_dir, "val.csv") : val_csv;
}
std::string RunConfig::annotations_path() const {
  return annotations.empty() ? val_csv_path() : annotations;
}

LabelMapping RunConfig::label_mapping() const { return {not_audible_positive}; }

TrainOptions RunConfig::train_options() const {
  TrainOptions o;
  o.clip_frames = clip_frames;
  o.batch_size = batch_size;
  o.learning_rate = learning_rate;
  o.max_steps = max_steps;
  o.seed = seed;
  o.eval_every = eval_every;
  o.target_map = target_map;
  o.freeze_frontend = freeze_frontend;
  o.mapping = label_mapping();
  return o;
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : setters()) out.push_back(name);
    return out;
  }();
  return k;
}

void apply_config_text(RunConfig& config, std::string_view text) {
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

RunConfig load_config_file(const std::string& path) {
  RunConfig config;
  apply_config_text(config, read_text_file(path));
  return config;
}

}  // namespace asd
