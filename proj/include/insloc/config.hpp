/* Copyright 2026 The InsLoc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Flat `key = value` run configuration shared by every subcommand.

#ifndef INSLOC_CONFIG_HPP_
#define INSLOC_CONFIG_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "insloc/probes.hpp"
#include "insloc/trainer.hpp"

namespace insloc {

struct RunConfig {
  TrainConfig train;  // aspect range and backbone variant resolved by resolve()
  ProbeConfig probe;
  std::optional<double> aspect_min, aspect_max;  // unset: mode default
  std::string out_dir = "insloc_run";
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  std::size_t compose_count = 8;

  // Fills mode-dependent fields and cross-checks everything. ConfigError on
  // any violation.
  void resolve();
};

struct ConfigKey {
  std::string name;
  std::string help;
};

// Every accepted key, in help order.
const std::vector<ConfigKey>& config_keys();

// Sets one key from its text value. ConfigError naming the key on unknown
// keys or out-of-range values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

// Current value of a key, in the syntax apply_setting accepts.
std::string get_setting(const RunConfig& cfg, std::string_view key);

// "key=value" as given on the command line.
void apply_override(RunConfig& cfg, std::string_view assignment);

// Lines of `key = value`; '#' starts a comment. Errors carry `source:line`.
RunConfig parse_config_text(std::string_view text,
                            const std::string& source = "<config>");
RunConfig load_config_file(const std::filesystem::path& path);

// Every key with its value, one `key = value` per line; parses back to an
// equivalent config.
std::string render_config(const RunConfig& cfg);

// Key listing with defaults and help text.
std::string config_help();

}  // namespace insloc

#endif  // INSLOC_CONFIG_HPP_
