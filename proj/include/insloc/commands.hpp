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

// Subcommands behind the `insloc` executable. Each returns the process exit
// code: 0 success, 1 runtime error, 2 configuration error.

#ifndef INSLOC_COMMANDS_HPP_
#define INSLOC_COMMANDS_HPP_

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "insloc/config.hpp"

namespace insloc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

// File names inside out_dir.
inline constexpr const char* kCheckpointFile = "checkpoint.ilck";
inline constexpr const char* kMetricsFile = "metrics.tsv";
inline constexpr const char* kRunConfigFile = "run.cfg";
inline constexpr const char* kComposeTsv = "composites.tsv";

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::vector<std::string> overrides;  // "key=value", applied after the file
  std::optional<std::filesystem::path> resume;      // pretrain
  std::optional<std::filesystem::path> checkpoint;  // probe
  std::optional<std::size_t> M;                     // probe
  bool isolated_patches = false;                    // probe
  std::string encoder = "query";                    // probe: query | key
  std::optional<std::size_t> count;                 // compose
  std::optional<std::filesystem::path> out;         // compose
  double fault_roi_weight = 1.0;                    // selfcheck test hook
};

// File (if any) + overrides, resolved. Throws ConfigError.
RunConfig build_run_config(const CommandOptions& opts);

int cmd_pretrain(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_probe(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_compose(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_selfcheck(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace insloc

#endif  // INSLOC_COMMANDS_HPP_
