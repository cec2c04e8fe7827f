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

// insloc <pretrain|probe|compose|selfcheck> [--config PATH] [--set key=value ...]

#include <iostream>

#include "CLI11.hpp"
#include "insloc/commands.hpp"

int main(int argc, char** argv) {
  using insloc::CommandOptions;
  CLI::App app{"Instance-localization contrastive pretraining on a synthetic gallery"};
  app.require_subcommand(1);
  app.footer("\n" + insloc::config_help() +
             "\nEnvironment: INSLOC_THREADS caps data-preparation worker threads.");

  CommandOptions opts;
  std::string config_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key = value config file");
    sub->add_option("--set", opts.overrides, "override one key (key=value), repeatable")
        ->take_all();
  };

  std::string resume, checkpoint, out_dir;
  std::size_t M = 0, count = 0;

  auto* pretrain = app.add_subcommand("pretrain", "train an encoder pair");
  add_common(pretrain);
  pretrain->add_option("--resume", resume, "continue from this checkpoint");

  auto* probe = app.add_subcommand("probe", "linear localization and classification probes");
  add_common(probe);
  probe->add_option("--checkpoint", checkpoint,
                    "checkpoint to probe (default: <out_dir>/checkpoint.ilck)");
  probe->add_option("--M", M, "localization patch count (perfect square)");
  probe->add_flag("--isolated-patches", opts.isolated_patches,
                  "forward each patch alone instead of the full image");
  probe->add_option("--encoder", opts.encoder, "query | key")->capture_default_str();

  auto* compose = app.add_subcommand("compose", "write composite samples as PPM files");
  add_common(compose);
  compose->add_option("--count", count, "number of composite pairs");
  compose->add_option("--out", out_dir, "output directory");

  auto* selfcheck = app.add_subcommand("selfcheck", "run the oracle battery");
  selfcheck->add_option("--fault-roi-weight", opts.fault_roi_weight,
                        "test hook: scale RoIAlign backward weights");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return insloc::kExitConfig;
  }

  if (!config_path.empty()) opts.config = config_path;
  if (!resume.empty()) opts.resume = resume;
  if (!checkpoint.empty()) opts.checkpoint = checkpoint;
  if (!out_dir.empty()) opts.out = out_dir;
  if (probe->count("--M") > 0) opts.M = M;
  if (compose->count("--count") > 0) opts.count = count;

  if (*pretrain) return insloc::cmd_pretrain(opts, std::cout, std::cerr);
  if (*probe) return insloc::cmd_probe(opts, std::cout, std::cerr);
  if (*compose) return insloc::cmd_compose(opts, std::cout, std::cerr);
  return insloc::cmd_selfcheck(opts, std::cout, std::cerr);
}
