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

#include "insloc/commands.hpp"

#include <fstream>
#include <sstream>

#include "insloc/errors.hpp"
#include "insloc/probes.hpp"
#include "insloc/selfcheck.hpp"

namespace insloc {
namespace {

namespace fs = std::filesystem;

// Maps library exceptions to exit codes.
template <typename Fn>
int guarded(std::ostream& err, const char* command, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "insloc " << command << ": config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "insloc " << command << ": error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error("cannot create output directory " + dir.string() +
                (ec ? ": " + ec.message() : ""));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

}  // namespace

RunConfig build_run_config(const CommandOptions& opts) {
  RunConfig cfg = opts.config ? load_config_file(*opts.config) : RunConfig{};
  for (const auto& o : opts.overrides) apply_override(cfg, o);
  cfg.resolve();
  return cfg;
}

int cmd_pretrain(const CommandOptions& opts, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, "pretrain", [&] {
    const RunConfig cfg = build_run_config(opts);
    const fs::path dir = cfg.out_dir;
    ensure_dir(dir);
    write_text(dir / kRunConfigFile, render_config(cfg));

    Trainer trainer(cfg.train);
    std::ios::openmode mode = std::ios::trunc;
    if (opts.resume) {
      trainer.restore(load_checkpoint(*opts.resume));
      mode = std::ios::app;
      out << "resumed from " << opts.resume->string() << " at step "
          << trainer.step() << "\n";
    }
    std::ofstream metrics(dir / kMetricsFile, mode);
    if (!metrics) throw Error("cannot write " + (dir / kMetricsFile).string());

    const std::size_t total = cfg.train.steps;
    const std::size_t every =
        cfg.checkpoint_every == 0 ? total : cfg.checkpoint_every;
    while (trainer.step() < total) {
      const std::size_t until = std::min(total, (trainer.step() / every + 1) * every);
      trainer.run(until, &metrics);
      if (trainer.step() < total) {
        save_checkpoint(dir / ("checkpoint_step" + std::to_string(trainer.step()) +
                               ".ilck"),
                        trainer.checkpoint());
      }
    }
    save_checkpoint(dir / kCheckpointFile, trainer.checkpoint());
    out << "mode " << to_string(cfg.train.mode) << ": " << trainer.step()
        << " steps, checkpoint " << (dir / kCheckpointFile).string() << "\n";
    return kExitOk;
  });
}

int cmd_probe(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, "probe", [&] {
    CommandOptions o = opts;
    fs::path ckpt_path;
    if (o.checkpoint) {
      ckpt_path = *o.checkpoint;
    } else {
      ckpt_path = fs::path(build_run_config(o).out_dir) / kCheckpointFile;
    }
    // A run directory carries the config its checkpoint was trained with.
    if (!o.config) {
      const fs::path sidecar = ckpt_path.parent_path() / kRunConfigFile;
      if (fs::exists(sidecar)) o.config = sidecar;
    }
    RunConfig cfg = build_run_config(o);
    if (o.M) {
      apply_setting(cfg, "probe_M", std::to_string(*o.M));
    }
    if (o.isolated_patches) cfg.probe.isolated_patches = true;
    cfg.resolve();
    if (o.encoder != "query" && o.encoder != "key") {
      throw ConfigError("--encoder must be 'query' or 'key', got '" + o.encoder + "'");
    }

    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    Trainer trainer(cfg.train);
    trainer.restore(ckpt);
    Encoder<float>& enc =
        o.encoder == "query" ? trainer.pair().query() : trainer.pair().key();
    const ProbeResult loc =
        localization_probe_accuracy(enc, trainer.gallery(), cfg.probe);
    const ProbeResult cls =
        classification_probe_accuracy(enc, trainer.gallery(), cfg.probe);
    out << probe_tsv_row(to_string(cfg.train.mode), cfg.probe.M, loc.accuracy,
                         cls.accuracy, cfg.train.seed)
        << "\n";
    return kExitOk;
  });
}

int cmd_compose(const CommandOptions& opts, std::ostream& out,
                std::ostream& err) {
  return guarded(err, "compose", [&] {
    const RunConfig cfg = build_run_config(opts);
    const std::size_t count = opts.count.value_or(cfg.compose_count);
    const fs::path dir = opts.out ? *opts.out : fs::path(cfg.out_dir) / "composites";
    ensure_dir(dir);
    const TrainConfig& t = cfg.train;
    const Gallery gallery =
        generate_gallery(t.gallery_size, t.composition.composite_size, t.seed);
    Rng rng = make_stream(t.seed, "compose");
    std::string tsv = "file\tx1\ty1\tx2\ty2\tinstance_id\tbackground_id\n";
    for (std::size_t i = 0; i < count; ++i) {
      const auto id = static_cast<std::size_t>(
          uniform_int(rng, 0, static_cast<std::int64_t>(t.gallery_size) - 1));
      const ViewPair pair = make_pair(gallery, id, t.augment, t.composition, rng);
      for (const auto* s : {&pair.query, &pair.key}) {
        const std::string stem = "pair" + std::to_string(i) +
                                 (s == &pair.query ? "_query" : "_key");
        const BBox& b = s->bbox;
        if (!(b.x1 >= 0 && b.y1 >= 0 && b.x2 <= s->image.width() &&
              b.y2 <= s->image.height() && b.valid())) {
          throw Error("composite box " + to_string(b) + " leaves the image");
        }
        write_ppm(s->image, dir / (stem + ".ppm"));
        write_ppm(draw_box(s->image, b, 1.0f, 0.0f, 0.0f), dir / (stem + "_box.ppm"));
        std::ostringstream row;
        row << stem << ".ppm\t" << b.x1 << '\t' << b.y1 << '\t' << b.x2 << '\t'
            << b.y2 << '\t' << s->instance_id << '\t' << s->background_id << '\n';
        tsv += row.str();
      }
    }
    write_text(dir / kComposeTsv, tsv);
    out << "wrote " << count << " composite pairs to " << dir.string() << "\n";
    return kExitOk;
  });
}

int cmd_selfcheck(const CommandOptions& opts, std::ostream& out,
                  std::ostream& err) {
  return guarded(err, "selfcheck", [&] {
    struct Restore {
      ~Restore() { testing::set_roi_backward_weight_scale(1.0); }
    } restore;
    testing::set_roi_backward_weight_scale(opts.fault_roi_weight);
    const auto results = run_selfcheck();
    std::size_t failed = 0;
    for (const auto& r : results) {
      out << format_check(r) << "\n";
      failed += !r.pass;
    }
    if (failed > 0) {
      err << "selfcheck: " << failed << " check(s) failed:";
      for (const auto& r : results) {
        if (!r.pass) err << " " << r.name << " (error " << r.error << ")";
      }
      err << "\n";
      return kExitRuntime;
    }
    out << "selfcheck: all " << results.size() << " checks passed\n";
    return kExitOk;
  });
}

}  // namespace insloc
