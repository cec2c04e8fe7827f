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

// Acceptance suite: one PASS/FAIL line per criterion.
//
//   insloc_acceptance            every criterion, 1..9
//   insloc_acceptance 1 4 8      a subset
//
// Criteria 5-7 train desk-size models and take roughly half an hour on one
// core. Exit status is 0 only if every selected criterion passes.

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>

#include "insloc/commands.hpp"
#include "insloc/composition.hpp"
#include "insloc/contrastive.hpp"
#include "insloc/oracles.hpp"
#include "insloc/probes.hpp"
#include "insloc/selfcheck.hpp"
#include "insloc/trainer.hpp"

namespace insloc {
namespace {

using Clock = std::chrono::steady_clock;
using TensorD = Tensor<double>;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

TensorD random_tensor(const Shape& shape, Rng& rng, double lo = -1, double hi = 1) {
  TensorD t(shape);
  for (auto& v : t.values()) v = uniform(rng, lo, hi);
  return t;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Kernel oracles.

Verdict kernel_oracles() {
  const auto t0 = Clock::now();
  Rng rng = make_stream(1, "acceptance");
  double forward = 0.0, adjoint = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t C = std::size_t(uniform_int(rng, 1, 3));
    const std::size_t H = std::size_t(uniform_int(rng, 3, 10));
    const std::size_t W = std::size_t(uniform_int(rng, 3, 10));
    const TensorD fmap = random_tensor({2, C, H, W}, rng);
    RoiSpec spec{std::size_t(uniform_int(rng, 1, 5)), std::size_t(uniform_int(rng, 1, 3)),
                 uniform(rng, 0.25, 1.0), bernoulli(rng, 0.5)};
    const double ext_x = double(W) / spec.spatial_scale;
    const double ext_y = double(H) / spec.spatial_scale;
    const double x1 = uniform(rng, -0.2 * ext_x, 0.8 * ext_x);
    const double y1 = uniform(rng, -0.2 * ext_y, 0.8 * ext_y);
    const BBox box{x1, y1, x1 + uniform(rng, 0.3, 0.7 * ext_x),
                   y1 + uniform(rng, 0.3, 0.7 * ext_y)};
    const std::size_t n = std::size_t(uniform_int(rng, 0, 1));
    const TensorD out = roi_align_forward(fmap, box, n, spec);
    forward = std::max(forward, max_abs_diff(out, oracle::dense_roi_align(fmap, box, n, spec)));
    const TensorD g = random_tensor(out.shape(), rng);
    const double lhs = dot(out, g);
    const double rhs = dot(fmap, roi_align_backward(g, box, n, spec, fmap.shape()));
    adjoint = std::max(adjoint, std::abs(lhs - rhs));
  }
  const double secs = seconds_since(t0);
  return {forward < 1e-6 && adjoint < 1e-6 && secs < 10.0,
          "dense-oracle max diff " + fmt("%.2e", forward) + ", adjointness " +
              fmt("%.2e", adjoint) + " over 100 triples, " + fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// 2. Gradient suite, 3. InfoNCE closed form (both from the selfcheck battery
// plus a direct evaluation for 3).

Verdict gradient_suite() {
  const auto t0 = Clock::now();
  const auto results = run_selfcheck(0);
  const double secs = seconds_since(t0);
  std::size_t n = 0;
  std::string failed;
  double worst64 = 0.0, worst32 = 0.0;
  for (const auto& r : results) {
    if (r.name.rfind("fd-", 0) != 0) continue;
    ++n;
    if (!r.pass) failed += " " + r.name;
    if (r.name == "fd-end-to-end-c4-f32") {
      worst32 = r.error;
    } else {
      worst64 = std::max(worst64, r.error);
    }
  }
  std::string detail = std::to_string(n) + " finite-difference checks, worst 64-bit " +
                       fmt("%.2e", worst64) + ", 32-bit end-to-end " +
                       fmt("%.2e", worst32) + ", " + fmt("%.2f", secs) + " s";
  if (!failed.empty()) detail += "; failed:" + failed;
  return {failed.empty() && n >= 12 && secs < 60.0, detail};
}

Verdict info_nce_closed_form() {
  MemoryQueue<double> queue(8, 9);
  TensorD neg({8, 9});
  for (std::size_t i = 0; i < 8; ++i) neg.at(i, i + 1) = 1.0;
  queue.enqueue(neg);
  TensorD q({1, 9});
  q[0] = 1.0;
  const double loss = info_nce_loss(q, q, queue, 0.2).loss;
  const double e5 = std::exp(5.0);
  const double expect = -std::log(e5 / (e5 + 8.0));
  const double err = std::abs(loss - expect);
  return {err < 1e-5, "loss " + fmt("%.8f", loss) + " vs " + fmt("%.8f", expect) +
                          " (|diff| " + fmt("%.1e", err) + ")"};
}

// ---------------------------------------------------------------------------
// 4. Geometry properties, 10^4 randomized trials each.

Verdict geometry() {
  Rng rng = make_stream(4, "acceptance");
  const int kTrials = 10000;
  std::vector<std::string> bad;

  // IoU symmetry, bounds, identity.
  std::size_t iou_bad = 0;
  for (int i = 0; i < kTrials; ++i) {
    auto box = [&] {
      const double x = uniform(rng, 0, 60), y = uniform(rng, 0, 60);
      return BBox{x, y, x + uniform(rng, 0.1, 40), y + uniform(rng, 0.1, 40)};
    };
    const BBox a = box(), b = box();
    const double v = iou(a, b);
    if (v != iou(b, a) || v < 0.0 || v > 1.0 || iou(a, a) != 1.0 ||
        std::abs(v - oracle::box_iou(a, b)) > 1e-12) {
      ++iou_bad;
    }
  }
  if (iou_bad) bad.push_back("iou " + std::to_string(iou_bad));

  // augment_bbox postcondition.
  const auto anchors = clipped_anchors(AnchorConfig{}, 64, 64);
  std::size_t aug_bad = 0;
  for (int i = 0; i < kTrials; ++i) {
    const double w = uniform(rng, 4, 64), h = uniform(rng, 4, 64);
    const double x = uniform(rng, 0, 64 - w), y = uniform(rng, 0, 64 - h);
    const BBox gt{x, y, x + w, y + h};
    const BBox out = augment_bbox(gt, anchors, 0.5, rng);
    if (!(out == gt || iou(out, gt) > 0.5)) ++aug_bad;
  }
  if (aug_bad) bad.push_back("augment_bbox " + std::to_string(aug_bad));

  // Uniformity over the candidate set (coinciding clipped anchors share a bin).
  const BBox gt{16, 16, 48, 48};
  const auto cand = anchor_candidates(gt, anchors, 0.5);
  std::vector<BBox> bins;
  std::vector<double> mult;
  for (auto c : cand) {
    auto it = std::find(bins.begin(), bins.end(), anchors[c]);
    if (it == bins.end()) {
      bins.push_back(anchors[c]);
      mult.push_back(1.0);
    } else {
      mult[it - bins.begin()] += 1.0;
    }
  }
  std::vector<double> counts(bins.size(), 0.0);
  for (int i = 0; i < kTrials; ++i) {
    const BBox out = augment_bbox(gt, anchors, 0.5, rng);
    auto it = std::find(bins.begin(), bins.end(), out);
    if (it != bins.end()) counts[it - bins.begin()] += 1.0;
  }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const double e = kTrials * mult[i] / double(cand.size());
    chi2 += (counts[i] - e) * (counts[i] - e) / e;
  }
  double p = 0.0;
  if (bins.size() >= 2) {
    p = boost::math::cdf(boost::math::complement(
        boost::math::chi_squared(double(bins.size() - 1)), chi2));
  }
  if (!(p > 0.01)) bad.push_back("chi2 p=" + fmt("%.4f", p));

  // Hard paste: pixels outside the box are the background.
  const Gallery g = generate_gallery(2, 64, 4);
  std::size_t paste_bad = 0;
  for (int i = 0; i < kTrials; ++i) {
    const Composite c = compose(g.images[0], g.images[1], CompositionParams{}, rng);
    const BBox& b = c.bbox;
    if (!(b.valid() && b.x1 >= 0 && b.y1 >= 0 && b.x2 <= 64 && b.y2 <= 64)) {
      ++paste_bad;
      continue;
    }
    double diff = 0.0;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        if (x >= b.x1 && x < b.x2 && y >= b.y1 && y < b.y2) continue;
        for (int ch = 0; ch < 3; ++ch)
          diff += std::abs(c.image.at(y, x, ch) - g.images[1].at(y, x, ch));
      }
    if (diff != 0.0) ++paste_bad;
  }
  if (paste_bad) bad.push_back("composite " + std::to_string(paste_bad));

  // Patch grid tiles the image exactly.
  std::size_t grid_bad = 0;
  for (int i = 0; i < kTrials; ++i) {
    const int h = int(uniform_int(rng, 2, 128)), w = int(uniform_int(rng, 2, 128));
    const std::size_t s = std::size_t(uniform_int(rng, 1, 5));
    const auto cells = patch_grid(h, w, s * s);
    double area = 0.0;
    bool ok = cells.front().x1 == 0 && cells.front().y1 == 0 &&
              cells.back().x2 == w && cells.back().y2 == h;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      area += cells[k].area();
      if (k % s + 1 < s) ok &= cells[k].x2 == cells[k + 1].x1;
      if (k + s < cells.size()) ok &= cells[k].y2 == cells[k + s].y1;
    }
    if (!ok || std::abs(area - double(h) * w) > 1e-9) ++grid_bad;
  }
  if (grid_bad) bad.push_back("patch grid " + std::to_string(grid_bad));

  std::string detail = "5 properties x 10^4 trials, chi2 p=" + fmt("%.3f", p) + " over " +
                       std::to_string(bins.size()) + " candidate boxes";
  for (const auto& b : bad) detail += "; violations: " + b;
  return {bad.empty(), detail};
}

// ---------------------------------------------------------------------------
// 5-7. Desk training runs, shared between criteria.

struct DeskRun {
  std::unique_ptr<Trainer> trainer;
  std::vector<StepRecord> trace;
  double seconds = 0.0;
  std::optional<ProbeResult> loc, cls;
};

std::map<std::pair<TrainMode, std::uint64_t>, DeskRun> g_runs;

DeskRun& desk_run(TrainMode mode, std::uint64_t seed) {
  auto key = std::make_pair(mode, seed);
  auto it = g_runs.find(key);
  if (it != g_runs.end()) return it->second;
  TrainConfig cfg = TrainConfig::desk(mode);
  cfg.seed = seed;
  DeskRun run;
  const auto t0 = Clock::now();
  run.trainer = std::make_unique<Trainer>(cfg);
  run.trace = run.trainer->run_all();
  run.seconds = seconds_since(t0);
  std::fprintf(stderr, "  trained %s seed %llu: %zu steps in %.0f s\n",
               to_string(mode).c_str(), static_cast<unsigned long long>(seed),
               run.trace.size(), run.seconds);
  return g_runs.emplace(key, std::move(run)).first->second;
}

ProbeConfig desk_probe(std::uint64_t seed) {
  ProbeConfig p;
  p.seed = seed;
  return p;
}

const ProbeResult& loc_probe(DeskRun& run) {
  if (!run.loc) {
    run.loc = localization_probe_accuracy(run.trainer->pair().query(),
                                          run.trainer->gallery(),
                                          desk_probe(run.trainer->config().seed));
  }
  return *run.loc;
}

const ProbeResult& cls_probe(DeskRun& run) {
  if (!run.cls) {
    run.cls = classification_probe_accuracy(run.trainer->pair().query(),
                                            run.trainer->gallery(),
                                            desk_probe(run.trainer->config().seed));
  }
  return *run.cls;
}

struct Window {
  double loss = 0.0, pos = 0.0;
};

Window mean_window(const std::vector<StepRecord>& trace, std::size_t begin) {
  Window w;
  for (std::size_t i = begin; i < begin + 100; ++i) {
    w.loss += trace[i].loss / 100.0;
    w.pos += trace[i].positive_similarity / 100.0;
  }
  return w;
}

Verdict training_progress() {
  bool pass = true;
  std::string detail;
  for (auto mode : {TrainMode::kInslocC4, TrainMode::kInslocFpn}) {
    const DeskRun& run = desk_run(mode, 0);
    if (run.trace.size() < 200) return {false, "trace shorter than 200 steps"};
    const Window first = mean_window(run.trace, 0);
    const Window last = mean_window(run.trace, run.trace.size() - 100);
    const bool ok = last.loss < first.loss && last.pos > first.pos && run.seconds < 900.0;
    pass &= ok;
    if (!detail.empty()) detail += "; ";
    detail += to_string(mode) + " loss " + fmt("%.3f", first.loss) + " -> " +
              fmt("%.3f", last.loss) + ", pos " + fmt("%.3f", first.pos) + " -> " +
              fmt("%.3f", last.pos) + ", " + fmt("%.0f", run.seconds) + " s";
  }
  return {pass, detail};
}

Verdict localization_beats_chance() {
  const ProbeResult& r = loc_probe(desk_run(TrainMode::kInslocC4, 0));
  return {r.accuracy > 0.5, "insloc-c4 9-way accuracy " + fmt("%.4f", r.accuracy) +
                                " on " + std::to_string(r.eval_count) +
                                " held-out patches (chance " + fmt("%.3f", r.chance) + ")"};
}

Verdict localization_vs_baseline() {
  int wins = 0, cls_baseline_ahead = 0;
  std::string rows;
  for (std::uint64_t seed : {0, 1, 2}) {
    DeskRun& ins = desk_run(TrainMode::kInslocC4, seed);
    DeskRun& base = desk_run(TrainMode::kBaselineHolistic, seed);
    const double li = loc_probe(ins).accuracy, lb = loc_probe(base).accuracy;
    const double ci = cls_probe(ins).accuracy, cb = cls_probe(base).accuracy;
    wins += li > lb;
    cls_baseline_ahead += cb >= ci;
    std::printf("  %s\n  %s\n", probe_tsv_row("insloc-c4", 9, li, ci, seed).c_str(),
                probe_tsv_row("baseline-holistic", 9, lb, cb, seed).c_str());
    std::fflush(stdout);
    rows += " s" + std::to_string(seed) + " " + fmt("%.3f", li) + "/" + fmt("%.3f", lb);
  }
  return {wins >= 2, "loc insloc > baseline in " + std::to_string(wins) +
                         "/3 seeds (insloc/baseline:" + rows +
                         "); cls baseline >= insloc in " +
                         std::to_string(cls_baseline_ahead) + "/3 (reported only)"};
}

// ---------------------------------------------------------------------------
// 8. Mechanism invariants.

Verdict mechanism_invariants() {
  std::vector<std::string> bad;

  // FIFO on capacity 4: [a,b], [c,d], [e,f] leaves {e,f,c,d}.
  {
    MemoryQueue<double> q(4, 6);
    auto rows = [](std::size_t a, std::size_t b) {
      TensorD t({2, 6});
      t.at(0, a) = 1.0;
      t.at(1, b) = 1.0;
      return t;
    };
    q.enqueue(rows(0, 1));
    q.enqueue(rows(2, 3));
    q.enqueue(rows(4, 5));
    TensorD expect({4, 6});
    const std::size_t order[] = {4, 5, 2, 3};
    for (std::size_t r = 0; r < 4; ++r) expect.at(r, order[r]) = 1.0;
    if (!(q.storage() == expect)) bad.push_back("fifo");
  }

  // EMA, bitwise against the formula evaluated in place.
  {
    Rng rng = make_stream(8, "acceptance");
    nn::Parameter<float> key("w", {64}), query("w", {64});
    for (auto& v : key.value.values()) v = float(uniform(rng, -1, 1));
    for (auto& v : query.value.values()) v = float(uniform(rng, -1, 1));
    Tensor<float> expect = key.value;
    const double m = 0.999;
    for (std::size_t i = 0; i < 64; ++i) {
      expect[i] = float(m) * expect[i] + float(1.0 - m) * query.value[i];
    }
    ema_update<float>({&key}, {&query}, m);
    if (!(key.value == expect)) bad.push_back("ema");
  }

  // FPN queue isolation: a step reads and writes only its own level's queue.
  {
    TrainConfig cfg = TrainConfig::desk(TrainMode::kInslocFpn);
    cfg.steps = 2;
    cfg.batch_size = 4;
    cfg.queue_size = 8;
    Trainer t(cfg);
    std::vector<Tensor<float>> before;
    for (auto& q : t.queues()) before.push_back(q.storage());
    t.train_step();
    bool ok = true;
    for (std::size_t l = 0; l < t.queues().size(); ++l) {
      const auto& q = t.queues()[l];
      ok &= q.cursor() == 4 && q.filled() == 8;
      for (std::size_t l2 = 0; l2 < t.queues().size(); ++l2) {
        if (l2 == l) continue;
        // Rows written to level l never equal rows written to another level.
        for (std::size_t r = 0; r < 4; ++r) {
          bool same = true;
          for (std::size_t d = 0; d < q.dim(); ++d)
            same &= q.storage().at(r, d) == t.queues()[l2].storage().at(r, d);
          ok &= !same;
        }
      }
      // Untouched slots keep their initial contents.
      for (std::size_t r = 4; r < 8; ++r)
        for (std::size_t d = 0; d < q.dim(); ++d)
          ok &= q.storage().at(r, d) == before[l].at(r, d);
    }
    // Replacing one level's negatives changes only that level's loss.
    BackboneConfig small;
    small.variant = BackboneVariant::kFpn;
    small.widths = {4, 6, 6, 6};
    small.fpn_width = 6;
    small.box_fc_dim = 16;
    small.head_hidden = 16;
    small.head_dim = 8;
    EncoderPair<double> pair(small, 0.9);
    Rng rng = make_stream(8, "acceptance", 1);
    pair.init(rng);
    std::vector<MemoryQueue<double>> queues;
    for (int l = 0; l < 4; ++l) {
      queues.emplace_back(16, 8);
      queues.back().fill_random(rng);
    }
    StepInputs<double> in{random_tensor({2, 3, 64, 64}, rng, 0, 1),
                          {{0, 0, 40, 40}, {8, 8, 60, 56}},
                          random_tensor({2, 3, 64, 64}, rng, 0, 1),
                          {{4, 4, 44, 60}, {0, 0, 64, 64}}};
    const StepLoss a = insloc_step_loss(pair, in, queues, 0.2, {false, false});
    queues[1].fill_random(rng);
    const StepLoss b = insloc_step_loss(pair, in, queues, 0.2, {false, false});
    for (std::size_t l = 0; l < 4; ++l) {
      ok &= (l == 1) ? a.level_losses[l] != b.level_losses[l]
                     : a.level_losses[l] == b.level_losses[l];
    }
    if (!ok) bad.push_back("fpn-queue-isolation");
  }

  // Resume at t reproduces the uninterrupted run to T bit-exactly.
  for (auto mode : {TrainMode::kInslocC4, TrainMode::kInslocFpn}) {
    TrainConfig cfg = TrainConfig::desk(mode);
    cfg.steps = 8;
    cfg.batch_size = 8;
    cfg.queue_size = 32;
    Trainer straight(cfg);
    straight.run_all();
    Trainer first(cfg);
    first.run(3);
    const auto bytes = encode_checkpoint(first.checkpoint());
    Trainer resumed(cfg);
    resumed.restore(decode_checkpoint(bytes));
    resumed.run_all();
    if (encode_checkpoint(resumed.checkpoint()) != encode_checkpoint(straight.checkpoint())) {
      bad.push_back("resume-" + to_string(mode));
    }
  }

  std::string detail = "fifo, ema bitwise, fpn queue isolation, resume bit-exact (c4, fpn)";
  for (const auto& b : bad) detail += "; FAILED " + b;
  return {bad.empty(), detail};
}

// ---------------------------------------------------------------------------
// 9. Release gate.

Verdict selfcheck_gate() {
  const auto t0 = Clock::now();
  std::ostringstream out, err;
  const int code = cmd_selfcheck(CommandOptions{}, out, err);
  const double secs = seconds_since(t0);
  return {code == kExitOk && secs < 60.0,
          "exit " + std::to_string(code) + " in " + fmt("%.2f", secs) + " s" +
              (err.str().empty() ? "" : "; " + err.str())};
}

}  // namespace
}  // namespace insloc

int main(int argc, char** argv) {
  using namespace insloc;
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"kernel oracles", kernel_oracles},
      {"gradient suite", gradient_suite},
      {"infonce closed form", info_nce_closed_form},
      {"geometry properties", geometry},
      {"training progress", training_progress},
      {"localization probe beats chance", localization_beats_chance},
      {"localization vs baseline", localization_vs_baseline},
      {"mechanism invariants", mechanism_invariants},
      {"selfcheck gate", selfcheck_gate},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int c = std::atoi(argv[i]);
    if (c < 1 || c > int(criteria.size())) {
      std::fprintf(stderr, "usage: %s [criterion 1-%zu ...]\n", argv[0], criteria.size());
      return 2;
    }
    selected.insert(c);
  }
  if (selected.empty()) {
    for (int c = 1; c <= int(criteria.size()); ++c) selected.insert(c);
  }
  int failures = 0;
  for (int c : selected) {
    const auto& [name, fn] = criteria[c - 1];
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("criterion %d %s: %s  %s\n", c, v.pass ? "PASS" : "FAIL", name,
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %zu criteria, %d failed\n", selected.size(), failures);
  return failures == 0 ? 0 : 1;
}
