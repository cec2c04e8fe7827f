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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "insloc/trainer.hpp"
#include "test_util.hpp"

namespace insloc {
namespace {

namespace fs = std::filesystem;

// A few-second configuration with every moving part of the desk one.
TrainConfig tiny_config(TrainMode mode) {
  TrainConfig cfg = TrainConfig::desk(mode);
  cfg.steps = 6;
  cfg.batch_size = 4;
  cfg.queue_size = 16;
  cfg.gallery_size = 8;
  cfg.backbone.widths = {4, 4, 4, 4};
  cfg.backbone.fpn_width = 4;
  cfg.backbone.box_fc_dim = 8;
  cfg.backbone.head_hidden = 8;
  cfg.backbone.head_dim = 8;
  cfg.composition.composite_size = 32;
  cfg.composition.scale = {8, 24};
  cfg.augment.view_size = 32;
  return cfg;
}

std::vector<Tensor<float>> values(Encoder<float>& enc) {
  std::vector<Tensor<float>> out;
  for (auto* p : enc.params()) out.push_back(p->value);
  return out;
}

TEST(CosineLr, Endpoints) {
  EXPECT_DOUBLE_EQ(cosine_lr(0, 100, 0.03), 0.03);
  EXPECT_NEAR(cosine_lr(100, 100, 0.03), 0.0, 1e-18);
  EXPECT_NEAR(cosine_lr(50, 100, 0.03), 0.015, 1e-15);
  EXPECT_NEAR(cosine_lr(25, 100, 1.0), 0.5 * (1 + std::cos(std::numbers::pi / 4)), 1e-15);
  EXPECT_THROW(cosine_lr(0, 0, 0.03), InvalidArgument);
  EXPECT_THROW(cosine_lr(101, 100, 0.03), InvalidArgument);
}

TEST(Sgd, ZeroGradientZeroDecayLeavesTheta) {
  nn::Parameter<double> p("w", {3});
  p.value = Tensor<double>({3}, {1.0, -2.0, 3.0});
  std::vector<Tensor<double>> v;
  sgd_step<double>({&p}, v, 0.1, 0.9, 0.0);
  EXPECT_EQ(p.value, (Tensor<double>({3}, {1.0, -2.0, 3.0})));
}

TEST(Sgd, OneStepWithDecay) {
  nn::Parameter<double> p("w", {2});
  p.value = Tensor<double>({2}, {1.0, -2.0});
  p.grad = Tensor<double>({2}, {0.5, 0.25});
  std::vector<Tensor<double>> v;
  sgd_step<double>({&p}, v, 0.1, 0.9, 0.01);
  EXPECT_NEAR(p.value[0], 1.0 - 0.1 * (0.5 + 0.01 * 1.0), 1e-15);
  EXPECT_NEAR(p.value[1], -2.0 - 0.1 * (0.25 + 0.01 * -2.0), 1e-15);
}

TEST(Sgd, TwoStepsUnrolled) {
  nn::Parameter<double> p("w", {1});
  p.value[0] = 0.7;
  p.grad[0] = 0.3;
  std::vector<Tensor<double>> v;
  const double lr = 0.05, mom = 0.9;
  sgd_step<double>({&p}, v, lr, mom, 0.0);
  sgd_step<double>({&p}, v, lr, mom, 0.0);
  EXPECT_NEAR(p.value[0] - 0.7, -lr * (0.3 + (1 + mom) * 0.3), 1e-15);
}

TEST(PrepareSample, BoxAugSwitch) {
  TrainConfig cfg = tiny_config(TrainMode::kInslocC4);
  const Gallery g = generate_gallery(cfg.gallery_size, 32, 0);
  const auto anchors = clipped_anchors(cfg.anchors, 32, 32);
  cfg.box_aug = false;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = prepare_sample(cfg, g, anchors, seed % 8, seed);
    ASSERT_EQ(s.query_box, s.query_gt_box);
  }
  cfg.box_aug = true;
  bool moved = false;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = prepare_sample(cfg, g, anchors, seed % 8, seed);
    ASSERT_TRUE(s.query_box == s.query_gt_box || iou(s.query_box, s.query_gt_box) > 0.5);
    moved |= !(s.query_box == s.query_gt_box);
  }
  EXPECT_TRUE(moved);
}

TEST(PrepareSample, BaselineUsesFullImageBoxes) {
  const TrainConfig cfg = tiny_config(TrainMode::kBaselineHolistic);
  const Gallery g = generate_gallery(cfg.gallery_size, 32, 0);
  const auto s = prepare_sample(cfg, g, {}, 2, 11);
  const BBox full{0, 0, 32, 32};
  EXPECT_EQ(s.query_box, full);
  EXPECT_EQ(s.key_box, full);
}

TEST(Trainer, ZeroStepsKeepsInitialization) {
  TrainConfig cfg = tiny_config(TrainMode::kInslocC4);
  cfg.steps = 0;
  Trainer t(cfg);
  const auto before = values(t.pair().query());
  EXPECT_TRUE(t.run_all().empty());
  EXPECT_EQ(values(t.pair().query()), before);
  EXPECT_EQ(values(t.pair().key()), before);
}

TEST(Trainer, SameSeedSameTrace) {
  for (auto mode : {TrainMode::kInslocC4, TrainMode::kInslocFpn, TrainMode::kBaselineHolistic}) {
    const TrainConfig cfg = tiny_config(mode);
    Trainer a(cfg), b(cfg);
    const auto ta = a.run_all(), tb = b.run_all();
    ASSERT_EQ(ta.size(), cfg.steps);
    for (std::size_t i = 0; i < ta.size(); ++i) {
      EXPECT_EQ(ta[i].loss, tb[i].loss) << to_string(mode) << " step " << i;
      EXPECT_TRUE(std::isfinite(ta[i].loss));
    }
  }
}

TEST(Trainer, WorkerThreadsDoNotChangeResults) {
  const TrainConfig cfg = tiny_config(TrainMode::kInslocC4);
  Trainer single(cfg);
  const auto a = single.run(3);
  ::setenv("INSLOC_THREADS", "3", 1);
  Trainer multi(cfg);
  const auto b = multi.run(3);
  ::unsetenv("INSLOC_THREADS");
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i].loss, b[i].loss);
}

TEST(Trainer, MetricsLines) {
  const TrainConfig cfg = tiny_config(TrainMode::kInslocC4);
  Trainer t(cfg);
  std::ostringstream os;
  t.run(2, &os);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_EQ(text.rfind("0\t", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\t'), 4);
}

TEST(Trainer, LrFollowsCosine) {
  const TrainConfig cfg = tiny_config(TrainMode::kInslocC4);
  Trainer t(cfg);
  const auto trace = t.run_all();
  for (const auto& r : trace) EXPECT_DOUBLE_EQ(r.lr, cosine_lr(r.step, cfg.steps, cfg.lr));
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  const TrainConfig cfg = tiny_config(TrainMode::kInslocFpn);
  Trainer t(cfg);
  t.run(2);
  const auto bytes = encode_checkpoint(t.checkpoint());
  const auto again = encode_checkpoint(decode_checkpoint(bytes));
  EXPECT_EQ(bytes, again);
  const fs::path path = fs::temp_directory_path() / "insloc_test_ckpt.ilck";
  save_checkpoint(path, decode_checkpoint(bytes));
  EXPECT_EQ(load_checkpoint(path), decode_checkpoint(bytes));
  fs::remove(path);
}

TEST(Checkpoint, ResumeIsBitExact) {
  for (auto mode : {TrainMode::kInslocC4, TrainMode::kInslocFpn}) {
    const TrainConfig cfg = tiny_config(mode);
    Trainer straight(cfg);
    const auto full = straight.run_all();

    Trainer first(cfg);
    first.run(3);
    const auto bytes = encode_checkpoint(first.checkpoint());
    Trainer resumed(cfg);
    resumed.restore(decode_checkpoint(bytes));
    EXPECT_EQ(resumed.step(), 3u);
    const auto tail = resumed.run_all();
    ASSERT_EQ(tail.size(), cfg.steps - 3);
    for (std::size_t i = 0; i < tail.size(); ++i) EXPECT_EQ(tail[i].loss, full[3 + i].loss);
    EXPECT_EQ(values(resumed.pair().query()), values(straight.pair().query()));
    EXPECT_EQ(values(resumed.pair().key()), values(straight.pair().key()));
    for (std::size_t l = 0; l < straight.queues().size(); ++l) {
      EXPECT_EQ(resumed.queues()[l].storage(), straight.queues()[l].storage());
    }
  }
}

TEST(Checkpoint, RejectsForeignConfig) {
  TrainConfig cfg = tiny_config(TrainMode::kInslocC4);
  Trainer t(cfg);
  const Checkpoint c = t.checkpoint();
  cfg.temperature = 0.3;
  Trainer other(cfg);
  EXPECT_THROW(other.restore(c), InvalidArgument);
}

TEST(Checkpoint, WrongMagicAndTruncation) {
  Trainer t(tiny_config(TrainMode::kInslocC4));
  auto bytes = encode_checkpoint(t.checkpoint());
  auto bad = bytes;
  bad[0] = 'X';
  try {
    decode_checkpoint(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("\"ILCK\""), std::string::npos) << e.what();
    EXPECT_EQ(e.offset(), 0u);
  }
  EXPECT_THROW(decode_checkpoint({'I', 'L'}), ParseError);
  bytes.resize(bytes.size() - 3);
  try {
    decode_checkpoint(bytes);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("expected"), std::string::npos) << e.what();
  }
  auto padded = encode_checkpoint(t.checkpoint());
  padded.push_back(0);
  EXPECT_THROW(decode_checkpoint(padded), ParseError);
}

TEST(Checkpoint, LoadNamesMissingPath) {
  try {
    load_checkpoint("/nonexistent/insloc.ilck");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/insloc.ilck"), std::string::npos);
  }
}

TEST(TrainConfig, ValidationErrors) {
  TrainConfig cfg = tiny_config(TrainMode::kInslocC4);
  cfg.queue_size = 2;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = tiny_config(TrainMode::kInslocFpn);
  cfg.backbone.variant = BackboneVariant::kC4;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = tiny_config(TrainMode::kInslocFpn);
  cfg.composition.composite_size = 48;
  cfg.augment.view_size = 48;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  EXPECT_THROW(parse_train_mode("moco"), InvalidArgument);
}

TEST(TrainConfig, HashTracksFields) {
  const TrainConfig a = TrainConfig::desk(TrainMode::kInslocC4);
  TrainConfig b = a;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.ema_momentum = 0.99;
  EXPECT_NE(config_hash(a), config_hash(b));
}

// Whole-step gradient in 32-bit arithmetic on a two-stage C4 backbone,
// checked by central differences on the largest-gradient coordinates.
TEST(InslocStep, EndToEndFiniteDifference32) {
  BackboneConfig cfg;
  cfg.widths = {4, 6};
  cfg.head_hidden = 8;
  cfg.head_dim = 6;
  cfg.roi_output = 3;
  EncoderPair<float> pair(cfg, 0.9);
  Rng rng(21);
  pair.init(rng);
  for (auto* p : pair.key().params())
    for (auto& v : p->value.values()) v += static_cast<float>(uniform(rng, -0.05, 0.05));
  std::vector<MemoryQueue<float>> queues{MemoryQueue<float>(8, 6)};
  queues[0].fill_random(rng);
  StepInputs<float> in{test::random_tensor<float>({2, 3, 16, 16}, rng, 0, 1),
                       {{1, 2, 14, 13}, {0, 0, 12, 16}},
                       test::random_tensor<float>({2, 3, 16, 16}, rng, 0, 1),
                       {{3, 1, 16, 15}, {2, 2, 14, 14}}};
  insloc_step_loss(pair, in, queues, 0.2, {true, false});
  auto params = pair.query().backbone().params();
  struct Coord {
    nn::Parameter<float>* p;
    std::size_t i;
  };
  std::vector<Coord> coords;
  for (auto* p : params)
    for (std::size_t i = 0; i < p->value.size(); ++i) coords.push_back({p, i});
  std::sort(coords.begin(), coords.end(), [](const Coord& a, const Coord& b) {
    return std::abs(a.p->grad[a.i]) > std::abs(b.p->grad[b.i]);
  });
  coords.resize(10);
  std::vector<double> analytic, numeric;
  const float h = 2e-3f;
  for (const auto& c : coords) {
    analytic.push_back(c.p->grad[c.i]);
    const float saved = c.p->value[c.i];
    const float hi = saved + h, lo = saved - h;
    c.p->value[c.i] = hi;
    const double up = insloc_step_loss(pair, in, queues, 0.2, {false, false}).loss;
    c.p->value[c.i] = lo;
    const double down = insloc_step_loss(pair, in, queues, 0.2, {false, false}).loss;
    c.p->value[c.i] = saved;
    numeric.push_back((up - down) / (double(hi) - double(lo)));
  }
  EXPECT_LT(oracle::relative_error(analytic, numeric), 1e-3);
}

}  // namespace
}  // namespace insloc
