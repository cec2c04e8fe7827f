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

#include <cmath>

#include "insloc/probes.hpp"
#include "test_util.hpp"

namespace insloc {
namespace {

using TensorD = Tensor<double>;

BackboneConfig small_backbone() {
  BackboneConfig cfg;
  cfg.widths = {4, 6, 8, 8};
  cfg.head_hidden = 16;
  cfg.head_dim = 16;
  return cfg;
}

TEST(PatchGrid, NineTilesOn60) {
  const auto cells = patch_grid(60, 60, 9);
  ASSERT_EQ(cells.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) {
    const double x = 20.0 * double(i % 3), y = 20.0 * double(i / 3);
    EXPECT_EQ(cells[i], (BBox{x, y, x + 20, y + 20}));
  }
  EXPECT_EQ(patch_grid(37, 51, 1)[0], (BBox{0, 0, 51, 37}));
  EXPECT_THROW(patch_grid(64, 64, 8), InvalidArgument);
}

TEST(PatchGrid, TilesExactlyOverRandomSizes) {
  Rng rng(1);
  for (int trial = 0; trial < 10000; ++trial) {
    const int h = int(uniform_int(rng, 4, 80)), w = int(uniform_int(rng, 4, 80));
    const std::size_t g = std::size_t(uniform_int(rng, 1, 4));
    const auto cells = patch_grid(h, w, g * g);
    double area = 0.0;
    for (const auto& c : cells) area += c.area();
    ASSERT_NEAR(area, double(h) * double(w), 1e-9);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      // Neighbours share edges exactly; no gaps or overlaps.
      if (i % g + 1 < g) {
        ASSERT_EQ(cells[i].x2, cells[i + 1].x1);
      }
      if (i + g < cells.size()) {
        ASSERT_EQ(cells[i].y2, cells[i + g].y1);
      }
    }
    ASSERT_EQ(cells.front().x1, 0.0);
    ASSERT_EQ(cells.back().x2, double(w));
    ASSERT_EQ(cells.back().y2, double(h));
  }
}

TEST(ProbeLoss, ZeroClassifierGivesLogL) {
  Rng rng(2);
  const auto x = test::random_tensor({10, 4}, rng);
  std::vector<std::size_t> y(10);
  for (std::size_t i = 0; i < 10; ++i) y[i] = i % 5;
  const auto r = probe_loss(x, y, TensorD({4, 5}), TensorD({5}));
  EXPECT_NEAR(r.loss, std::log(5.0), 1e-15);
}

TEST(ProbeLoss, FiniteDifference) {
  Rng rng(3);
  const auto x = test::random_tensor({12, 4}, rng);
  std::vector<std::size_t> y(12);
  for (std::size_t i = 0; i < 12; ++i) y[i] = i % 3;
  auto w = test::random_tensor({4, 3}, rng);
  auto b = test::random_tensor({3}, rng);
  const auto r = probe_loss(x, y, w, b);
  EXPECT_LT(test::fd_error({&w, &b}, {&r.grad_weight, &r.grad_bias},
                           [&] { return probe_loss(x, y, w, b).loss; }),
            1e-6);
}

TEST(LinearProbe, SeparableToySetFitsExactly) {
  Rng rng(4);
  TensorD x({40, 3});
  std::vector<std::size_t> y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    y[i] = i % 2;
    x.at(i, 0) = (y[i] ? 1.0 : -1.0) * uniform(rng, 0.2, 1.0);
    x.at(i, 1) = uniform(rng, -1, 1);
    x.at(i, 2) = uniform(rng, -1, 1);
  }
  const auto clf = train_linear_probe(x, y, 2, ProbeConfig{});
  EXPECT_DOUBLE_EQ(accuracy(clf, x, y), 1.0);
}

TEST(LinearProbe, RejectsDegenerateProblems) {
  const TensorD x({4, 2}, 1.0);
  EXPECT_THROW(train_linear_probe(x, {0, 0, 0, 0}, 2, ProbeConfig{}), InvalidArgument);
  EXPECT_THROW(train_linear_probe(x, {0, 0, 0, 0}, 1, ProbeConfig{}), InvalidArgument);
  EXPECT_THROW(train_linear_probe(x, {0, 1, 2, 3}, 5, ProbeConfig{}), InvalidArgument);
  EXPECT_THROW(train_linear_probe(x, {0, 1, 0, 7}, 2, ProbeConfig{}), Error);
}

TEST(PatchEmbedding, DeterministicAndFrozen) {
  Encoder<float> enc(small_backbone());
  Rng rng(5);
  enc.init(rng);
  const Gallery g = generate_gallery(3, 64, 1);
  const auto before = parameter_fingerprint(enc);
  const auto a = extract_patch_embedding(enc, g.images[0], 4, 9);
  const auto b = extract_patch_embedding(enc, g.images[0], 4, 9);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.shape(), (Shape{16}));
  const auto iso = extract_patch_embedding(enc, g.images[0], 4, 9, true);
  EXPECT_EQ(iso.shape(), (Shape{16}));
  EXPECT_EQ(parameter_fingerprint(enc), before);
}

TEST(PatchEmbedding, MatchesBatchedRegions) {
  Encoder<float> enc(small_backbone());
  Rng rng(6);
  enc.init(rng);
  const Gallery g = generate_gallery(3, 64, 2);
  const auto cells = patch_grid(64, 64, 9);
  std::vector<Region> regions;
  for (std::size_t i = 0; i < 3; ++i) regions.push_back({&g.images[i], cells[i * 3]});
  const auto batch = embed_regions(enc, regions, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto single = extract_patch_embedding(enc, g.images[i], i * 3, 9);
    for (std::size_t d = 0; d < 16; ++d) EXPECT_NEAR(batch.at(i, d), single[d], 1e-5);
  }
}

TEST(LocalizationProbe, SingleCellIsTrivial) {
  Encoder<float> enc(small_backbone());
  Rng rng(7);
  enc.init(rng);
  ProbeConfig cfg;
  cfg.M = 1;
  const auto r = localization_probe_accuracy(enc, generate_gallery(4, 64, 0), cfg);
  EXPECT_EQ(r.accuracy, 1.0);
}

TEST(Probes, RandomEncoderSanityAndFrozenWeights) {
  Encoder<float> enc(small_backbone());
  Rng rng(8);
  enc.init(rng);
  const Gallery g = generate_gallery(100, 64, 3);
  ProbeConfig cfg;
  cfg.steps = 200;
  cfg.cls_train_views = 4;
  cfg.cls_eval_views = 2;
  const auto before = parameter_fingerprint(enc);
  const auto loc = localization_probe_accuracy(enc, g, cfg);
  EXPECT_EQ(loc.eval_count, 20u * 9u);
  EXPECT_DOUBLE_EQ(loc.chance, 1.0 / 9.0);
  EXPECT_GT(loc.accuracy, 0.0);
  EXPECT_GE(loc.accuracy, 1.0 / 9.0 - 0.02);
  const auto again = localization_probe_accuracy(enc, g, cfg);
  EXPECT_EQ(loc.accuracy, again.accuracy);

  const auto cls = classification_probe_accuracy(enc, g, cfg);
  EXPECT_DOUBLE_EQ(cls.chance, 0.01);
  EXPECT_EQ(cls.eval_count, 200u);
  // Overfit sanity: 16 dims, 400 points, 100 classes.
  EXPECT_GT(cls.train_accuracy, cls.accuracy);
  EXPECT_EQ(parameter_fingerprint(enc), before);
}

TEST(Probes, TsvRow) {
  EXPECT_EQ(probe_tsv_row("insloc-c4", 9, 0.5, 0.25, 3), "insloc-c4\t9\t0.5000\t0.2500\t3");
}

TEST(Probes, FpnLevelFollowsBoxScale) {
  BackboneConfig cfg;
  EXPECT_EQ(probe_level(cfg, {0, 0, 21, 21}), 0u);
  cfg.variant = BackboneVariant::kFpn;
  EXPECT_EQ(probe_level(cfg, {0, 0, 21, 21}),
            std::size_t(assign_fpn_level({0, 0, 21, 21})));
}

}  // namespace
}  // namespace insloc
