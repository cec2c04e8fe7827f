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

#include "insloc/composition.hpp"

namespace insloc {
namespace {

Image random_image(int h, int w, Rng& rng) {
  Image img(h, w);
  for (auto& v : img.pixels()) v = static_cast<float>(uniform(rng, 0, 1));
  return img;
}

TEST(Compose, PixelsOutsideBoxAreBackground) {
  Rng rng(1);
  const Image bg = random_image(64, 64, rng);
  const Image fg = random_image(64, 64, rng);
  for (int i = 0; i < 10000; ++i) {
    const Composite c = compose(fg, bg, CompositionParams{}, rng);
    const BBox& b = c.bbox;
    ASSERT_TRUE(b.x1 >= 0 && b.y1 >= 0 && b.x2 <= 64 && b.y2 <= 64 && b.valid());
    double outside = 0.0;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        if (x >= b.x1 && x < b.x2 && y >= b.y1 && y < b.y2) continue;
        for (int ch = 0; ch < 3; ++ch) outside += std::abs(c.image.at(y, x, ch) - bg.at(y, x, ch));
      }
    ASSERT_EQ(outside, 0.0) << to_string(b);
  }
}

TEST(Compose, FullCoverEqualsResizedForeground) {
  Rng rng(2);
  const Image bg = random_image(32, 32, rng), fg = random_image(20, 20, rng);
  CompositionParams p;
  p.composite_size = 32;
  p.scale = {32, 32};
  p.aspect = {1.0, 1.0};
  const Composite c = compose(fg, bg, p, rng);
  EXPECT_EQ(c.bbox, (BBox{0, 0, 32, 32}));
  EXPECT_EQ(c.image, resize_bilinear(fg, 32, 32));
}

TEST(Compose, Deterministic) {
  Rng src(3);
  const Image bg = random_image(64, 64, src), fg = random_image(64, 64, src);
  Rng a(9), b(9);
  const Composite x = compose(fg, bg, CompositionParams{}, a);
  const Composite y = compose(fg, bg, CompositionParams{}, b);
  EXPECT_EQ(x.image, y.image);
  EXPECT_EQ(x.bbox, y.bbox);
}

TEST(Compose, ModeAspectDefaults) {
  const auto c4 = CompositionParams::defaults_for(BackboneVariant::kC4);
  const auto fpn = CompositionParams::defaults_for(BackboneVariant::kFpn);
  EXPECT_DOUBLE_EQ(c4.aspect.first, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(c4.aspect.second, 3.0);
  EXPECT_DOUBLE_EQ(fpn.aspect.first, 0.5);
  EXPECT_DOUBLE_EQ(fpn.aspect.second, 2.0);
}

TEST(MakePair, IdsAndBackgroundFrequencies) {
  const std::size_t K = 8;
  const Gallery g = generate_gallery(K, 32, 4);
  AugmentParams aug;
  aug.view_size = 32;
  CompositionParams cp;
  cp.composite_size = 32;
  cp.scale = {8, 24};
  Rng rng(5);
  const std::size_t instance = 3;
  const int draws = 10000;
  std::vector<int> freq(K, 0);
  for (int i = 0; i < draws; ++i) {
    const ViewPair p = make_pair(g, instance, aug, cp, rng);
    ASSERT_EQ(p.query.instance_id, instance);
    ASSERT_EQ(p.key.instance_id, instance);
    ASSERT_NE(p.query.background_id, instance);
    ASSERT_NE(p.key.background_id, instance);
    ASSERT_NE(p.query.background_id, p.key.background_id);
    ++freq[p.query.background_id];
  }
  // Binomial(n, 1/(K-1)) per background id, 3 sigma band.
  const double pr = 1.0 / double(K - 1);
  const double mean = draws * pr, sigma = std::sqrt(draws * pr * (1 - pr));
  for (std::size_t id = 0; id < K; ++id) {
    if (id == instance) {
      EXPECT_EQ(freq[id], 0);
    } else {
      EXPECT_NEAR(freq[id], mean, 3 * sigma) << "background " << id;
    }
  }
}

TEST(MakePair, RejectsTinyGallery) {
  const Gallery g = generate_gallery(2, 16, 0);
  Rng rng(6);
  CompositionParams cp;
  cp.composite_size = 16;
  cp.scale = {4, 8};
  EXPECT_THROW(make_pair(g, 0, AugmentParams{}, cp, rng), InvalidArgument);
}

}  // namespace
}  // namespace insloc
