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

#include <boost/math/distributions/chi_squared.hpp>
#include <algorithm>
#include <cmath>

#include "insloc/boxes.hpp"
#include "insloc/oracles.hpp"

namespace insloc {
namespace {

BBox random_box(Rng& rng) {
  const double x1 = uniform(rng, 0, 60), y1 = uniform(rng, 0, 60);
  return {x1, y1, x1 + uniform(rng, 0.5, 40), y1 + uniform(rng, 0.5, 40)};
}

TEST(Iou, HandValues) {
  const BBox a{0, 0, 2, 2};
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou(a, {5, 5, 6, 6}), 0.0);
  EXPECT_NEAR(iou(a, {1, 1, 3, 3}), 1.0 / 7.0, 1e-15);
}

TEST(Iou, SymmetryBoundsIdentityOverRandomPairs) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const BBox a = random_box(rng), b = random_box(rng);
    const double ab = iou(a, b);
    ASSERT_EQ(ab, iou(b, a));
    ASSERT_GE(ab, 0.0);
    ASSERT_LE(ab, 1.0);
    ASSERT_NEAR(ab, oracle::box_iou(a, b), 1e-12);
    ASSERT_DOUBLE_EQ(iou(a, a), 1.0);
  }
}

TEST(Anchors, SingleCellSquare) {
  AnchorConfig cfg{{16}, {10}, {1.0}};
  const auto a = generate_anchors(cfg, 16, 16);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0], (BBox{3, 3, 13, 13}));
}

TEST(Anchors, RatioAndAreaIdentities) {
  AnchorConfig cfg{{16}, {12, 20, 28}, {0.5, 1.0, 2.0}};
  const auto anchors = generate_anchors(cfg, 64, 64);
  EXPECT_EQ(anchors.size(), 144u);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const double r = cfg.aspect_ratios[i % 3];
    const double s = cfg.scales[(i / 3) % 3];
    EXPECT_NEAR(anchors[i].width() / anchors[i].height(), r, 1e-12);
    EXPECT_NEAR(anchors[i].area(), s * s, 1e-9);
  }
}

TEST(Anchors, ClipArithmetic) {
  EXPECT_EQ(clip_bbox({10, 10, 20, 20}, 64, 64), (BBox{10, 10, 20, 20}));
  EXPECT_EQ(clip_bbox({-5, -5, 10, 10}, 64, 64), (BBox{0, 0, 10, 10}));
  EXPECT_THROW(clip_bbox({70, 70, 80, 80}, 64, 64), DegenerateError);
}

TEST(AugmentBbox, OnlyGtAnchorReturnsGt) {
  Rng rng(2);
  const BBox gt{5, 6, 30, 40};
  EXPECT_EQ(augment_bbox(gt, {gt}, 0.5, rng), gt);
  EXPECT_EQ(augment_bbox(gt, {{50, 50, 60, 60}}, 0.5, rng), gt);
}

TEST(AugmentBbox, CandidateCountMatchesBruteForce) {
  const auto anchors = clipped_anchors(AnchorConfig{}, 64, 64);
  const BBox gt{16, 16, 48, 48};
  std::size_t brute = 0;
  for (const auto& a : anchors) brute += oracle::box_iou(a, gt) > 0.5;
  EXPECT_GT(brute, 0u);
  EXPECT_EQ(anchor_candidates(gt, anchors, 0.5).size(), brute);
}

TEST(AugmentBbox, OutputsOverlapGroundTruth) {
  Rng rng(3);
  const auto anchors = clipped_anchors(AnchorConfig{}, 64, 64);
  for (int i = 0; i < 10000; ++i) {
    const double w = uniform(rng, 8, 60), h = uniform(rng, 8, 60);
    const double x = uniform(rng, 0, 64 - w), y = uniform(rng, 0, 64 - h);
    const BBox gt{x, y, x + w, y + h};
    const BBox out = augment_bbox(gt, anchors, 0.5, rng);
    ASSERT_TRUE(out == gt || iou(out, gt) > 0.5) << to_string(gt);
  }
}

// Pearson chi-squared test that augment_bbox picks candidates uniformly.
TEST(AugmentBbox, CandidatesDrawnUniformly) {
  const auto anchors = clipped_anchors(AnchorConfig{}, 64, 64);
  const BBox gt{16, 16, 48, 48};
  const auto cand = anchor_candidates(gt, anchors, 0.5);
  ASSERT_GE(cand.size(), 2u);
  // Clipping can make distinct anchors coincide; such boxes share a bin with
  // proportionally larger expectation.
  std::vector<BBox> bins;
  std::vector<double> weight;
  for (std::size_t c : cand) {
    auto it = std::find(bins.begin(), bins.end(), anchors[c]);
    if (it == bins.end()) {
      bins.push_back(anchors[c]);
      weight.push_back(1.0);
    } else {
      weight[it - bins.begin()] += 1.0;
    }
  }
  ASSERT_GE(bins.size(), 2u);
  std::vector<double> counts(bins.size(), 0.0);
  Rng rng(4);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const BBox out = augment_bbox(gt, anchors, 0.5, rng);
    auto it = std::find(bins.begin(), bins.end(), out);
    ASSERT_NE(it, bins.end());
    counts[it - bins.begin()] += 1.0;
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const double expected = draws * weight[i] / double(cand.size());
    stat += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  const boost::math::chi_squared dist(double(bins.size() - 1));
  const double p = boost::math::cdf(boost::math::complement(dist, stat));
  EXPECT_GT(p, 0.01) << "chi2 " << stat << " over " << bins.size() << " bins";
}
TEST(AnchorConfig, RejectsNonPositive) {
  EXPECT_THROW((AnchorConfig{{0}, {16}, {1.0}}).validate(), InvalidArgument);
  EXPECT_THROW((AnchorConfig{{8}, {}, {1.0}}).validate(), InvalidArgument);
  EXPECT_THROW((AnchorConfig{{8}, {16}, {-1.0}}).validate(), InvalidArgument);
}

}  // namespace
}  // namespace insloc
