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

#include "insloc/oracles.hpp"
#include "insloc/roi_align.hpp"
#include "test_util.hpp"

namespace insloc {
namespace {

using test::random_tensor;
using TensorD = Tensor<double>;

BBox random_box(Rng& rng, double extent) {
  const double x1 = uniform(rng, -0.2 * extent, 0.8 * extent);
  const double y1 = uniform(rng, -0.2 * extent, 0.8 * extent);
  return {x1, y1, x1 + uniform(rng, 0.5, 0.6 * extent),
          y1 + uniform(rng, 0.5, 0.6 * extent)};
}

TEST(RoiAlign, ConstantMapPoolsConstant) {
  const TensorD fmap({1, 2, 6, 6}, 0.75);
  RoiSpec spec{3, 2, 1.0, true};
  const auto out = roi_align_forward(fmap, {1.2, 0.9, 4.7, 5.1}, 0, spec);
  for (double v : out.values()) EXPECT_DOUBLE_EQ(v, 0.75);
}

TEST(RoiAlign, SingleCellBox) {
  Rng rng(1);
  const auto fmap = random_tensor({1, 1, 5, 5}, rng);
  RoiSpec spec{1, 1, 1.0, true};
  // With the half-pixel shift, [2,3]x[1,2] samples exactly at cell (1,2).
  const auto out = roi_align_forward(fmap, {2, 1, 3, 2}, 0, spec);
  EXPECT_DOUBLE_EQ(out[0], fmap.at(0, 0, 1, 2));
}

TEST(RoiAlign, MatchesDenseOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto fmap = random_tensor({2, 2, 8, 8}, rng);
    RoiSpec spec{std::size_t(uniform_int(rng, 1, 4)), std::size_t(uniform_int(rng, 1, 3)),
                 uniform(rng, 0.25, 1.0), bernoulli(rng, 0.5)};
    const BBox box = random_box(rng, 8.0 / spec.spatial_scale);
    const std::size_t n = std::size_t(uniform_int(rng, 0, 1));
    const auto fast = roi_align_forward(fmap, box, n, spec);
    const auto slow = oracle::dense_roi_align(fmap, box, n, spec);
    ASSERT_LT(max_abs_diff(fast, slow), 1e-6) << "trial " << trial;
  }
}

TEST(RoiAlign, BackwardIsAdjoint) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto fmap = random_tensor({1, 3, 7, 7}, rng);
    RoiSpec spec{3, 2, 0.5, true};
    const BBox box = random_box(rng, 14.0);
    const auto g = random_tensor({3, 3, 3}, rng);
    const double lhs = dot(roi_align_forward(fmap, box, 0, spec), g);
    const double rhs = dot(fmap, roi_align_backward(g, box, 0, spec, fmap.shape()));
    ASSERT_NEAR(lhs, rhs, 1e-6 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(RoiAlign, InteriorBinWeightsPartitionUnity) {
  RoiSpec spec{3, 2, 1.0, true};
  const auto g = roi_align_backward(TensorD({1, 3, 3}, 1.0), {2, 2, 8, 8}, 0,
                                    spec, {1, 1, 10, 10});
  double sum = 0.0;
  for (double v : g.values()) sum += v;
  EXPECT_NEAR(sum, 9.0, 1e-12);
}

TEST(RoiAlign, ZeroGradOut) {
  const auto g = roi_align_backward(TensorD({2, 3, 3}), {1, 1, 5, 5}, 0,
                                    RoiSpec{3, 2, 1.0, true}, {1, 2, 8, 8});
  EXPECT_EQ(g, TensorD({1, 2, 8, 8}));
}

TEST(RoiAlign, FiniteDifference) {
  Rng rng(4);
  auto fmap = random_tensor({1, 2, 6, 6}, rng);
  const RoiSpec spec{3, 2, 1.0, true};
  const BBox box{0.7, 1.1, 4.9, 5.3};
  const auto g = random_tensor({2, 3, 3}, rng);
  const auto gx = roi_align_backward(g, box, 0, spec, fmap.shape());
  EXPECT_LT(test::fd_error({&fmap}, {&gx}, [&] {
              return dot(roi_align_forward(fmap, box, 0, spec), g);
            }),
            1e-6);
}

TEST(RoiAlign, RejectsDegenerateInputs) {
  const TensorD fmap({1, 1, 4, 4});
  EXPECT_THROW(roi_align_forward(fmap, {2, 2, 2, 3}, 0, RoiSpec{}), DegenerateError);
  EXPECT_THROW(roi_align_forward(fmap, {0, 0, 2, 2}, 1, RoiSpec{}), Error);
  RoiSpec bad;
  bad.output_size = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(FpnLevel, CanonicalQuadrupledAndTiny) {
  EXPECT_EQ(assign_fpn_level({0, 0, 16, 16}), 1);
  EXPECT_EQ(assign_fpn_level({0, 0, 32, 32}), 2);
  EXPECT_EQ(assign_fpn_level({0, 0, 2, 2}), 0);
  EXPECT_EQ(assign_fpn_level({0, 0, 1000, 1000}), 3);
}

}  // namespace
}  // namespace insloc
