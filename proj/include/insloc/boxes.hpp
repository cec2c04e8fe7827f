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

#ifndef INSLOC_BOXES_HPP_
#define INSLOC_BOXES_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "insloc/rng.hpp"

namespace insloc {

// Axis-aligned box in continuous pixel coordinates, x1 < x2 and y1 < y2.
struct BBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const;

  bool operator==(const BBox&) const = default;
};

std::string to_string(const BBox& b);

// Throws DegenerateError unless b.valid().
void require_valid(const BBox& b, const char* what);

double iou(const BBox& a, const BBox& b);

struct AnchorConfig {
  std::vector<int> strides{8, 16};
  std::vector<double> scales{16, 24, 32, 48};
  std::vector<double> aspect_ratios{0.5, 1.0, 2.0};  // width / height

  void validate() const;
};

// One anchor per (stride, cell, scale, ratio), centered at
// (stride*(j+0.5), stride*(i+0.5)) with width = scale*sqrt(ratio) and
// height = scale/sqrt(ratio). Unclipped; may extend past the image.
std::vector<BBox> generate_anchors(const AnchorConfig& cfg, int image_h,
                                   int image_w);

// Clamps to [0,W]x[0,H]. Throws DegenerateError if nothing is left.
BBox clip_bbox(const BBox& b, int image_h, int image_w);

// generate_anchors followed by clip_bbox on every anchor.
std::vector<BBox> clipped_anchors(const AnchorConfig& cfg, int image_h,
                                  int image_w);

// Indices of anchors whose IoU with gt is strictly above the threshold.
std::vector<std::size_t> anchor_candidates(const BBox& gt,
                                           const std::vector<BBox>& anchors,
                                           double iou_threshold);

// Uniformly random anchor among the candidates, or gt itself when there are
// none.
BBox augment_bbox(const BBox& gt, const std::vector<BBox>& anchors,
                  double iou_threshold, Rng& rng);

}  // namespace insloc

#endif  // INSLOC_BOXES_HPP_
