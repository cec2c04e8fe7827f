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

#include "insloc/boxes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "insloc/errors.hpp"

namespace insloc {

bool BBox::valid() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
         std::isfinite(y2) && x1 < x2 && y1 < y2;
}

std::string to_string(const BBox& b) {
  std::ostringstream os;
  os << "(" << b.x1 << "," << b.y1 << "," << b.x2 << "," << b.y2 << ")";
  return os.str();
}

void require_valid(const BBox& b, const char* what) {
  if (!b.valid()) {
    throw DegenerateError(std::string(what) + ": invalid box " + to_string(b));
  }
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

void AnchorConfig::validate() const {
  if (strides.empty() || scales.empty() || aspect_ratios.empty()) {
    throw InvalidArgument("anchor config lists must be non-empty");
  }
  for (int s : strides) {
    if (s <= 0) throw InvalidArgument("anchor strides must be positive");
  }
  for (double s : scales) {
    if (!(s > 0.0)) throw InvalidArgument("anchor scales must be positive");
  }
  for (double r : aspect_ratios) {
    if (!(r > 0.0)) throw InvalidArgument("anchor ratios must be positive");
  }
}

std::vector<BBox> generate_anchors(const AnchorConfig& cfg, int image_h,
                                   int image_w) {
  cfg.validate();
  if (image_h <= 0 || image_w <= 0) {
    throw InvalidArgument("generate_anchors: image dims must be positive");
  }
  std::vector<BBox> out;
  for (int stride : cfg.strides) {
    const int rows = (image_h + stride - 1) / stride;
    const int cols = (image_w + stride - 1) / stride;
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        const double cy = stride * (i + 0.5);
        const double cx = stride * (j + 0.5);
        for (double scale : cfg.scales) {
          for (double ratio : cfg.aspect_ratios) {
            const double root = std::sqrt(ratio);
            const double w = scale * root, h = scale / root;
            out.push_back({cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2});
          }
        }
      }
    }
  }
  return out;
}

BBox clip_bbox(const BBox& b, int image_h, int image_w) {
  require_valid(b, "clip_bbox");
  BBox c{std::clamp(b.x1, 0.0, double(image_w)),
         std::clamp(b.y1, 0.0, double(image_h)),
         std::clamp(b.x2, 0.0, double(image_w)),
         std::clamp(b.y2, 0.0, double(image_h))};
  if (!c.valid()) {
    throw DegenerateError("clip_bbox: box " + to_string(b) +
                          " has no area inside " + std::to_string(image_w) +
                          "x" + std::to_string(image_h));
  }
  return c;
}

std::vector<BBox> clipped_anchors(const AnchorConfig& cfg, int image_h,
                                  int image_w) {
  std::vector<BBox> anchors = generate_anchors(cfg, image_h, image_w);
  std::vector<BBox> out;
  out.reserve(anchors.size());
  for (const auto& a : anchors) {
    // Partial edge cells can place an anchor wholly outside; those are dropped.
    if (a.x1 >= image_w || a.y1 >= image_h || a.x2 <= 0 || a.y2 <= 0) continue;
    out.push_back(clip_bbox(a, image_h, image_w));
  }
  return out;
}

std::vector<std::size_t> anchor_candidates(const BBox& gt,
                                           const std::vector<BBox>& anchors,
                                           double iou_threshold) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (iou(anchors[i], gt) > iou_threshold) idx.push_back(i);
  }
  return idx;
}

BBox augment_bbox(const BBox& gt, const std::vector<BBox>& anchors,
                  double iou_threshold, Rng& rng) {
  if (anchors.empty()) throw InvalidArgument("augment_bbox: no anchors");
  const auto idx = anchor_candidates(gt, anchors, iou_threshold);
  if (idx.empty()) return gt;
  const auto pick = uniform_int(rng, 0, static_cast<std::int64_t>(idx.size()) - 1);
  return anchors[idx[static_cast<std::size_t>(pick)]];
}

}  // namespace insloc
