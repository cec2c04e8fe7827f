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

#include "insloc/roi_align.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace insloc {
namespace {

std::atomic<double> g_backward_weight_scale{1.0};

// Up to four (flat offset, weight) taps for one bilinear sample.
struct Taps {
  std::size_t offset[4];
  double weight[4];
  int count = 0;
};

Taps bilinear_taps(double y, double x, std::size_t H, std::size_t W) {
  Taps t;
  const double fy = std::floor(y), fx = std::floor(x);
  const long y0 = static_cast<long>(fy), x0 = static_cast<long>(fx);
  const double ly = y - fy, lx = x - fx;
  const long ys[2] = {y0, y0 + 1};
  const long xs[2] = {x0, x0 + 1};
  const double wy[2] = {1.0 - ly, ly};
  const double wx[2] = {1.0 - lx, lx};
  for (int a = 0; a < 2; ++a) {
    if (ys[a] < 0 || ys[a] >= static_cast<long>(H)) continue;
    for (int b = 0; b < 2; ++b) {
      if (xs[b] < 0 || xs[b] >= static_cast<long>(W)) continue;
      const double w = wy[a] * wx[b];
      if (w == 0.0) continue;
      t.offset[t.count] = static_cast<std::size_t>(ys[a]) * W +
                          static_cast<std::size_t>(xs[b]);
      t.weight[t.count] = w;
      ++t.count;
    }
  }
  return t;
}

struct RoiGeometry {
  double start_x, start_y, bin_w, bin_h;
};

RoiGeometry roi_geometry(const BBox& box, const RoiSpec& spec) {
  require_valid(box, "roi_align");
  const double offset = spec.aligned ? 0.5 : 0.0;
  const double x1 = box.x1 * spec.spatial_scale - offset;
  const double y1 = box.y1 * spec.spatial_scale - offset;
  const double w = (box.x2 - box.x1) * spec.spatial_scale;
  const double h = (box.y2 - box.y1) * spec.spatial_scale;
  if (!(w > 0.0) || !(h > 0.0)) {
    throw DegenerateError("roi_align: box " + to_string(box) +
                          " is degenerate at spatial scale " +
                          std::to_string(spec.spatial_scale));
  }
  const double P = static_cast<double>(spec.output_size);
  return {x1, y1, w / P, h / P};
}

// Visits every sample of every bin: fn(bin_index, y, x).
template <typename Fn>
void for_each_sample(const RoiGeometry& g, const RoiSpec& spec, Fn&& fn) {
  const std::size_t P = spec.output_size, s = spec.sampling;
  for (std::size_t py = 0; py < P; ++py) {
    for (std::size_t px = 0; px < P; ++px) {
      for (std::size_t iy = 0; iy < s; ++iy) {
        const double y = g.start_y + py * g.bin_h +
                         (iy + 0.5) * g.bin_h / static_cast<double>(s);
        for (std::size_t ix = 0; ix < s; ++ix) {
          const double x = g.start_x + px * g.bin_w +
                           (ix + 0.5) * g.bin_w / static_cast<double>(s);
          fn(py * P + px, y, x);
        }
      }
    }
  }
}

template <typename T>
void check_fmap(const Shape& shape, std::size_t batch_index) {
  if (shape.size() != 4) {
    throw ShapeError("roi_align: feature map must be [B,C,H,W], got " +
                     shape_string(shape));
  }
  if (batch_index >= shape[0]) {
    throw InvalidArgument("roi_align: batch index " +
                          std::to_string(batch_index) + " out of range for " +
                          shape_string(shape));
  }
}

}  // namespace

void RoiSpec::validate() const {
  if (output_size < 1 || sampling < 1 || !(spatial_scale > 0.0)) {
    throw InvalidArgument("roi spec requires P >= 1, s >= 1, scale > 0");
  }
}

template <typename T>
Tensor<T> roi_align_forward(const Tensor<T>& fmap, const BBox& box,
                            std::size_t batch_index, const RoiSpec& spec) {
  spec.validate();
  check_fmap<T>(fmap.shape(), batch_index);
  const RoiGeometry g = roi_geometry(box, spec);
  const std::size_t C = fmap.dim(1), H = fmap.dim(2), W = fmap.dim(3);
  const std::size_t P = spec.output_size;
  const double norm = 1.0 / static_cast<double>(spec.sampling * spec.sampling);
  std::vector<double> acc(C * P * P, 0.0);
  const T* base = fmap.data() + batch_index * C * H * W;
  for_each_sample(g, spec, [&](std::size_t bin, double y, double x) {
    const Taps t = bilinear_taps(y, x, H, W);
    for (std::size_t c = 0; c < C; ++c) {
      const T* plane = base + c * H * W;
      double v = 0.0;
      for (int k = 0; k < t.count; ++k) v += t.weight[k] * plane[t.offset[k]];
      acc[c * P * P + bin] += v;
    }
  });
  Tensor<T> out({C, P, P});
  for (std::size_t i = 0; i < acc.size(); ++i) {
    out[i] = static_cast<T>(acc[i] * norm);
  }
  return out;
}

template <typename T>
void roi_align_backward_accumulate(const Tensor<T>& grad_out, const BBox& box,
                                   std::size_t batch_index,
                                   const RoiSpec& spec, Tensor<T>& grad_fmap) {
  spec.validate();
  check_fmap<T>(grad_fmap.shape(), batch_index);
  const std::size_t C = grad_fmap.dim(1), H = grad_fmap.dim(2),
                    W = grad_fmap.dim(3), P = spec.output_size;
  if (grad_out.shape() != Shape{C, P, P}) {
    throw ShapeError("roi_align backward: grad_out " +
                     shape_string(grad_out.shape()) + " expected " +
                     shape_string({C, P, P}));
  }
  const RoiGeometry g = roi_geometry(box, spec);
  const double norm = g_backward_weight_scale.load(std::memory_order_relaxed) /
                      static_cast<double>(spec.sampling * spec.sampling);
  T* base = grad_fmap.data() + batch_index * C * H * W;
  for_each_sample(g, spec, [&](std::size_t bin, double y, double x) {
    const Taps t = bilinear_taps(y, x, H, W);
    for (std::size_t c = 0; c < C; ++c) {
      const double go = static_cast<double>(grad_out[c * P * P + bin]) * norm;
      T* plane = base + c * H * W;
      for (int k = 0; k < t.count; ++k) {
        plane[t.offset[k]] += static_cast<T>(go * t.weight[k]);
      }
    }
  });
}

template <typename T>
Tensor<T> roi_align_backward(const Tensor<T>& grad_out, const BBox& box,
                             std::size_t batch_index, const RoiSpec& spec,
                             const Shape& fmap_shape) {
  Tensor<T> grad(fmap_shape);
  roi_align_backward_accumulate(grad_out, box, batch_index, spec, grad);
  return grad;
}

template <typename T>
Tensor<T> roi_align_batch(const Tensor<T>& fmap, const std::vector<BBox>& boxes,
                          const RoiSpec& spec) {
  require_rank(fmap, 4, "roi_align_batch");
  if (boxes.size() != fmap.dim(0)) {
    throw ShapeError("roi_align_batch: " + std::to_string(boxes.size()) +
                     " boxes for feature map " + shape_string(fmap.shape()));
  }
  const std::size_t C = fmap.dim(1), P = spec.output_size;
  Tensor<T> out({boxes.size(), C, P, P});
  for (std::size_t n = 0; n < boxes.size(); ++n) {
    const Tensor<T> pooled = roi_align_forward(fmap, boxes[n], n, spec);
    std::copy(pooled.data(), pooled.data() + pooled.size(),
              out.data() + n * pooled.size());
  }
  return out;
}

template <typename T>
Tensor<T> roi_align_batch_backward(const Tensor<T>& grad_out,
                                   const std::vector<BBox>& boxes,
                                   const RoiSpec& spec,
                                   const Shape& fmap_shape) {
  const std::size_t C = fmap_shape.at(1), P = spec.output_size;
  if (grad_out.shape() != Shape{boxes.size(), C, P, P}) {
    throw ShapeError("roi_align_batch backward: grad_out " +
                     shape_string(grad_out.shape()));
  }
  Tensor<T> grad(fmap_shape);
  const std::size_t per = C * P * P;
  for (std::size_t n = 0; n < boxes.size(); ++n) {
    Tensor<T> g({C, P, P}, std::vector<T>(grad_out.data() + n * per,
                                          grad_out.data() + (n + 1) * per));
    roi_align_backward_accumulate(g, boxes[n], n, spec, grad);
  }
  return grad;
}

int assign_fpn_level(const BBox& box, int num_levels, int base_level,
                     double canonical_size) {
  require_valid(box, "assign_fpn_level");
  const double level =
      std::floor(base_level + std::log2(std::sqrt(box.area()) / canonical_size));
  return static_cast<int>(std::clamp(level, 0.0, double(num_levels - 1)));
}

namespace testing {
void set_roi_backward_weight_scale(double scale) {
  g_backward_weight_scale.store(scale, std::memory_order_relaxed);
}
double roi_backward_weight_scale() {
  return g_backward_weight_scale.load(std::memory_order_relaxed);
}
}  // namespace testing

#define INSLOC_INSTANTIATE_ROI(T)                                            \
  template Tensor<T> roi_align_forward<T>(const Tensor<T>&, const BBox&,     \
                                          std::size_t, const RoiSpec&);      \
  template Tensor<T> roi_align_backward<T>(const Tensor<T>&, const BBox&,    \
                                           std::size_t, const RoiSpec&,      \
                                           const Shape&);                    \
  template void roi_align_backward_accumulate<T>(                            \
      const Tensor<T>&, const BBox&, std::size_t, const RoiSpec&,            \
      Tensor<T>&);                                                           \
  template Tensor<T> roi_align_batch<T>(const Tensor<T>&,                    \
                                        const std::vector<BBox>&,            \
                                        const RoiSpec&);                     \
  template Tensor<T> roi_align_batch_backward<T>(                            \
      const Tensor<T>&, const std::vector<BBox>&, const RoiSpec&,            \
      const Shape&);

INSLOC_INSTANTIATE_ROI(float)
INSLOC_INSTANTIATE_ROI(double)

#undef INSLOC_INSTANTIATE_ROI

}  // namespace insloc
