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

#include "insloc/oracles.hpp"

#include <algorithm>
#include <cmath>

namespace insloc::oracle {

double bilinear_field(const double* channel, std::size_t H, std::size_t W,
                      double y, double x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < H; ++i) {
    const double ty = std::max(0.0, 1.0 - std::abs(y - double(i)));
    if (ty == 0.0) continue;
    for (std::size_t j = 0; j < W; ++j) {
      const double tx = std::max(0.0, 1.0 - std::abs(x - double(j)));
      acc += channel[i * W + j] * ty * tx;
    }
  }
  return acc;
}

Tensor<double> dense_roi_align(const Tensor<double>& fmap, const BBox& box,
                               std::size_t batch_index, const RoiSpec& spec) {
  const std::size_t C = fmap.dim(1), H = fmap.dim(2), W = fmap.dim(3);
  const std::size_t P = spec.output_size, s = spec.sampling;
  const double shift = spec.aligned ? 0.5 : 0.0;
  const double x0 = box.x1 * spec.spatial_scale - shift;
  const double y0 = box.y1 * spec.spatial_scale - shift;
  const double bw = (box.x2 - box.x1) * spec.spatial_scale / double(P);
  const double bh = (box.y2 - box.y1) * spec.spatial_scale / double(P);
  Tensor<double> out({C, P, P});
  for (std::size_t c = 0; c < C; ++c) {
    const double* ch = fmap.data() + ((batch_index * C + c) * H) * W;
    for (std::size_t py = 0; py < P; ++py) {
      for (std::size_t px = 0; px < P; ++px) {
        double sum = 0.0;
        for (std::size_t a = 0; a < s; ++a) {
          for (std::size_t b = 0; b < s; ++b) {
            const double y = y0 + bh * (double(py) + (double(a) + 0.5) / double(s));
            const double x = x0 + bw * (double(px) + (double(b) + 0.5) / double(s));
            sum += bilinear_field(ch, H, W, y, x);
          }
        }
        out[(c * P + py) * P + px] = sum / double(s * s);
      }
    }
  }
  return out;
}

Tensor<double> naive_conv2d(const Tensor<double>& input,
                            const Tensor<double>& weight,
                            const Tensor<double>& bias, std::size_t stride,
                            std::size_t pad) {
  const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2),
                    W = input.dim(3);
  const std::size_t O = weight.dim(0), k = weight.dim(2);
  const std::size_t Ho = (H + 2 * pad - k) / stride + 1;
  const std::size_t Wo = (W + 2 * pad - k) / stride + 1;
  Tensor<double> out({B, O, Ho, Wo});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t y = 0; y < Ho; ++y)
        for (std::size_t x = 0; x < Wo; ++x) {
          double acc = bias[o];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t u = 0; u < k; ++u)
              for (std::size_t v = 0; v < k; ++v) {
                const long iy = long(y * stride + u) - long(pad);
                const long ix = long(x * stride + v) - long(pad);
                if (iy < 0 || ix < 0 || iy >= long(H) || ix >= long(W)) continue;
                acc += weight.at(o, c, u, v) * input.at(b, c, iy, ix);
              }
          out.at(b, o, y, x) = acc;
        }
  return out;
}

double box_iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = (iw > 0 && ih > 0) ? iw * ih : 0.0;
  const double uni = (a.x2 - a.x1) * (a.y2 - a.y1) +
                     (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::vector<double> central_difference(const std::vector<double*>& coords,
                                       const std::function<double()>& f,
                                       double h) {
  std::vector<double> out;
  out.reserve(coords.size());
  for (double* p : coords) {
    const double saved = *p;
    *p = saved + h;
    const double up = f();
    *p = saved - h;
    const double down = f();
    *p = saved;
    out.push_back((up - down) / (2.0 * h));
  }
  return out;
}

double relative_error(const std::vector<double>& analytic,
                      const std::vector<double>& numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::sqrt(std::max(na, nn));
  return denom == 0.0 ? std::sqrt(diff) : std::sqrt(diff) / denom;
}

std::vector<double*> coordinates(const std::vector<Tensor<double>*>& tensors) {
  std::vector<double*> out;
  for (auto* t : tensors) {
    for (std::size_t i = 0; i < t->size(); ++i) out.push_back(t->data() + i);
  }
  return out;
}

}  // namespace insloc::oracle
