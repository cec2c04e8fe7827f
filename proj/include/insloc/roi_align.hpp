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

#ifndef INSLOC_ROI_ALIGN_HPP_
#define INSLOC_ROI_ALIGN_HPP_

#include <cstddef>
#include <vector>

#include "insloc/boxes.hpp"
#include "insloc/tensor.hpp"

namespace insloc {

struct RoiSpec {
  std::size_t output_size = 7;  // P, bins per axis
  std::size_t sampling = 2;     // s, samples per bin axis
  double spatial_scale = 1.0 / 16.0;
  bool aligned = true;  // shift by -0.5 after scaling

  void validate() const;
};

// Pools box (image coordinates) from fmap[batch_index] into [C,P,P]. Every
// bin is the mean of s*s bilinear samples; neighbours outside the map read
// as zero.
template <typename T>
Tensor<T> roi_align_forward(const Tensor<T>& fmap, const BBox& box,
                            std::size_t batch_index, const RoiSpec& spec);

// Adjoint of roi_align_forward; returns a fresh [B,C,Hf,Wf] gradient.
template <typename T>
Tensor<T> roi_align_backward(const Tensor<T>& grad_out, const BBox& box,
                             std::size_t batch_index, const RoiSpec& spec,
                             const Shape& fmap_shape);

// Same as roi_align_backward but adds into an existing gradient map.
template <typename T>
void roi_align_backward_accumulate(const Tensor<T>& grad_out, const BBox& box,
                                   std::size_t batch_index,
                                   const RoiSpec& spec, Tensor<T>& grad_fmap);

// One box per batch element: boxes[n] is pooled from fmap[n]. Output
// [B,C,P,P].
template <typename T>
Tensor<T> roi_align_batch(const Tensor<T>& fmap, const std::vector<BBox>& boxes,
                          const RoiSpec& spec);

template <typename T>
Tensor<T> roi_align_batch_backward(const Tensor<T>& grad_out,
                                   const std::vector<BBox>& boxes,
                                   const RoiSpec& spec,
                                   const Shape& fmap_shape);

// Scale-based pyramid level for a box:
// clamp(floor(base_level + log2(sqrt(area) / canonical_size)), 0, levels-1).
int assign_fpn_level(const BBox& box, int num_levels = 4, int base_level = 1,
                     double canonical_size = 16.0);

namespace testing {
// Fault injection for the self-check: scales the bilinear weights used by the
// backward scatter only. 1.0 restores normal behaviour.
void set_roi_backward_weight_scale(double scale);
double roi_backward_weight_scale();
}  // namespace testing

}  // namespace insloc

#endif  // INSLOC_ROI_ALIGN_HPP_
