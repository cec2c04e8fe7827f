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

// Reference implementations used to check the fast kernels. They share no
// code with the kernels they check and favour obviousness over speed.

#ifndef INSLOC_ORACLES_HPP_
#define INSLOC_ORACLES_HPP_

#include <functional>
#include <vector>

#include "insloc/boxes.hpp"
#include "insloc/nn.hpp"
#include "insloc/roi_align.hpp"

namespace insloc::oracle {

// Zero-padded bilinear field of one channel evaluated at (y, x) as a sum of
// tent kernels over every pixel: sum_ij f[i,j] * tri(y - i) * tri(x - j).
double bilinear_field(const double* channel, std::size_t H, std::size_t W,
                      double y, double x);

// RoIAlign by direct evaluation of the sample lattice over bilinear_field.
Tensor<double> dense_roi_align(const Tensor<double>& fmap, const BBox& box,
                               std::size_t batch_index, const RoiSpec& spec);

// Six nested loops, zero padding.
Tensor<double> naive_conv2d(const Tensor<double>& input,
                            const Tensor<double>& weight,
                            const Tensor<double>& bias, std::size_t stride,
                            std::size_t pad);

// Intersection-over-union written out from coordinates.
double box_iou(const BBox& a, const BBox& b);

// Central differences of f with respect to each pointed-to coordinate.
std::vector<double> central_difference(const std::vector<double*>& coords,
                                       const std::function<double()>& f,
                                       double h);

// ||a - n|| / max(||a||, ||n||); 0 when both vanish.
double relative_error(const std::vector<double>& analytic,
                      const std::vector<double>& numeric);

// Pointers to every element of each tensor, in order.
std::vector<double*> coordinates(const std::vector<Tensor<double>*>& tensors);

}  // namespace insloc::oracle

#endif  // INSLOC_ORACLES_HPP_
