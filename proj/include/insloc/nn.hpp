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

// Hand-wired differentiable layers. Every layer caches what its backward pass
// needs during forward; backward accumulates into the gradient buffers and
// never touches parameter values.

#ifndef INSLOC_NN_HPP_
#define INSLOC_NN_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "insloc/rng.hpp"
#include "insloc/tensor.hpp"

namespace insloc::nn {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, Shape shape)
      : name(std::move(n)), value(shape), grad(shape) {}
};

// Non-owning views over a model's parameters, in a stable order.
template <typename T>
using ParamRefs = std::vector<Parameter<T>*>;

template <typename T>
void zero_grads(const ParamRefs<T>& params);

// ---------------------------------------------------------------------------
// Stateless kernels.

struct Conv2dGeometry {
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t pad = 1;
};

// Cross-correlation. input [B,C,H,W], weight [Co,C,k,k], bias [Co].
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weight,
                         const Tensor<T>& bias, Conv2dGeometry geom);

// Returns grad_input; adds into grad_weight / grad_bias.
template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                          const Tensor<T>& weight, Conv2dGeometry geom,
                          Tensor<T>& grad_weight, Tensor<T>& grad_bias);

// x [B,I], weight [O,I], bias [O].
template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const Tensor<T>& weight,
                         const Tensor<T>& bias);

template <typename T>
Tensor<T> linear_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                          const Tensor<T>& weight, Tensor<T>& grad_weight,
                          Tensor<T>& grad_bias);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& x);

// Row-wise projection onto the unit sphere. Rows with norm <= 1e-12 throw
// DegenerateError.
template <typename T>
Tensor<T> l2_normalize(const Tensor<T>& v);

template <typename T>
Tensor<T> l2_normalize_backward(const Tensor<T>& grad_out,
                                const Tensor<T>& v);

template <typename T>
Tensor<T> global_avg_pool_forward(const Tensor<T>& x);

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& grad_out,
                                   const Shape& input_shape);

template <typename T>
Tensor<T> upsample_nearest2x_forward(const Tensor<T>& x);

template <typename T>
Tensor<T> upsample_nearest2x_backward(const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------
// Layers.

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, std::size_t in_channels,
         std::size_t out_channels, Conv2dGeometry geom);

  // Uniform fan-in scaling: U(-b, b) with b = sqrt(6 / fan_in); zero bias.
  void init(Rng& rng);

  Tensor<T> forward(const Tensor<T>& input);
  Tensor<T> backward(const Tensor<T>& grad_out);

  ParamRefs<T> params() { return {&weight_, &bias_}; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  const Conv2dGeometry& geometry() const { return geom_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  Conv2dGeometry geom_;
  Parameter<T> weight_, bias_;
  Tensor<T> saved_input_;
};

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::size_t in_features,
         std::size_t out_features);

  void init(Rng& rng);

  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);

  ParamRefs<T> params() { return {&weight_, &bias_}; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  Parameter<T> weight_, bias_;
  Tensor<T> saved_input_;
};

template <typename T>
class ReLU {
 public:
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);

 private:
  Tensor<T> saved_input_;
};

// 2x2 window, stride 2. Spatial dims must be even.
template <typename T>
class MaxPool2d {
 public:
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);

 private:
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

// Parameter-free per-sample, per-channel standardization of a [B,C,H,W] map.
template <typename T>
class ChannelStandardize {
 public:
  static constexpr double kEpsilon = 1e-5;

  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);

 private:
  Tensor<T> saved_output_;
  std::vector<T> inv_std_;
};

// Two-layer projection head: linear -> ReLU -> linear. Output is not
// normalized.
template <typename T>
class MlpHead {
 public:
  MlpHead() = default;
  MlpHead(std::size_t in, std::size_t hidden, std::size_t out);

  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& v);
  Tensor<T> backward(const Tensor<T>& grad_out);
  ParamRefs<T> params();

  std::size_t in_features() const { return fc1_.in_features(); }
  std::size_t out_features() const { return fc2_.out_features(); }
  Linear<T>& fc1() { return fc1_; }
  Linear<T>& fc2() { return fc2_; }

 private:
  Linear<T> fc1_;
  ReLU<T> act_;
  Linear<T> fc2_;
};

}  // namespace insloc::nn

#endif  // INSLOC_NN_HPP_
