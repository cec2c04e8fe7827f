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

#include "insloc/nn.hpp"

#include <Eigen/Core>
#include <cmath>
#include <limits>

namespace insloc::nn {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

std::size_t conv_out_dim(std::size_t in, const Conv2dGeometry& g) {
  const std::size_t padded = in + 2 * g.pad;
  if (padded < g.kernel) return 0;
  return (padded - g.kernel) / g.stride + 1;
}

// Unfolds one image [C,H,W] into [C*k*k, Ho*Wo].
template <typename T>
void im2col(const T* img, std::size_t C, std::size_t H, std::size_t W,
            const Conv2dGeometry& g, std::size_t Ho, std::size_t Wo, T* col) {
  const std::size_t k = g.kernel;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* row = col + ((c * k + ky) * k + kx) * Ho * Wo;
        for (std::size_t oy = 0; oy < Ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.pad);
          for (std::size_t ox = 0; ox < Wo; ++ox) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                static_cast<std::ptrdiff_t>(g.pad);
            const bool inside = iy >= 0 && ix >= 0 &&
                                iy < static_cast<std::ptrdiff_t>(H) &&
                                ix < static_cast<std::ptrdiff_t>(W);
            row[oy * Wo + ox] = inside ? img[(c * H + iy) * W + ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, std::size_t C, std::size_t H, std::size_t W,
            const Conv2dGeometry& g, std::size_t Ho, std::size_t Wo, T* img) {
  const std::size_t k = g.kernel;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* row = col + ((c * k + ky) * k + kx) * Ho * Wo;
        for (std::size_t oy = 0; oy < Ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t ox = 0; ox < Wo; ++ox) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                static_cast<std::ptrdiff_t>(g.pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
            img[(c * H + iy) * W + ix] += row[oy * Wo + ox];
          }
        }
      }
    }
  }
}

template <typename T>
void check_conv_shapes(const Tensor<T>& input, const Tensor<T>& weight,
                       const Tensor<T>& bias, const Conv2dGeometry& g) {
  require_rank(input, 4, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  if (weight.dim(1) != input.dim(1) || weight.dim(2) != g.kernel ||
      weight.dim(3) != g.kernel) {
    throw ShapeError("conv2d: input " + shape_string(input.shape()) +
                     " incompatible with weight " +
                     shape_string(weight.shape()) + " (kernel " +
                     std::to_string(g.kernel) + ")");
  }
  if (bias.shape() != Shape{weight.dim(0)}) {
    throw ShapeError("conv2d: bias " + shape_string(bias.shape()) +
                     " does not match weight " + shape_string(weight.shape()));
  }
  if (g.stride == 0 || conv_out_dim(input.dim(2), g) == 0 ||
      conv_out_dim(input.dim(3), g) == 0) {
    throw ShapeError("conv2d: kernel " + std::to_string(g.kernel) +
                     " with pad " + std::to_string(g.pad) +
                     " does not fit input " + shape_string(input.shape()));
  }
}

template <typename T>
void init_uniform_fan_in(Tensor<T>& w, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : w.values()) v = static_cast<T>(dist(rng));
}

}  // namespace

template <typename T>
void zero_grads(const ParamRefs<T>& params) {
  for (auto* p : params) p->grad.fill(T(0));
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weight,
                         const Tensor<T>& bias, Conv2dGeometry g) {
  check_conv_shapes(input, weight, bias, g);
  const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2),
                    W = input.dim(3), Co = weight.dim(0);
  const std::size_t Ho = conv_out_dim(H, g), Wo = conv_out_dim(W, g);
  const std::size_t K = C * g.kernel * g.kernel, P = Ho * Wo;
  Tensor<T> out({B, Co, Ho, Wo});
  std::vector<T> col(K * P);
  ConstMatMap<T> wmat(weight.data(), Co, K);
  for (std::size_t n = 0; n < B; ++n) {
    im2col(input.data() + n * C * H * W, C, H, W, g, Ho, Wo, col.data());
    MatMap<T> o(out.data() + n * Co * P, Co, P);
    o.noalias() = wmat * ConstMatMap<T>(col.data(), K, P);
    for (std::size_t co = 0; co < Co; ++co) o.row(co).array() += bias[co];
  }
  return out;
}

template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                          const Tensor<T>& weight, Conv2dGeometry g,
                          Tensor<T>& grad_weight, Tensor<T>& grad_bias) {
  if (input.empty()) {
    throw Error("conv2d backward: no saved forward input");
  }
  require_same_shape(grad_weight, weight, "conv2d grad_weight");
  const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2),
                    W = input.dim(3), Co = weight.dim(0);
  const std::size_t Ho = conv_out_dim(H, g), Wo = conv_out_dim(W, g);
  if (grad_out.shape() != Shape{B, Co, Ho, Wo}) {
    throw ShapeError("conv2d backward: grad_out " +
                     shape_string(grad_out.shape()) + " expected " +
                     shape_string({B, Co, Ho, Wo}));
  }
  const std::size_t K = C * g.kernel * g.kernel, P = Ho * Wo;
  Tensor<T> grad_in(input.shape());
  std::vector<T> col(K * P), dcol(K * P);
  ConstMatMap<T> wmat(weight.data(), Co, K);
  MatMap<T> gw(grad_weight.data(), Co, K);
  for (std::size_t n = 0; n < B; ++n) {
    ConstMatMap<T> go(grad_out.data() + n * Co * P, Co, P);
    im2col(input.data() + n * C * H * W, C, H, W, g, Ho, Wo, col.data());
    gw.noalias() += go * ConstMatMap<T>(col.data(), K, P).transpose();
    for (std::size_t co = 0; co < Co; ++co) grad_bias[co] += go.row(co).sum();
    MatMap<T>(dcol.data(), K, P).noalias() = wmat.transpose() * go;
    col2im(dcol.data(), C, H, W, g, Ho, Wo, grad_in.data() + n * C * H * W);
  }
  return grad_in;
}

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const Tensor<T>& weight,
                         const Tensor<T>& bias) {
  require_rank(x, 2, "linear input");
  if (weight.rank() != 2 || weight.dim(1) != x.dim(1)) {
    throw ShapeError("linear: input " + shape_string(x.shape()) +
                     " incompatible with weight " +
                     shape_string(weight.shape()));
  }
  const std::size_t B = x.dim(0), I = x.dim(1), O = weight.dim(0);
  Tensor<T> y({B, O});
  MatMap<T> ym(y.data(), B, O);
  ym.noalias() = ConstMatMap<T>(x.data(), B, I) *
                 ConstMatMap<T>(weight.data(), O, I).transpose();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < O; ++o) ym(b, o) += bias[o];
  }
  return y;
}

template <typename T>
Tensor<T> linear_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                          const Tensor<T>& weight, Tensor<T>& grad_weight,
                          Tensor<T>& grad_bias) {
  if (x.empty()) throw Error("linear backward: no saved forward input");
  const std::size_t B = x.dim(0), I = x.dim(1), O = weight.dim(0);
  if (grad_out.shape() != Shape{B, O}) {
    throw ShapeError("linear backward: grad_out " +
                     shape_string(grad_out.shape()) + " expected " +
                     shape_string({B, O}));
  }
  ConstMatMap<T> go(grad_out.data(), B, O);
  MatMap<T>(grad_weight.data(), O, I).noalias() +=
      go.transpose() * ConstMatMap<T>(x.data(), B, I);
  for (std::size_t o = 0; o < O; ++o) grad_bias[o] += go.col(o).sum();
  Tensor<T> gx(x.shape());
  MatMap<T>(gx.data(), B, I).noalias() =
      go * ConstMatMap<T>(weight.data(), O, I);
  return gx;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.values()) v = v > T(0) ? v : T(0);
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& x) {
  if (x.empty()) throw Error("relu backward: no saved forward input");
  require_same_shape(grad_out, x, "relu backward");
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(x[i] > T(0))) g[i] = T(0);
  }
  return g;
}

template <typename T>
Tensor<T> l2_normalize(const Tensor<T>& v) {
  require_rank(v, 2, "l2_normalize");
  const std::size_t B = v.dim(0), D = v.dim(1);
  Tensor<T> out(v.shape());
  for (std::size_t b = 0; b < B; ++b) {
    double ss = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      ss += static_cast<double>(v.at(b, d)) * v.at(b, d);
    }
    const double norm = std::sqrt(ss);
    if (norm <= 1e-12) {
      throw DegenerateError("l2_normalize: row " + std::to_string(b) +
                            " has near-zero norm " + std::to_string(norm));
    }
    for (std::size_t d = 0; d < D; ++d) {
      out.at(b, d) = static_cast<T>(v.at(b, d) / norm);
    }
  }
  return out;
}

// d(x/|x|) = (g - y (y.g)) / |x|
template <typename T>
Tensor<T> l2_normalize_backward(const Tensor<T>& grad_out,
                                const Tensor<T>& v) {
  require_same_shape(grad_out, v, "l2_normalize backward");
  const std::size_t B = v.dim(0), D = v.dim(1);
  Tensor<T> gx(v.shape());
  for (std::size_t b = 0; b < B; ++b) {
    double ss = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      ss += static_cast<double>(v.at(b, d)) * v.at(b, d);
    }
    const double norm = std::sqrt(ss);
    if (norm <= 1e-12) {
      throw DegenerateError("l2_normalize backward: row " + std::to_string(b) +
                            " has near-zero norm");
    }
    double yg = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      yg += v.at(b, d) / norm * static_cast<double>(grad_out.at(b, d));
    }
    for (std::size_t d = 0; d < D; ++d) {
      gx.at(b, d) = static_cast<T>(
          (grad_out.at(b, d) - v.at(b, d) / norm * yg) / norm);
    }
  }
  return gx;
}

template <typename T>
Tensor<T> global_avg_pool_forward(const Tensor<T>& x) {
  require_rank(x, 4, "global_avg_pool");
  const std::size_t B = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  Tensor<T> y({B, C});
  for (std::size_t i = 0; i < B * C; ++i) {
    T acc = 0;
    for (std::size_t j = 0; j < HW; ++j) acc += x[i * HW + j];
    y[i] = acc / static_cast<T>(HW);
  }
  return y;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& grad_out,
                                   const Shape& input_shape) {
  const std::size_t B = input_shape.at(0), C = input_shape.at(1),
                    HW = input_shape.at(2) * input_shape.at(3);
  if (grad_out.shape() != Shape{B, C}) {
    throw ShapeError("global_avg_pool backward: grad_out " +
                     shape_string(grad_out.shape()));
  }
  Tensor<T> g(input_shape);
  for (std::size_t i = 0; i < B * C; ++i) {
    const T v = grad_out[i] / static_cast<T>(HW);
    for (std::size_t j = 0; j < HW; ++j) g[i * HW + j] = v;
  }
  return g;
}

template <typename T>
Tensor<T> upsample_nearest2x_forward(const Tensor<T>& x) {
  require_rank(x, 4, "upsample");
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor<T> y({B, C, 2 * H, 2 * W});
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t h = 0; h < 2 * H; ++h)
        for (std::size_t w = 0; w < 2 * W; ++w)
          y.at(n, c, h, w) = x.at(n, c, h / 2, w / 2);
  return y;
}

template <typename T>
Tensor<T> upsample_nearest2x_backward(const Tensor<T>& grad_out) {
  require_rank(grad_out, 4, "upsample backward");
  const std::size_t B = grad_out.dim(0), C = grad_out.dim(1),
                    H = grad_out.dim(2) / 2, W = grad_out.dim(3) / 2;
  Tensor<T> g({B, C, H, W});
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t h = 0; h < 2 * H; ++h)
        for (std::size_t w = 0; w < 2 * W; ++w)
          g.at(n, c, h / 2, w / 2) += grad_out.at(n, c, h, w);
  return g;
}

// ---------------------------------------------------------------------------

template <typename T>
Conv2d<T>::Conv2d(const std::string& name, std::size_t in_channels,
                  std::size_t out_channels, Conv2dGeometry geom)
    : in_(in_channels),
      out_(out_channels),
      geom_(geom),
      weight_(name + ".weight",
              {out_channels, in_channels, geom.kernel, geom.kernel}),
      bias_(name + ".bias", {out_channels}) {}

template <typename T>
void Conv2d<T>::init(Rng& rng) {
  init_uniform_fan_in(weight_.value, in_ * geom_.kernel * geom_.kernel, rng);
  bias_.value.fill(T(0));
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& input) {
  Tensor<T> out = conv2d_forward(input, weight_.value, bias_.value, geom_);
  saved_input_ = input;
  return out;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out) {
  return conv2d_backward(grad_out, saved_input_, weight_.value, geom_,
                         weight_.grad, bias_.grad);
}

template <typename T>
Linear<T>::Linear(const std::string& name, std::size_t in_features,
                  std::size_t out_features)
    : in_(in_features),
      out_(out_features),
      weight_(name + ".weight", {out_features, in_features}),
      bias_(name + ".bias", {out_features}) {}

template <typename T>
void Linear<T>::init(Rng& rng) {
  init_uniform_fan_in(weight_.value, in_, rng);
  bias_.value.fill(T(0));
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x) {
  Tensor<T> y = linear_forward(x, weight_.value, bias_.value);
  saved_input_ = x;
  return y;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& grad_out) {
  return linear_backward(grad_out, saved_input_, weight_.value, weight_.grad,
                         bias_.grad);
}

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x) {
  saved_input_ = x;
  return relu_forward(x);
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& grad_out) {
  return relu_backward(grad_out, saved_input_);
}

template <typename T>
Tensor<T> MaxPool2d<T>::forward(const Tensor<T>& x) {
  require_rank(x, 4, "maxpool2d");
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % 2 || W % 2) {
    throw ShapeError("maxpool2d: spatial dims must be even, got " +
                     shape_string(x.shape()));
  }
  Tensor<T> y({B, C, H / 2, W / 2});
  argmax_.assign(y.size(), 0);
  input_shape_ = x.shape();
  std::size_t o = 0;
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t h = 0; h < H / 2; ++h)
        for (std::size_t w = 0; w < W / 2; ++w, ++o) {
          T best = -std::numeric_limits<T>::infinity();
          std::size_t arg = 0;
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t idx =
                  ((n * C + c) * H + 2 * h + dy) * W + 2 * w + dx;
              if (x[idx] > best) {
                best = x[idx];
                arg = idx;
              }
            }
          y[o] = best;
          argmax_[o] = arg;
        }
  return y;
}

template <typename T>
Tensor<T> MaxPool2d<T>::backward(const Tensor<T>& grad_out) {
  if (input_shape_.empty()) {
    throw Error("maxpool2d backward: no saved forward state");
  }
  if (grad_out.size() != argmax_.size()) {
    throw ShapeError("maxpool2d backward: grad_out " +
                     shape_string(grad_out.shape()));
  }
  Tensor<T> g(input_shape_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) g[argmax_[i]] += grad_out[i];
  return g;
}

template <typename T>
Tensor<T> ChannelStandardize<T>::forward(const Tensor<T>& x) {
  require_rank(x, 4, "channel standardize");
  const std::size_t BC = x.dim(0) * x.dim(1), HW = x.dim(2) * x.dim(3);
  Tensor<T> y(x.shape());
  inv_std_.assign(BC, T(0));
  for (std::size_t i = 0; i < BC; ++i) {
    const T* src = x.data() + i * HW;
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < HW; ++j) mean += src[j];
    mean /= static_cast<double>(HW);
    for (std::size_t j = 0; j < HW; ++j) var += (src[j] - mean) * (src[j] - mean);
    var /= static_cast<double>(HW);
    const double inv = 1.0 / std::sqrt(var + kEpsilon);
    inv_std_[i] = static_cast<T>(inv);
    for (std::size_t j = 0; j < HW; ++j) {
      y[i * HW + j] = static_cast<T>((src[j] - mean) * inv);
    }
  }
  saved_output_ = y;
  return y;
}

// dx = inv_std * (g - mean(g) - y * mean(g * y))
template <typename T>
Tensor<T> ChannelStandardize<T>::backward(const Tensor<T>& grad_out) {
  if (saved_output_.empty()) {
    throw Error("channel standardize backward: no saved forward state");
  }
  require_same_shape(grad_out, saved_output_, "channel standardize backward");
  const std::size_t BC = inv_std_.size(), HW = grad_out.size() / BC;
  Tensor<T> g(grad_out.shape());
  for (std::size_t i = 0; i < BC; ++i) {
    double mg = 0.0, mgy = 0.0;
    for (std::size_t j = 0; j < HW; ++j) {
      mg += grad_out[i * HW + j];
      mgy += static_cast<double>(grad_out[i * HW + j]) * saved_output_[i * HW + j];
    }
    mg /= static_cast<double>(HW);
    mgy /= static_cast<double>(HW);
    for (std::size_t j = 0; j < HW; ++j) {
      g[i * HW + j] = static_cast<T>(
          inv_std_[i] * (grad_out[i * HW + j] - mg - saved_output_[i * HW + j] * mgy));
    }
  }
  return g;
}

template <typename T>
MlpHead<T>::MlpHead(std::size_t in, std::size_t hidden, std::size_t out)
    : fc1_("head.fc1", in, hidden), fc2_("head.fc2", hidden, out) {}

template <typename T>
void MlpHead<T>::init(Rng& rng) {
  fc1_.init(rng);
  fc2_.init(rng);
}

template <typename T>
Tensor<T> MlpHead<T>::forward(const Tensor<T>& v) {
  if (v.rank() != 2 || v.dim(1) != fc1_.in_features()) {
    throw ShapeError("mlp head: input " + shape_string(v.shape()) +
                     " does not match head width " +
                     std::to_string(fc1_.in_features()));
  }
  return fc2_.forward(act_.forward(fc1_.forward(v)));
}

template <typename T>
Tensor<T> MlpHead<T>::backward(const Tensor<T>& grad_out) {
  return fc1_.backward(act_.backward(fc2_.backward(grad_out)));
}

template <typename T>
ParamRefs<T> MlpHead<T>::params() {
  ParamRefs<T> out = fc1_.params();
  for (auto* p : fc2_.params()) out.push_back(p);
  return out;
}

#define INSLOC_INSTANTIATE_NN(T)                                               \
  template void zero_grads<T>(const ParamRefs<T>&);                            \
  template Tensor<T> conv2d_forward<T>(const Tensor<T>&, const Tensor<T>&,     \
                                       const Tensor<T>&, Conv2dGeometry);      \
  template Tensor<T> conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&,    \
                                        const Tensor<T>&, Conv2dGeometry,      \
                                        Tensor<T>&, Tensor<T>&);               \
  template Tensor<T> linear_forward<T>(const Tensor<T>&, const Tensor<T>&,     \
                                       const Tensor<T>&);                      \
  template Tensor<T> linear_backward<T>(const Tensor<T>&, const Tensor<T>&,    \
                                        const Tensor<T>&, Tensor<T>&,          \
                                        Tensor<T>&);                           \
  template Tensor<T> relu_forward<T>(const Tensor<T>&);                        \
  template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);     \
  template Tensor<T> l2_normalize<T>(const Tensor<T>&);                        \
  template Tensor<T> l2_normalize_backward<T>(const Tensor<T>&,                \
                                              const Tensor<T>&);               \
  template Tensor<T> global_avg_pool_forward<T>(const Tensor<T>&);             \
  template Tensor<T> global_avg_pool_backward<T>(const Tensor<T>&,             \
                                                 const Shape&);                \
  template Tensor<T> upsample_nearest2x_forward<T>(const Tensor<T>&);          \
  template Tensor<T> upsample_nearest2x_backward<T>(const Tensor<T>&);         \
  template class Conv2d<T>;                                                    \
  template class Linear<T>;                                                    \
  template class ReLU<T>;                                                      \
  template class MaxPool2d<T>;                                                 \
  template class ChannelStandardize<T>;                                        \
  template class MlpHead<T>;

INSLOC_INSTANTIATE_NN(float)
INSLOC_INSTANTIATE_NN(double)

#undef INSLOC_INSTANTIATE_NN

}  // namespace insloc::nn
