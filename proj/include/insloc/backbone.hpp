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

// Toy detection backbones.
//
// Stage 0 is conv(stride 2) + ReLU + 2x2 max-pool (stride 4); every later
// stage is conv(stride 2) + ReLU, so stage i sits at stride 4 * 2^i.
//
//   C4:  stages 0..N-2 form the backbone and expose one map; the last stage is
//        applied after RoIAlign as the box head, followed by global average
//        pooling (the ResNet-C4 "res5 head" arrangement).
//   FPN: all N = 4 stages run in the backbone; 1x1 lateral convs plus
//        nearest-neighbour top-down addition give 4 maps of a common width.
//        The box head is flatten + linear + ReLU, shared by all levels.
//
// Both variants end in the two-layer MLP projection head.

#ifndef INSLOC_BACKBONE_HPP_
#define INSLOC_BACKBONE_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "insloc/boxes.hpp"
#include "insloc/nn.hpp"
#include "insloc/roi_align.hpp"

namespace insloc {

enum class BackboneVariant { kC4, kFpn };

std::string to_string(BackboneVariant v);

struct BackboneConfig {
  BackboneVariant variant = BackboneVariant::kC4;
  std::vector<std::size_t> widths{16, 32, 64, 64};
  std::size_t fpn_width = 64;
  std::size_t box_fc_dim = 128;  // FPN box-head output
  std::size_t head_hidden = 128;
  std::size_t head_dim = 128;
  bool channel_norm = false;
  std::size_t roi_output = 7;
  std::size_t roi_sampling = 2;
  bool roi_aligned = true;

  void validate() const;

  // Number of pooled maps: 1 for C4, 4 for FPN.
  std::size_t num_levels() const;
  // Stride of each exposed map, finest first.
  std::vector<std::size_t> level_strides() const;
  // Input sides must be divisible by this.
  std::size_t required_divisor() const;
  RoiSpec roi_spec(std::size_t level) const;
  // Closed-form trainable parameter count.
  std::size_t expected_parameter_count() const;
};

template <typename T>
class Backbone {
 public:
  explicit Backbone(const BackboneConfig& cfg);

  void init(Rng& rng);

  // images [B,3,H,W] -> one map (C4) or four maps (FPN).
  std::vector<Tensor<T>> forward(const Tensor<T>& images);
  // Gradients w.r.t. each exposed map; accumulates parameter gradients.
  void backward(const std::vector<Tensor<T>>& grad_maps);

  // Post-RoI stage: pooled [N,C,P,P] -> region feature [N,F].
  Tensor<T> forward_box_head(const Tensor<T>& pooled);
  Tensor<T> backward_box_head(const Tensor<T>& grad);
  std::size_t box_feature_dim() const;

  nn::ParamRefs<T> params();
  const BackboneConfig& config() const { return cfg_; }

 private:
  struct Stage {
    nn::Conv2d<T> conv;
    std::optional<nn::ChannelStandardize<T>> norm;
    nn::ReLU<T> act;
    std::optional<nn::MaxPool2d<T>> pool;

    Tensor<T> forward(const Tensor<T>& x);
    Tensor<T> backward(const Tensor<T>& g);
  };

  Stage make_stage(std::size_t index, std::size_t in, std::size_t out,
                   bool pool);

  BackboneConfig cfg_;
  std::vector<Stage> stages_;  // backbone stages
  std::vector<nn::Conv2d<T>> laterals_;
  std::vector<Shape> map_shapes_;

  // C4 box head.
  std::optional<Stage> head_stage_;
  Shape head_stage_out_shape_;
  // FPN box head.
  nn::Linear<T> box_fc_;
  nn::ReLU<T> box_act_;
  Shape pooled_shape_;
};

// Backbone + projection head. embed() pools one box per image at every level
// and returns un-normalized head outputs, one [B,D] tensor per level.
template <typename T>
class Encoder {
 public:
  explicit Encoder(const BackboneConfig& cfg);

  void init(Rng& rng);

  std::vector<Tensor<T>> embed(const Tensor<T>& images,
                               const std::vector<BBox>& boxes);
  void backward_embed(const std::vector<Tensor<T>>& grads);

  // Feature maps only (no pooling), e.g. to pool many regions per image.
  std::vector<Tensor<T>> features(const Tensor<T>& images);
  // Head outputs for regions boxes[r] of image batch_index[r], one [R,D]
  // tensor per level. Not meant to be followed by backward_embed.
  std::vector<Tensor<T>> embed_regions(
      const std::vector<Tensor<T>>& maps, const std::vector<BBox>& boxes,
      const std::vector<std::size_t>& batch_index);

  Backbone<T>& backbone() { return backbone_; }
  nn::MlpHead<T>& head() { return head_; }
  nn::ParamRefs<T> params();
  std::size_t parameter_count();
  const BackboneConfig& config() const { return backbone_.config(); }
  std::size_t num_levels() const { return config().num_levels(); }

 private:
  Backbone<T> backbone_;
  nn::MlpHead<T> head_;
  std::vector<BBox> boxes_;
  std::vector<Shape> map_shapes_;
};

// Copies parameter values between encoders of identical architecture.
template <typename T>
void copy_parameters(Encoder<T>& dst, Encoder<T>& src);

}  // namespace insloc

#endif  // INSLOC_BACKBONE_HPP_
