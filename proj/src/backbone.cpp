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

#include "insloc/backbone.hpp"

#include <algorithm>

namespace insloc {
namespace {

constexpr std::size_t kFpnLevels = 4;

// Copies rows [begin, begin+count) of the leading axis.
template <typename T>
Tensor<T> slice_rows(const Tensor<T>& t, std::size_t begin, std::size_t count) {
  Shape shape = t.shape();
  const std::size_t per = t.size() / shape[0];
  shape[0] = count;
  return Tensor<T>(shape, std::vector<T>(t.data() + begin * per,
                                         t.data() + (begin + count) * per));
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  Shape shape = parts.front().shape();
  std::size_t rows = 0;
  std::vector<T> data;
  for (const auto& p : parts) {
    rows += p.dim(0);
    data.insert(data.end(), p.values().begin(), p.values().end());
  }
  shape[0] = rows;
  return Tensor<T>(shape, std::move(data));
}

}  // namespace

std::string to_string(BackboneVariant v) {
  return v == BackboneVariant::kC4 ? "C4" : "FPN";
}

void BackboneConfig::validate() const {
  if (widths.size() < 2) {
    throw InvalidArgument("backbone needs at least 2 stages");
  }
  if (variant == BackboneVariant::kFpn && widths.size() != kFpnLevels) {
    throw InvalidArgument("FPN backbone needs exactly 4 stages, got " +
                          std::to_string(widths.size()));
  }
  for (std::size_t w : widths) {
    if (w == 0) throw InvalidArgument("backbone widths must be positive");
  }
  if (fpn_width == 0 || box_fc_dim == 0 || head_hidden == 0 || head_dim == 0 ||
      roi_output == 0 || roi_sampling == 0) {
    throw InvalidArgument("backbone dimensions must be positive");
  }
}

std::size_t BackboneConfig::num_levels() const {
  return variant == BackboneVariant::kC4 ? 1 : kFpnLevels;
}

std::vector<std::size_t> BackboneConfig::level_strides() const {
  if (variant == BackboneVariant::kC4) {
    return {std::size_t{4} << (widths.size() - 2)};
  }
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < kFpnLevels; ++i) s.push_back(std::size_t{4} << i);
  return s;
}

std::size_t BackboneConfig::required_divisor() const {
  return level_strides().back();
}

RoiSpec BackboneConfig::roi_spec(std::size_t level) const {
  RoiSpec spec;
  spec.output_size = roi_output;
  spec.sampling = roi_sampling;
  spec.spatial_scale = 1.0 / static_cast<double>(level_strides().at(level));
  spec.aligned = roi_aligned;
  return spec;
}

std::size_t BackboneConfig::expected_parameter_count() const {
  auto conv = [](std::size_t k, std::size_t in, std::size_t out) {
    return k * k * in * out + out;
  };
  std::size_t total = 0;
  std::size_t in = 3;
  for (std::size_t w : widths) {
    total += conv(3, in, w);  // the C4 head stage is counted here as well
    in = w;
  }
  std::size_t feature_dim = widths.back();
  if (variant == BackboneVariant::kFpn) {
    for (std::size_t w : widths) total += conv(1, w, fpn_width);
    total += fpn_width * roi_output * roi_output * box_fc_dim + box_fc_dim;
    feature_dim = box_fc_dim;
  }
  total += feature_dim * head_hidden + head_hidden;
  total += head_hidden * head_dim + head_dim;
  return total;
}

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> Backbone<T>::Stage::forward(const Tensor<T>& x) {
  Tensor<T> y = conv.forward(x);
  if (norm) y = norm->forward(y);
  y = act.forward(y);
  if (pool) y = pool->forward(y);
  return y;
}

template <typename T>
Tensor<T> Backbone<T>::Stage::backward(const Tensor<T>& g) {
  Tensor<T> d = pool ? pool->backward(g) : g;
  d = act.backward(d);
  if (norm) d = norm->backward(d);
  return conv.backward(d);
}

template <typename T>
typename Backbone<T>::Stage Backbone<T>::make_stage(std::size_t index,
                                                    std::size_t in,
                                                    std::size_t out,
                                                    bool pool) {
  Stage s{nn::Conv2d<T>("stage" + std::to_string(index) + ".conv", in, out,
                        {3, 2, 1}),
          std::nullopt, nn::ReLU<T>(), std::nullopt};
  if (cfg_.channel_norm) s.norm.emplace();
  if (pool) s.pool.emplace();
  return s;
}

template <typename T>
Backbone<T>::Backbone(const BackboneConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t n = cfg_.widths.size();
  const std::size_t in_backbone =
      cfg_.variant == BackboneVariant::kC4 ? n - 1 : n;
  std::size_t in = 3;
  for (std::size_t i = 0; i < in_backbone; ++i) {
    stages_.push_back(make_stage(i, in, cfg_.widths[i], i == 0));
    in = cfg_.widths[i];
  }
  if (cfg_.variant == BackboneVariant::kC4) {
    head_stage_.emplace(make_stage(n - 1, in, cfg_.widths[n - 1], false));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      laterals_.emplace_back("fpn.lateral" + std::to_string(i), cfg_.widths[i],
                             cfg_.fpn_width, nn::Conv2dGeometry{1, 1, 0});
    }
    box_fc_ = nn::Linear<T>(
        "box_head.fc", cfg_.fpn_width * cfg_.roi_output * cfg_.roi_output,
        cfg_.box_fc_dim);
  }
}

template <typename T>
void Backbone<T>::init(Rng& rng) {
  for (auto& s : stages_) s.conv.init(rng);
  for (auto& l : laterals_) l.init(rng);
  if (head_stage_) head_stage_->conv.init(rng);
  if (cfg_.variant == BackboneVariant::kFpn) box_fc_.init(rng);
}

template <typename T>
std::vector<Tensor<T>> Backbone<T>::forward(const Tensor<T>& images) {
  require_rank(images, 4, "backbone input");
  if (images.dim(1) != 3) {
    throw ShapeError("backbone input must have 3 channels, got " +
                     shape_string(images.shape()));
  }
  const std::size_t div = cfg_.required_divisor();
  if (images.dim(2) % div || images.dim(3) % div) {
    throw ShapeError("backbone input " + shape_string(images.shape()) +
                     " is not divisible by total stride " +
                     std::to_string(div));
  }
  std::vector<Tensor<T>> outs;
  Tensor<T> x = images;
  for (auto& s : stages_) {
    x = s.forward(x);
    outs.push_back(x);
  }
  std::vector<Tensor<T>> maps;
  if (cfg_.variant == BackboneVariant::kC4) {
    maps.push_back(std::move(outs.back()));
  } else {
    maps.resize(kFpnLevels);
    for (std::size_t i = kFpnLevels; i-- > 0;) {
      Tensor<T> lat = laterals_[i].forward(outs[i]);
      maps[i] = i + 1 < kFpnLevels
                    ? lat + nn::upsample_nearest2x_forward(maps[i + 1])
                    : std::move(lat);
    }
  }
  map_shapes_.clear();
  for (const auto& m : maps) map_shapes_.push_back(m.shape());
  return maps;
}

template <typename T>
void Backbone<T>::backward(const std::vector<Tensor<T>>& grad_maps) {
  if (map_shapes_.empty()) throw Error("backbone backward: no saved forward");
  if (grad_maps.size() != map_shapes_.size()) {
    throw ShapeError("backbone backward: expected " +
                     std::to_string(map_shapes_.size()) + " map gradients");
  }
  for (std::size_t i = 0; i < grad_maps.size(); ++i) {
    if (grad_maps[i].shape() != map_shapes_[i]) {
      throw ShapeError("backbone backward: level " + std::to_string(i) +
                       " grad " + shape_string(grad_maps[i].shape()) +
                       " expected " + shape_string(map_shapes_[i]));
    }
  }
  std::vector<Tensor<T>> stage_grads(stages_.size());
  if (cfg_.variant == BackboneVariant::kC4) {
    stage_grads.back() = grad_maps[0];
  } else {
    // P_i = L_i + up(P_{i+1}): walk finest to coarsest.
    Tensor<T> carry;
    for (std::size_t i = 0; i < kFpnLevels; ++i) {
      Tensor<T> total =
          i == 0 ? grad_maps[i]
                 : grad_maps[i] + nn::upsample_nearest2x_backward(carry);
      stage_grads[i] = laterals_[i].backward(total);
      carry = std::move(total);
    }
  }
  Tensor<T> g;
  for (std::size_t i = stages_.size(); i-- > 0;) {
    if (!g.empty()) {
      g = stage_grads[i].empty() ? g : g + stage_grads[i];
    } else {
      g = stage_grads[i];
    }
    g = stages_[i].backward(g);
  }
}

template <typename T>
Tensor<T> Backbone<T>::forward_box_head(const Tensor<T>& pooled) {
  require_rank(pooled, 4, "box head input");
  pooled_shape_ = pooled.shape();
  if (cfg_.variant == BackboneVariant::kC4) {
    Tensor<T> y = head_stage_->forward(pooled);
    head_stage_out_shape_ = y.shape();
    return nn::global_avg_pool_forward(y);
  }
  const std::size_t n = pooled.dim(0);
  return box_act_.forward(
      box_fc_.forward(pooled.reshaped({n, pooled.size() / n})));
}

template <typename T>
Tensor<T> Backbone<T>::backward_box_head(const Tensor<T>& grad) {
  if (pooled_shape_.empty()) throw Error("box head backward: no saved forward");
  if (cfg_.variant == BackboneVariant::kC4) {
    return head_stage_->backward(
        nn::global_avg_pool_backward(grad, head_stage_out_shape_));
  }
  return box_fc_.backward(box_act_.backward(grad)).reshaped(pooled_shape_);
}

template <typename T>
std::size_t Backbone<T>::box_feature_dim() const {
  return cfg_.variant == BackboneVariant::kC4 ? cfg_.widths.back()
                                              : cfg_.box_fc_dim;
}

template <typename T>
nn::ParamRefs<T> Backbone<T>::params() {
  nn::ParamRefs<T> out;
  auto add = [&](nn::ParamRefs<T> ps) { out.insert(out.end(), ps.begin(), ps.end()); };
  for (auto& s : stages_) add(s.conv.params());
  for (auto& l : laterals_) add(l.params());
  if (head_stage_) add(head_stage_->conv.params());
  if (cfg_.variant == BackboneVariant::kFpn) add(box_fc_.params());
  return out;
}

// ---------------------------------------------------------------------------

template <typename T>
Encoder<T>::Encoder(const BackboneConfig& cfg)
    : backbone_(cfg),
      head_(backbone_.box_feature_dim(), cfg.head_hidden, cfg.head_dim) {}

template <typename T>
void Encoder<T>::init(Rng& rng) {
  backbone_.init(rng);
  head_.init(rng);
}

template <typename T>
std::vector<Tensor<T>> Encoder<T>::features(const Tensor<T>& images) {
  return backbone_.forward(images);
}

template <typename T>
std::vector<Tensor<T>> Encoder<T>::embed(const Tensor<T>& images,
                                         const std::vector<BBox>& boxes) {
  if (boxes.size() != images.dim(0)) {
    throw ShapeError("embed: " + std::to_string(boxes.size()) +
                     " boxes for image batch " + shape_string(images.shape()));
  }
  const std::vector<Tensor<T>> maps = backbone_.forward(images);
  std::vector<Tensor<T>> pooled;
  map_shapes_.clear();
  for (std::size_t l = 0; l < maps.size(); ++l) {
    pooled.push_back(roi_align_batch(maps[l], boxes, config().roi_spec(l)));
    map_shapes_.push_back(maps[l].shape());
  }
  boxes_ = boxes;
  const Tensor<T> out =
      head_.forward(backbone_.forward_box_head(concat_rows(pooled)));
  std::vector<Tensor<T>> per_level;
  for (std::size_t l = 0; l < maps.size(); ++l) {
    per_level.push_back(slice_rows(out, l * boxes.size(), boxes.size()));
  }
  return per_level;
}

template <typename T>
void Encoder<T>::backward_embed(const std::vector<Tensor<T>>& grads) {
  if (map_shapes_.empty()) throw Error("embed backward: no saved forward");
  if (grads.size() != map_shapes_.size()) {
    throw ShapeError("embed backward: expected " +
                     std::to_string(map_shapes_.size()) + " level gradients");
  }
  const Tensor<T> g_pooled =
      backbone_.backward_box_head(head_.backward(concat_rows(grads)));
  const std::size_t B = boxes_.size();
  std::vector<Tensor<T>> grad_maps;
  for (std::size_t l = 0; l < map_shapes_.size(); ++l) {
    grad_maps.push_back(roi_align_batch_backward(
        slice_rows(g_pooled, l * B, B), boxes_, config().roi_spec(l),
        map_shapes_[l]));
  }
  backbone_.backward(grad_maps);
}

template <typename T>
std::vector<Tensor<T>> Encoder<T>::embed_regions(
    const std::vector<Tensor<T>>& maps, const std::vector<BBox>& boxes,
    const std::vector<std::size_t>& batch_index) {
  if (boxes.size() != batch_index.size() || boxes.empty()) {
    throw InvalidArgument("embed_regions: need one batch index per box");
  }
  const std::size_t P = config().roi_output;
  std::vector<Tensor<T>> pooled;
  for (std::size_t l = 0; l < maps.size(); ++l) {
    const std::size_t C = maps[l].dim(1), per = C * P * P;
    Tensor<T> level({boxes.size(), C, P, P});
    for (std::size_t r = 0; r < boxes.size(); ++r) {
      const Tensor<T> one =
          roi_align_forward(maps[l], boxes[r], batch_index[r], config().roi_spec(l));
      std::copy(one.data(), one.data() + per, level.data() + r * per);
    }
    pooled.push_back(std::move(level));
  }
  const Tensor<T> out =
      head_.forward(backbone_.forward_box_head(concat_rows(pooled)));
  std::vector<Tensor<T>> per_level;
  for (std::size_t l = 0; l < maps.size(); ++l) {
    per_level.push_back(slice_rows(out, l * boxes.size(), boxes.size()));
  }
  return per_level;
}

template <typename T>
nn::ParamRefs<T> Encoder<T>::params() {
  nn::ParamRefs<T> out = backbone_.params();
  for (auto* p : head_.params()) out.push_back(p);
  return out;
}

template <typename T>
std::size_t Encoder<T>::parameter_count() {
  std::size_t n = 0;
  for (auto* p : params()) n += p->value.size();
  return n;
}

template <typename T>
void copy_parameters(Encoder<T>& dst, Encoder<T>& src) {
  auto d = dst.params();
  auto s = src.params();
  if (d.size() != s.size()) {
    throw ShapeError("copy_parameters: parameter lists differ in length");
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    require_same_shape(d[i]->value, s[i]->value, "copy_parameters");
    d[i]->value = s[i]->value;
  }
}

template class Backbone<float>;
template class Backbone<double>;
template class Encoder<float>;
template class Encoder<double>;
template void copy_parameters<float>(Encoder<float>&, Encoder<float>&);
template void copy_parameters<double>(Encoder<double>&, Encoder<double>&);

}  // namespace insloc
