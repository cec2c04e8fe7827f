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

#include "insloc/composition.hpp"

#include <algorithm>
#include <cmath>

#include "insloc/errors.hpp"

namespace insloc {

CompositionParams CompositionParams::defaults_for(BackboneVariant variant) {
  CompositionParams p;
  if (variant == BackboneVariant::kFpn) p.aspect = {0.5, 2.0};
  return p;
}

void CompositionParams::validate() const {
  if (composite_size <= 0) {
    throw InvalidArgument("composite size must be positive");
  }
  if (!(scale.first > 0.0 && scale.first <= scale.second)) {
    throw InvalidArgument("foreground scale range must satisfy 0 < lo <= hi");
  }
  if (std::ceil(scale.first) > std::floor(scale.second)) {
    throw InvalidArgument("foreground scale range contains no integer size");
  }
  if (scale.second > composite_size) {
    throw InvalidArgument("foreground scale max " + std::to_string(scale.second) +
                          " exceeds composite size " +
                          std::to_string(composite_size));
  }
  if (!(aspect.first > 0.0 && aspect.first <= aspect.second &&
        std::isfinite(aspect.second))) {
    throw InvalidArgument("aspect range must satisfy 0 < lo <= hi < inf");
  }
}

Composite compose(const Image& fg_view, const Image& bg,
                  const CompositionParams& params, Rng& rng) {
  params.validate();
  const int S = params.composite_size;
  Image canvas = (bg.height() == S && bg.width() == S)
                     ? bg
                     : resize_bilinear(bg, S, S);

  const int shorter = static_cast<int>(uniform_int(
      rng, static_cast<std::int64_t>(std::ceil(params.scale.first)),
      static_cast<std::int64_t>(std::floor(params.scale.second))));
  const double log_lo = std::log(params.aspect.first);
  const double log_hi = std::log(params.aspect.second);
  const double ratio = std::exp(uniform(rng, log_lo, log_hi));
  int w = shorter, h = shorter;
  if (ratio >= 1.0) {
    w = static_cast<int>(std::lround(shorter * ratio));
  } else {
    h = static_cast<int>(std::lround(shorter / ratio));
  }
  w = std::min(w, S);
  h = std::min(h, S);
  if (w < 1 || h < 1) {
    throw InvalidArgument("compose: foreground of " + std::to_string(w) + "x" +
                          std::to_string(h) + " cannot fit a " +
                          std::to_string(S) + " composite");
  }
  const int x0 = static_cast<int>(uniform_int(rng, 0, S - w));
  const int y0 = static_cast<int>(uniform_int(rng, 0, S - h));

  const Image fg = resize_bilinear(fg_view, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) canvas.at(y0 + y, x0 + x, c) = fg.at(y, x, c);

  return {std::move(canvas),
          BBox{double(x0), double(y0), double(x0 + w), double(y0 + h)}};
}

ViewPair make_pair(const Gallery& gallery, std::size_t instance_id,
                   const AugmentParams& aug, const CompositionParams& params,
                   Rng& rng) {
  const std::size_t K = gallery.size();
  if (K < 3) {
    throw InvalidArgument("make_pair: gallery of " + std::to_string(K) +
                          " images is too small (need >= 3)");
  }
  if (instance_id >= K) {
    throw InvalidArgument("make_pair: instance id " +
                          std::to_string(instance_id) + " out of range");
  }
  // Uniform over [0,K) minus the excluded ids, by skipping them in order.
  auto draw_excluding = [&](std::size_t a, std::size_t b, std::size_t n_excl) {
    std::size_t v = static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<std::int64_t>(K - n_excl) - 1));
    const std::size_t lo = std::min(a, b), hi = std::max(a, b);
    if (v >= lo) ++v;
    if (n_excl == 2 && v >= hi) ++v;
    return v;
  };
  const std::size_t bg_q = draw_excluding(instance_id, instance_id, 1);
  const std::size_t bg_k = draw_excluding(instance_id, bg_q, 2);

  const Image& src = gallery.images[instance_id];
  const Image view_q = augment_view(src, aug, rng);
  const Image view_k = augment_view(src, aug, rng);
  Composite q = compose(view_q, gallery.images[bg_q], params, rng);
  Composite k = compose(view_k, gallery.images[bg_k], params, rng);
  return {{std::move(q.image), q.bbox, instance_id, bg_q},
          {std::move(k.image), k.bbox, instance_id, bg_k}};
}

}  // namespace insloc
