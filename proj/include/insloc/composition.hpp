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

// Copy-paste composition: a foreground view is resized to a random scale and
// aspect ratio and hard-pasted onto a different gallery image.

#ifndef INSLOC_COMPOSITION_HPP_
#define INSLOC_COMPOSITION_HPP_

#include <cstddef>
#include <utility>

#include "insloc/backbone.hpp"
#include "insloc/boxes.hpp"
#include "insloc/imaging.hpp"

namespace insloc {

struct CompositionParams {
  int composite_size = 64;
  std::pair<double, double> scale{16, 48};           // shorter side, pixels
  std::pair<double, double> aspect{1.0 / 3.0, 3.0};  // width / height

  // Desk defaults: [1/3,3] aspect for C4, [1/2,2] for FPN.
  static CompositionParams defaults_for(BackboneVariant variant);

  void validate() const;
};

struct Composite {
  Image image;
  BBox bbox;
};

struct CompositeSample {
  Image image;
  BBox bbox;
  std::size_t instance_id = 0;
  std::size_t background_id = 0;
};

// Shorter side drawn uniformly from the integer scale range, aspect
// log-uniformly; the longer side is clamped to the composite. Pixels outside
// bbox equal the (resized) background, pixels inside the resized foreground.
Composite compose(const Image& fg_view, const Image& bg,
                  const CompositionParams& params, Rng& rng);

struct ViewPair {
  CompositeSample query;
  CompositeSample key;
};

// Two independently augmented views of one instance, each pasted on its own
// background. Backgrounds differ from the instance and from each other.
ViewPair make_pair(const Gallery& gallery, std::size_t instance_id,
                   const AugmentParams& aug, const CompositionParams& params,
                   Rng& rng);

}  // namespace insloc

#endif  // INSLOC_COMPOSITION_HPP_
