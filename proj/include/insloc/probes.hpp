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

// Linear readouts over a frozen encoder: which grid cell did a patch come
// from (localization), and which gallery instance is this view (classification).

#ifndef INSLOC_PROBES_HPP_
#define INSLOC_PROBES_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "insloc/backbone.hpp"
#include "insloc/imaging.hpp"

namespace insloc {

struct ProbeConfig {
  std::size_t M = 9;  // patches per image, a perfect square
  std::size_t steps = 500;
  double lr = 2.0;  // in units of 1 / top eigenvalue of the features
  double eval_fraction = 0.2;  // gallery images held out for localization
  std::size_t cls_train_views = 8;
  std::size_t cls_eval_views = 8;
  std::uint64_t seed = 0;
  // Whiten the standardized features before descent. Ridge is relative to the
  // mean eigenvalue of their correlation matrix.
  bool whiten = true;
  double whiten_ridge = 1e-3;
  bool isolated_patches = false;  // crop + resize each patch instead
  AugmentParams augment;          // view_size is forced to the image size

  void validate() const;
};

// Row-major sqrt(M) x sqrt(M) tiling of an h x w image.
std::vector<BBox> patch_grid(int image_h, int image_w, std::size_t M);

// Region used by the probe for a box: the level RoI heuristics would pick on
// FPN encoders, 0 otherwise.
std::size_t probe_level(const BackboneConfig& cfg, const BBox& box);

// Un-normalized head output for one grid cell of one image.
Tensor<double> extract_patch_embedding(Encoder<float>& encoder,
                                       const Image& image,
                                       std::size_t patch_index, std::size_t M,
                                       bool isolated = false);

// Head outputs for a list of (image, box) regions, batched. Row r belongs to
// regions[r]. Images are forwarded once per batch.
struct Region {
  const Image* image = nullptr;
  BBox box;
};
Tensor<double> embed_regions(Encoder<float>& encoder,
                             const std::vector<Region>& regions,
                             std::size_t images_per_batch = 32);

struct LinearClassifier {
  Tensor<double> weight;  // [D,L]
  Tensor<double> bias;    // [L]
  std::vector<double> mean, inv_std;  // feature standardization
  Tensor<double> whiten;              // [D,D], empty when disabled

  std::vector<std::size_t> predict(const Tensor<double>& x) const;
};

struct ProbeLoss {
  double loss = 0.0;
  Tensor<double> grad_weight;
  Tensor<double> grad_bias;
};

// Mean softmax cross-entropy of x.W + b, with gradients.
ProbeLoss probe_loss(const Tensor<double>& x,
                     const std::vector<std::size_t>& labels,
                     const Tensor<double>& weight, const Tensor<double>& bias);

// Standardizes x with its own statistics (optionally whitening it), then
// full-batch gradient descent from zero on the softmax cross-entropy.
LinearClassifier train_linear_probe(const Tensor<double>& x,
                                    const std::vector<std::size_t>& labels,
                                    std::size_t num_classes,
                                    const ProbeConfig& cfg);

double accuracy(const LinearClassifier& clf, const Tensor<double>& x,
                const std::vector<std::size_t>& labels);

struct ProbeResult {
  double accuracy = 0.0;        // held-out top-1
  double train_accuracy = 0.0;  // on the probe's own training set
  double chance = 0.0;
  std::size_t eval_count = 0;
};

ProbeResult localization_probe_accuracy(Encoder<float>& encoder,
                                        const Gallery& gallery,
                                        const ProbeConfig& cfg);

ProbeResult classification_probe_accuracy(Encoder<float>& encoder,
                                          const Gallery& gallery,
                                          const ProbeConfig& cfg);

// `mode<TAB>M<TAB>loc_acc<TAB>cls_acc<TAB>seed`
std::string probe_tsv_row(const std::string& mode, std::size_t M,
                          double loc_acc, double cls_acc, std::uint64_t seed);

// FNV-1a over every parameter value, to show an encoder was left untouched.
std::uint64_t parameter_fingerprint(Encoder<float>& encoder);

}  // namespace insloc

#endif  // INSLOC_PROBES_HPP_
