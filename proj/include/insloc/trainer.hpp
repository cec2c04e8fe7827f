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

#ifndef INSLOC_TRAINER_HPP_
#define INSLOC_TRAINER_HPP_

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "insloc/boxes.hpp"
#include "insloc/checkpoint.hpp"
#include "insloc/composition.hpp"
#include "insloc/contrastive.hpp"
#include "insloc/imaging.hpp"

namespace insloc {

enum class TrainMode { kInslocC4, kInslocFpn, kBaselineHolistic };

std::string to_string(TrainMode mode);
// Accepts "insloc-c4", "insloc-fpn", "baseline-holistic".
TrainMode parse_train_mode(std::string_view name);
BackboneVariant variant_for(TrainMode mode);

struct TrainConfig {
  TrainMode mode = TrainMode::kInslocC4;
  std::size_t steps = 2000;
  std::size_t batch_size = 32;
  double lr = 0.03;
  double sgd_momentum = 0.9;
  double weight_decay = 1e-4;
  double temperature = 0.2;
  std::size_t queue_size = 1024;
  bool queue_random_init = true;  // false: start empty and grow
  double ema_momentum = 0.999;
  std::uint64_t seed = 0;
  std::size_t gallery_size = 256;
  bool box_aug = true;
  double iou_threshold = 0.5;
  BackboneConfig backbone;
  CompositionParams composition;
  AugmentParams augment;
  AnchorConfig anchors;

  // Desk defaults for a mode (backbone variant and composite aspect range).
  static TrainConfig desk(TrainMode mode);
  void validate() const;
};

// FNV-1a over a canonical text rendering of every training-relevant field.
std::uint64_t config_hash(const TrainConfig& cfg);

// 0.5 * base_lr * (1 + cos(pi * step / total_steps)).
double cosine_lr(std::size_t step, std::size_t total_steps, double base_lr);

// g = grad + wd * theta; v = momentum * v + g; theta -= lr * v.
// velocity is sized (zero-filled) on first use.
template <typename T>
void sgd_step(const nn::ParamRefs<T>& params, std::vector<Tensor<T>>& velocity,
              double lr, double momentum, double weight_decay);

// One training example before batching.
struct PreparedSample {
  Image query;
  Image key;
  BBox query_box;     // pooling box for the query encoder
  BBox query_gt_box;  // ground truth in the query composite
  BBox key_box;       // ground truth in the key composite
  std::size_t instance_id = 0;
};

// Builds one example from its own seed, so batches can be prepared on worker
// threads without changing results.
PreparedSample prepare_sample(const TrainConfig& cfg, const Gallery& gallery,
                              const std::vector<BBox>& anchors,
                              std::size_t instance_id, std::uint64_t seed);

struct StepRecord {
  std::size_t step = 0;  // 0-based index of the step just taken
  double loss = 0.0;
  double lr = 0.0;
  double positive_similarity = 0.0;
};

// Owns every piece of mutable training state.
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);

  StepRecord train_step();
  // Runs until `step() == until` (clamped to config().steps). Writes one
  // `step<TAB>loss<TAB>lr` line per step when metrics is non-null.
  std::vector<StepRecord> run(std::size_t until, std::ostream* metrics = nullptr);
  std::vector<StepRecord> run_all(std::ostream* metrics = nullptr) {
    return run(cfg_.steps, metrics);
  }

  const TrainConfig& config() const { return cfg_; }
  std::size_t step() const { return step_; }
  EncoderPair<float>& pair() { return pair_; }
  std::vector<MemoryQueue<float>>& queues() { return queues_; }
  const Gallery& gallery() const { return gallery_; }
  const std::vector<BBox>& anchors() const { return anchors_; }

  Checkpoint checkpoint();
  // Throws InvalidArgument if the checkpoint's config hash differs.
  void restore(const Checkpoint& ckpt);

 private:
  std::vector<PreparedSample> prepare_batch(
      const std::vector<std::size_t>& ids,
      const std::vector<std::uint64_t>& seeds) const;

  TrainConfig cfg_;
  Gallery gallery_;
  std::vector<BBox> anchors_;
  EncoderPair<float> pair_;
  std::vector<MemoryQueue<float>> queues_;
  std::vector<Tensor<float>> velocity_;
  Rng data_rng_;
  std::size_t step_ = 0;
};

// Worker threads for batch preparation, from INSLOC_THREADS (default 1).
std::size_t data_threads();

}  // namespace insloc

#endif  // INSLOC_TRAINER_HPP_
