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

#ifndef INSLOC_CONTRASTIVE_HPP_
#define INSLOC_CONTRASTIVE_HPP_

#include <cstddef>
#include <vector>

#include "insloc/backbone.hpp"
#include "insloc/tensor.hpp"

namespace insloc {

// Tolerance on |norm - 1| for rows entering InfoNCE or the queue.
inline constexpr double kUnitNormTolerance = 1e-3;
// Stored queue rows are held to a tighter bound.
inline constexpr double kQueueNormTolerance = 1e-5;

// Fixed-capacity FIFO ring of unit-norm key embeddings.
template <typename T>
class MemoryQueue {
 public:
  MemoryQueue() = default;
  MemoryQueue(std::size_t capacity, std::size_t dim);

  // Fills every slot with a random unit vector and marks the queue full.
  void fill_random(Rng& rng);

  // Writes b <= capacity rows at the cursor, evicting the oldest entries.
  void enqueue(const Tensor<T>& keys);

  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }
  std::size_t filled() const { return filled_; }
  std::size_t cursor() const { return cursor_; }
  const Tensor<T>& storage() const { return storage_; }

  // Direct state restore (checkpoints).
  void restore(Tensor<T> storage, std::size_t cursor, std::size_t filled);

 private:
  std::size_t capacity_ = 0, dim_ = 0;
  std::size_t cursor_ = 0, filled_ = 0;
  Tensor<T> storage_;
};

template <typename T>
struct InfoNceResult {
  double loss = 0.0;
  Tensor<T> grad_q;
  double positive_similarity = 0.0;  // mean q . k+
};

// Mean over the batch of -log softmax of the positive logit among
// {q.k+, q.k_i for every filled queue row}, all divided by tau. Gradient is
// w.r.t. q only; k+ and the queue are constants.
template <typename T>
InfoNceResult<T> info_nce_loss(const Tensor<T>& q, const Tensor<T>& k_pos,
                               const MemoryQueue<T>& queue, double tau);

// key <- m * key + (1 - m) * query, elementwise.
template <typename T>
void ema_update(const nn::ParamRefs<T>& key, const nn::ParamRefs<T>& query,
                double momentum);

// Query encoder trained by SGD; key encoder follows it by EMA only.
template <typename T>
class EncoderPair {
 public:
  EncoderPair(const BackboneConfig& cfg, double momentum);

  // Random query init; the key encoder starts as an exact copy.
  void init(Rng& rng);
  void momentum_update();

  Encoder<T>& query() { return query_; }
  Encoder<T>& key() { return key_; }
  double momentum() const { return momentum_; }

 private:
  Encoder<T> query_;
  Encoder<T> key_;
  double momentum_;
};

template <typename T>
struct StepInputs {
  Tensor<T> query_images;            // [B,3,H,W]
  std::vector<BBox> query_boxes;     // pooling boxes (possibly augmented)
  Tensor<T> key_images;              // [B,3,H,W]
  std::vector<BBox> key_boxes;       // ground truth
};

struct StepOptions {
  bool compute_gradients = true;  // zero then fill query-encoder gradients
  bool enqueue_keys = true;
};

struct StepLoss {
  double loss = 0.0;                 // mean of the per-level losses
  std::vector<double> level_losses;
  double positive_similarity = 0.0;  // mean over levels
};

// One InsLoc contrastive step: pool both views at every level, project,
// normalize, one InfoNCE per level against that level's queue, average.
// Gradients flow through the query encoder only. Keys are enqueued after the
// loss is computed.
template <typename T>
StepLoss insloc_step_loss(EncoderPair<T>& pair, const StepInputs<T>& inputs,
                          std::vector<MemoryQueue<T>>& queues, double tau,
                          StepOptions options = {});

}  // namespace insloc

#endif  // INSLOC_CONTRASTIVE_HPP_
