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

#include "insloc/contrastive.hpp"

#include <algorithm>
#include <cmath>

namespace insloc {
namespace {

template <typename T>
void require_unit_rows(const Tensor<T>& t, const char* what, double tol) {
  require_rank(t, 2, what);
  for (std::size_t b = 0; b < t.dim(0); ++b) {
    double ss = 0.0;
    for (std::size_t d = 0; d < t.dim(1); ++d) {
      ss += static_cast<double>(t.at(b, d)) * t.at(b, d);
    }
    const double dev = std::abs(std::sqrt(ss) - 1.0);
    if (dev > tol) {
      throw InvalidArgument(std::string(what) + ": row " + std::to_string(b) +
                            " is not unit norm (|norm-1| = " +
                            std::to_string(dev) + ")");
    }
  }
}

}  // namespace

template <typename T>
MemoryQueue<T>::MemoryQueue(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim), storage_({capacity, dim}) {}

template <typename T>
void MemoryQueue<T>::fill_random(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < capacity_; ++i) {
    std::vector<double> v(dim_);
    double ss = 0.0;
    do {
      ss = 0.0;
      for (auto& x : v) {
        x = normal(rng);
        ss += x * x;
      }
    } while (ss < 1e-12);
    const double inv = 1.0 / std::sqrt(ss);
    for (std::size_t d = 0; d < dim_; ++d) {
      storage_.at(i, d) = static_cast<T>(v[d] * inv);
    }
  }
  cursor_ = 0;
  filled_ = capacity_;
}

template <typename T>
void MemoryQueue<T>::enqueue(const Tensor<T>& keys) {
  if (keys.empty()) return;
  require_rank(keys, 2, "enqueue");
  if (keys.dim(1) != dim_) {
    throw ShapeError("enqueue: key width " + std::to_string(keys.dim(1)) +
                     " does not match queue dim " + std::to_string(dim_));
  }
  const std::size_t b = keys.dim(0);
  if (b > capacity_) {
    throw InvalidArgument("enqueue: " + std::to_string(b) +
                          " rows exceed queue capacity " +
                          std::to_string(capacity_));
  }
  require_unit_rows(keys, "enqueue", kQueueNormTolerance);
  for (std::size_t r = 0; r < b; ++r) {
    std::copy(keys.data() + r * dim_, keys.data() + (r + 1) * dim_,
              storage_.data() + cursor_ * dim_);
    cursor_ = (cursor_ + 1) % capacity_;
  }
  filled_ = std::min(capacity_, filled_ + b);
}

template <typename T>
void MemoryQueue<T>::restore(Tensor<T> storage, std::size_t cursor,
                             std::size_t filled) {
  if (storage.shape() != Shape{capacity_, dim_} || cursor >= capacity_ ||
      filled > capacity_) {
    throw ShapeError("queue restore: inconsistent state " +
                     shape_string(storage.shape()));
  }
  storage_ = std::move(storage);
  cursor_ = cursor;
  filled_ = filled;
}

template <typename T>
InfoNceResult<T> info_nce_loss(const Tensor<T>& q, const Tensor<T>& k_pos,
                               const MemoryQueue<T>& queue, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("info_nce_loss: tau must be > 0");
  require_same_shape(q, k_pos, "info_nce_loss q/k+");
  require_unit_rows(q, "info_nce_loss q", kUnitNormTolerance);
  require_unit_rows(k_pos, "info_nce_loss k+", kUnitNormTolerance);
  if (q.dim(1) != queue.dim()) {
    throw ShapeError("info_nce_loss: embedding width " +
                     std::to_string(q.dim(1)) + " vs queue dim " +
                     std::to_string(queue.dim()));
  }
  const std::size_t B = q.dim(0), D = q.dim(1), N = queue.filled();
  const Tensor<T>& negatives = queue.storage();
  InfoNceResult<T> out;
  out.grad_q = Tensor<T>(q.shape());
  std::vector<double> logits(N + 1), prob(N + 1);
  for (std::size_t b = 0; b < B; ++b) {
    const T* qb = q.data() + b * D;
    auto dot_row = [&](const T* k) {
      double acc = 0.0;
      for (std::size_t d = 0; d < D; ++d) acc += static_cast<double>(qb[d]) * k[d];
      return acc;
    };
    logits[0] = dot_row(k_pos.data() + b * D);
    out.positive_similarity += logits[0];
    for (std::size_t i = 0; i < N; ++i) logits[i + 1] = dot_row(negatives.data() + i * D);
    for (auto& l : logits) l /= tau;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t i = 0; i <= N; ++i) {
      prob[i] = std::exp(logits[i] - mx);
      z += prob[i];
    }
    out.loss += std::log(z) + mx - logits[0];
    for (auto& p : prob) p /= z;
    // dL/dq = (sum_i p_i k_i - k+) / tau, averaged over the batch.
    const double scale = 1.0 / (tau * static_cast<double>(B));
    for (std::size_t d = 0; d < D; ++d) {
      double g = (prob[0] - 1.0) * k_pos.at(b, d);
      for (std::size_t i = 0; i < N; ++i) g += prob[i + 1] * negatives.at(i, d);
      out.grad_q.at(b, d) = static_cast<T>(g * scale);
    }
  }
  out.loss /= static_cast<double>(B);
  out.positive_similarity /= static_cast<double>(B);
  return out;
}

template <typename T>
void ema_update(const nn::ParamRefs<T>& key, const nn::ParamRefs<T>& query,
                double momentum) {
  if (key.size() != query.size()) {
    throw ShapeError("momentum update: parameter lists differ in length");
  }
  const T m = static_cast<T>(momentum);
  const T one_minus_m = static_cast<T>(1.0 - momentum);
  for (std::size_t i = 0; i < key.size(); ++i) {
    require_same_shape(key[i]->value, query[i]->value, "momentum update");
    T* k = key[i]->value.data();
    const T* q = query[i]->value.data();
    for (std::size_t j = 0; j < key[i]->value.size(); ++j) {
      k[j] = m * k[j] + one_minus_m * q[j];
    }
  }
}

template <typename T>
EncoderPair<T>::EncoderPair(const BackboneConfig& cfg, double momentum)
    : query_(cfg), key_(cfg), momentum_(momentum) {
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw InvalidArgument("EMA momentum must lie in [0,1]");
  }
}

template <typename T>
void EncoderPair<T>::init(Rng& rng) {
  query_.init(rng);
  copy_parameters(key_, query_);
}

template <typename T>
void EncoderPair<T>::momentum_update() {
  ema_update(key_.params(), query_.params(), momentum_);
}

template <typename T>
StepLoss insloc_step_loss(EncoderPair<T>& pair, const StepInputs<T>& inputs,
                          std::vector<MemoryQueue<T>>& queues, double tau,
                          StepOptions options) {
  const std::size_t levels = pair.query().num_levels();
  if (queues.size() != levels) {
    throw InvalidArgument("insloc step: " + std::to_string(queues.size()) +
                          " queues for " + std::to_string(levels) + " levels");
  }
  std::vector<Tensor<T>> keys =
      pair.key().embed(inputs.key_images, inputs.key_boxes);
  for (auto& k : keys) k = nn::l2_normalize(k);

  const std::vector<Tensor<T>> z =
      pair.query().embed(inputs.query_images, inputs.query_boxes);

  StepLoss result;
  std::vector<Tensor<T>> grads;
  const double inv_levels = 1.0 / static_cast<double>(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    const Tensor<T> q = nn::l2_normalize(z[l]);
    InfoNceResult<T> r = info_nce_loss(q, keys[l], queues[l], tau);
    result.level_losses.push_back(r.loss);
    result.loss += r.loss * inv_levels;
    result.positive_similarity += r.positive_similarity * inv_levels;
    if (options.compute_gradients) {
      for (auto& g : r.grad_q.values()) g = static_cast<T>(g * inv_levels);
      grads.push_back(nn::l2_normalize_backward(r.grad_q, z[l]));
    }
  }
  if (options.compute_gradients) {
    nn::zero_grads(pair.query().params());
    pair.query().backward_embed(grads);
  }
  if (options.enqueue_keys) {
    for (std::size_t l = 0; l < levels; ++l) queues[l].enqueue(keys[l]);
  }
  return result;
}

#define INSLOC_INSTANTIATE_CONTRASTIVE(T)                                     \
  template class MemoryQueue<T>;                                              \
  template InfoNceResult<T> info_nce_loss<T>(                                 \
      const Tensor<T>&, const Tensor<T>&, const MemoryQueue<T>&, double);     \
  template void ema_update<T>(const nn::ParamRefs<T>&,                        \
                              const nn::ParamRefs<T>&, double);               \
  template class EncoderPair<T>;                                              \
  template StepLoss insloc_step_loss<T>(EncoderPair<T>&,                      \
                                        const StepInputs<T>&,                 \
                                        std::vector<MemoryQueue<T>>&, double, \
                                        StepOptions);

INSLOC_INSTANTIATE_CONTRASTIVE(float)
INSLOC_INSTANTIATE_CONTRASTIVE(double)

#undef INSLOC_INSTANTIATE_CONTRASTIVE

}  // namespace insloc
