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

#include "insloc/trainer.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>
#include <thread>

#include "insloc/errors.hpp"

namespace insloc {

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kInslocC4:
      return "insloc-c4";
    case TrainMode::kInslocFpn:
      return "insloc-fpn";
    case TrainMode::kBaselineHolistic:
      return "baseline-holistic";
  }
  return "?";
}

TrainMode parse_train_mode(std::string_view name) {
  if (name == "insloc-c4") return TrainMode::kInslocC4;
  if (name == "insloc-fpn") return TrainMode::kInslocFpn;
  if (name == "baseline-holistic") return TrainMode::kBaselineHolistic;
  throw InvalidArgument("unknown mode '" + std::string(name) +
                        "' (expected insloc-c4, insloc-fpn or "
                        "baseline-holistic)");
}

BackboneVariant variant_for(TrainMode mode) {
  return mode == TrainMode::kInslocFpn ? BackboneVariant::kFpn
                                       : BackboneVariant::kC4;
}

TrainConfig TrainConfig::desk(TrainMode mode) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.backbone.variant = variant_for(mode);
  cfg.composition = CompositionParams::defaults_for(variant_for(mode));
  return cfg;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(lr > 0.0)) throw InvalidArgument("lr must be > 0");
  if (!(sgd_momentum >= 0.0 && sgd_momentum < 1.0)) {
    throw InvalidArgument("sgd_momentum must lie in [0,1)");
  }
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be >= 0");
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be > 0");
  if (queue_size < batch_size) {
    throw InvalidArgument("queue_size must be >= batch_size");
  }
  if (!(ema_momentum >= 0.0 && ema_momentum <= 1.0)) {
    throw InvalidArgument("ema_momentum must lie in [0,1]");
  }
  if (gallery_size < 3) throw InvalidArgument("gallery_size must be >= 3");
  if (!(iou_threshold >= 0.0 && iou_threshold < 1.0)) {
    throw InvalidArgument("iou_threshold must lie in [0,1)");
  }
  if (backbone.variant != variant_for(mode)) {
    throw InvalidArgument("mode " + to_string(mode) + " requires the " +
                          to_string(variant_for(mode)) + " backbone");
  }
  backbone.validate();
  composition.validate();
  augment.validate();
  anchors.validate();
  const auto s = static_cast<std::size_t>(composition.composite_size);
  if (s % backbone.required_divisor() != 0) {
    throw InvalidArgument("composite size " + std::to_string(s) +
                          " must be divisible by " +
                          std::to_string(backbone.required_divisor()));
  }
}

std::uint64_t config_hash(const TrainConfig& c) {
  std::ostringstream os;
  os.precision(17);
  auto pair = [&](const char* k, const std::pair<double, double>& p) {
    os << k << '=' << p.first << ',' << p.second << '\n';
  };
  auto list = [&](const char* k, const auto& v) {
    os << k << '=';
    for (const auto& x : v) os << x << ',';
    os << '\n';
  };
  os << "mode=" << to_string(c.mode) << '\n'
     << "steps=" << c.steps << '\n'
     << "batch_size=" << c.batch_size << '\n'
     << "lr=" << c.lr << '\n'
     << "sgd_momentum=" << c.sgd_momentum << '\n'
     << "weight_decay=" << c.weight_decay << '\n'
     << "temperature=" << c.temperature << '\n'
     << "queue_size=" << c.queue_size << '\n'
     << "queue_random_init=" << c.queue_random_init << '\n'
     << "ema_momentum=" << c.ema_momentum << '\n'
     << "seed=" << c.seed << '\n'
     << "gallery_size=" << c.gallery_size << '\n'
     << "box_aug=" << c.box_aug << '\n'
     << "iou_threshold=" << c.iou_threshold << '\n';
  const auto& b = c.backbone;
  list("widths", b.widths);
  os << "fpn_width=" << b.fpn_width << '\n'
     << "box_fc_dim=" << b.box_fc_dim << '\n'
     << "head_hidden=" << b.head_hidden << '\n'
     << "head_dim=" << b.head_dim << '\n'
     << "channel_norm=" << b.channel_norm << '\n'
     << "roi=" << b.roi_output << ',' << b.roi_sampling << ',' << b.roi_aligned
     << '\n'
     << "composite_size=" << c.composition.composite_size << '\n';
  pair("scale", c.composition.scale);
  pair("aspect", c.composition.aspect);
  const auto& a = c.augment;
  os << "view_size=" << a.view_size << '\n';
  pair("crop_area", a.crop_area);
  pair("crop_aspect", a.crop_aspect);
  os << "jitter=" << a.brightness << ',' << a.contrast << ',' << a.saturation
     << ',' << a.jitter_p << '\n'
     << "grayscale_p=" << a.grayscale_p << '\n'
     << "blur_p=" << a.blur_p << '\n';
  pair("blur_sigma", a.blur_sigma);
  os << "flip_p=" << a.flip_p << '\n';
  list("anchor_strides", c.anchors.strides);
  list("anchor_scales", c.anchors.scales);
  list("anchor_ratios", c.anchors.aspect_ratios);
  return fnv1a64(os.str());
}

double cosine_lr(std::size_t step, std::size_t total_steps, double base_lr) {
  if (total_steps == 0 || step > total_steps) {
    throw InvalidArgument("cosine_lr: step " + std::to_string(step) +
                          " outside [0, " + std::to_string(total_steps) + "]");
  }
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * t));
}

template <typename T>
void sgd_step(const nn::ParamRefs<T>& params, std::vector<Tensor<T>>& velocity,
              double lr, double momentum, double weight_decay) {
  if (velocity.empty()) {
    for (const auto* p : params) velocity.emplace_back(p->value.shape());
  }
  if (velocity.size() != params.size()) {
    throw ShapeError("sgd_step: " + std::to_string(velocity.size()) +
                     " velocity buffers for " + std::to_string(params.size()) +
                     " parameters");
  }
  const T tlr = static_cast<T>(lr), tm = static_cast<T>(momentum),
          twd = static_cast<T>(weight_decay);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto* p = params[i];
    require_same_shape(p->value, p->grad, "sgd_step grad " + p->name);
    require_same_shape(p->value, velocity[i], "sgd_step velocity " + p->name);
    T* theta = p->value.data();
    const T* g = p->grad.data();
    T* v = velocity[i].data();
    for (std::size_t j = 0; j < p->value.size(); ++j) {
      const T gj = g[j] + twd * theta[j];
      v[j] = tm * v[j] + gj;
      theta[j] -= tlr * v[j];
    }
  }
}

template void sgd_step<float>(const nn::ParamRefs<float>&,
                              std::vector<Tensor<float>>&, double, double,
                              double);
template void sgd_step<double>(const nn::ParamRefs<double>&,
                               std::vector<Tensor<double>>&, double, double,
                               double);

PreparedSample prepare_sample(const TrainConfig& cfg, const Gallery& gallery,
                              const std::vector<BBox>& anchors,
                              std::size_t instance_id, std::uint64_t seed) {
  Rng rng(seed);
  PreparedSample s;
  s.instance_id = instance_id;
  if (cfg.mode == TrainMode::kBaselineHolistic) {
    // Two plain views of the whole instance, pooled over the full frame.
    AugmentParams aug = cfg.augment;
    aug.view_size = cfg.composition.composite_size;
    const Image& src = gallery.images.at(instance_id);
    s.query = augment_view(src, aug, rng);
    s.key = augment_view(src, aug, rng);
    const double side = cfg.composition.composite_size;
    s.query_gt_box = s.key_box = s.query_box = BBox{0, 0, side, side};
    return s;
  }
  ViewPair pair =
      make_pair(gallery, instance_id, cfg.augment, cfg.composition, rng);
  s.query = std::move(pair.query.image);
  s.key = std::move(pair.key.image);
  s.query_gt_box = pair.query.bbox;
  s.key_box = pair.key.bbox;
  s.query_box = cfg.box_aug ? augment_bbox(s.query_gt_box, anchors,
                                           cfg.iou_threshold, rng)
                            : s.query_gt_box;
  return s;
}

std::size_t data_threads() {
  const char* env = std::getenv("INSLOC_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) {
    throw InvalidArgument("INSLOC_THREADS must be a positive integer, got '" +
                          std::string(env) + "'");
  }
  return static_cast<std::size_t>(std::min<long>(v, 64));
}

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_(cfg), pair_(cfg.backbone, cfg.ema_momentum) {
  cfg_.validate();
  const int side = cfg_.composition.composite_size;
  gallery_ = generate_gallery(cfg_.gallery_size, side, cfg_.seed);
  anchors_ = clipped_anchors(cfg_.anchors, side, side);
  Rng init = make_stream(cfg_.seed, "init");
  pair_.init(init);
  Rng queue_rng = make_stream(cfg_.seed, "queue");
  for (std::size_t l = 0; l < cfg_.backbone.num_levels(); ++l) {
    queues_.emplace_back(cfg_.queue_size, cfg_.backbone.head_dim);
    if (cfg_.queue_random_init) queues_.back().fill_random(queue_rng);
  }
  for (const auto* p : pair_.query().params()) {
    velocity_.emplace_back(p->value.shape());
  }
  data_rng_ = make_stream(cfg_.seed, "data");
}

std::vector<PreparedSample> Trainer::prepare_batch(
    const std::vector<std::size_t>& ids,
    const std::vector<std::uint64_t>& seeds) const {
  const std::size_t n = ids.size();
  std::vector<PreparedSample> out(n);
  const std::size_t workers = std::min(data_threads(), n);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      out[b] = prepare_sample(cfg_, gallery_, anchors_, ids[b], seeds[b]);
    }
  };
  if (workers <= 1) {
    work(0, n);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        work(w * chunk, std::min(n, (w + 1) * chunk));
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

StepRecord Trainer::train_step() {
  if (step_ >= cfg_.steps) {
    throw InvalidArgument("training already finished at step " +
                          std::to_string(step_));
  }
  StepRecord rec;
  rec.step = step_;
  try {
    rec.lr = cosine_lr(step_, cfg_.steps, cfg_.lr);
    const std::size_t B = cfg_.batch_size;
    std::vector<std::size_t> ids(B);
    std::vector<std::uint64_t> seeds(B);
    for (std::size_t b = 0; b < B; ++b) {
      ids[b] = static_cast<std::size_t>(uniform_int(
          data_rng_, 0, static_cast<std::int64_t>(cfg_.gallery_size) - 1));
      seeds[b] = data_rng_();
    }
    const std::vector<PreparedSample> batch = prepare_batch(ids, seeds);

    StepInputs<float> in;
    std::vector<const Image*> qi, ki;
    for (const auto& s : batch) {
      qi.push_back(&s.query);
      ki.push_back(&s.key);
      in.query_boxes.push_back(s.query_box);
      in.key_boxes.push_back(s.key_box);
    }
    in.query_images = images_to_tensor<float>(qi);
    in.key_images = images_to_tensor<float>(ki);

    const StepLoss loss =
        insloc_step_loss(pair_, in, queues_, cfg_.temperature);
    sgd_step(pair_.query().params(), velocity_, rec.lr, cfg_.sgd_momentum,
             cfg_.weight_decay);
    pair_.momentum_update();
    rec.loss = loss.loss;
    rec.positive_similarity = loss.positive_similarity;
  } catch (const Error& e) {
    throw Error("training step " + std::to_string(step_) + ": " + e.what());
  }
  if (!std::isfinite(rec.loss)) {
    throw Error("training step " + std::to_string(step_) +
                ": loss is not finite");
  }
  ++step_;
  return rec;
}

std::vector<StepRecord> Trainer::run(std::size_t until, std::ostream* metrics) {
  until = std::min(until, cfg_.steps);
  std::vector<StepRecord> trace;
  while (step_ < until) {
    trace.push_back(train_step());
    if (metrics != nullptr) {
      const auto& r = trace.back();
      *metrics << r.step << '\t' << r.loss << '\t' << r.lr << '\n';
    }
  }
  if (metrics != nullptr) metrics->flush();
  return trace;
}

Checkpoint Trainer::checkpoint() {
  Checkpoint c;
  c.config_hash = config_hash(cfg_);
  c.step = step_;
  const auto qp = pair_.query().params();
  const auto kp = pair_.key().params();
  for (const auto* p : qp) c.blobs.push_back(Blob::from_tensor("query/" + p->name, p->value));
  for (const auto* p : kp) c.blobs.push_back(Blob::from_tensor("key/" + p->name, p->value));
  for (std::size_t i = 0; i < qp.size(); ++i) {
    c.blobs.push_back(Blob::from_tensor("velocity/" + qp[i]->name, velocity_[i]));
  }
  for (std::size_t l = 0; l < queues_.size(); ++l) {
    const std::string prefix = "queue" + std::to_string(l) + "/";
    c.blobs.push_back(Blob::from_tensor(prefix + "storage", queues_[l].storage()));
    c.blobs.push_back(Blob::from_words(
        prefix + "state", {static_cast<std::uint32_t>(queues_[l].cursor()),
                           static_cast<std::uint32_t>(queues_[l].filled())}));
  }
  c.blobs.push_back(Blob::from_words("rng/data", save_rng_state(data_rng_)));
  return c;
}

void Trainer::restore(const Checkpoint& c) {
  if (c.config_hash != config_hash(cfg_)) {
    throw InvalidArgument("checkpoint config hash does not match this run's "
                          "configuration");
  }
  if (c.step > cfg_.steps) {
    throw InvalidArgument("checkpoint step " + std::to_string(c.step) +
                          " exceeds configured steps");
  }
  auto load = [&](const std::string& name, Tensor<float>& dst) {
    Tensor<float> t = c.blob(name).to_tensor();
    require_same_shape(t, dst, "checkpoint blob " + name);
    dst = std::move(t);
  };
  const auto qp = pair_.query().params();
  const auto kp = pair_.key().params();
  for (auto* p : qp) load("query/" + p->name, p->value);
  for (auto* p : kp) load("key/" + p->name, p->value);
  for (std::size_t i = 0; i < qp.size(); ++i) {
    load("velocity/" + qp[i]->name, velocity_[i]);
  }
  for (std::size_t l = 0; l < queues_.size(); ++l) {
    const std::string prefix = "queue" + std::to_string(l) + "/";
    Tensor<float> storage = c.blob(prefix + "storage").to_tensor();
    const Blob& state = c.blob(prefix + "state");
    if (state.words.size() != 2) {
      throw InvalidArgument("checkpoint blob " + prefix + "state is malformed");
    }
    queues_[l].restore(std::move(storage), state.words[0], state.words[1]);
  }
  data_rng_ = load_rng_state(c.blob("rng/data").words);
  step_ = c.step;
}

}  // namespace insloc
