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

#include "insloc/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <utility>

#include "insloc/contrastive.hpp"
#include "insloc/oracles.hpp"
#include "insloc/probes.hpp"

namespace insloc {
namespace {

using TensorD = Tensor<double>;

TensorD random_tensor(const Shape& shape, Rng& rng, double lo = -1.0,
                      double hi = 1.0) {
  TensorD t(shape);
  for (auto& v : t.values()) v = uniform(rng, lo, hi);
  return t;
}

// Values bounded away from zero, for kinked ops.
TensorD away_from_zero(const Shape& shape, Rng& rng) {
  TensorD t(shape);
  for (auto& v : t.values()) {
    const double m = uniform(rng, 0.1, 1.0);
    v = bernoulli(rng, 0.5) ? m : -m;
  }
  return t;
}

TensorD unit_rows(std::size_t n, std::size_t d, Rng& rng) {
  return nn::l2_normalize(random_tensor({n, d}, rng));
}

std::vector<double> flatten(const std::vector<const TensorD*>& ts) {
  std::vector<double> out;
  for (const auto* t : ts) out.insert(out.end(), t->values().begin(), t->values().end());
  return out;
}

// Relative error between analytic gradients and central differences of
// `loss` with respect to every element of `wrt`.
double fd_error(const std::vector<TensorD*>& wrt,
                const std::vector<const TensorD*>& analytic,
                const std::function<double()>& loss, double h = 1e-6) {
  const auto numeric =
      oracle::central_difference(oracle::coordinates(wrt), loss, h);
  return oracle::relative_error(flatten(analytic), numeric);
}

double weighted_sum(const TensorD& y, const TensorD& g) { return dot(y, g); }

BBox random_box(Rng& rng, double extent) {
  const double x1 = uniform(rng, -0.2 * extent, 0.9 * extent);
  const double y1 = uniform(rng, -0.2 * extent, 0.9 * extent);
  const double w = uniform(rng, 0.05 * extent, 0.8 * extent);
  const double h = uniform(rng, 0.05 * extent, 0.8 * extent);
  return {x1, y1, x1 + w, y1 + h};
}

struct RoiCase {
  TensorD fmap;
  BBox box;
  std::size_t batch = 0;
  RoiSpec spec;
};

RoiCase random_roi_case(Rng& rng) {
  RoiCase c;
  const auto B = static_cast<std::size_t>(uniform_int(rng, 1, 2));
  const auto C = static_cast<std::size_t>(uniform_int(rng, 1, 3));
  const auto H = static_cast<std::size_t>(uniform_int(rng, 3, 12));
  const auto W = static_cast<std::size_t>(uniform_int(rng, 3, 12));
  c.fmap = random_tensor({B, C, H, W}, rng);
  c.batch = static_cast<std::size_t>(uniform_int(rng, 0, long(B) - 1));
  const double scales[] = {1.0, 0.5, 0.25, 0.125, 1.0 / 16.0};
  c.spec.spatial_scale = scales[uniform_int(rng, 0, 4)];
  c.spec.output_size = static_cast<std::size_t>(uniform_int(rng, 1, 7));
  c.spec.sampling = static_cast<std::size_t>(uniform_int(rng, 1, 3));
  c.spec.aligned = bernoulli(rng, 0.5);
  c.box = random_box(rng, double(std::max(H, W)) / c.spec.spatial_scale);
  return c;
}

CheckResult roi_dense_oracle(Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const RoiCase c = random_roi_case(rng);
    const TensorD fast = roi_align_forward(c.fmap, c.box, c.batch, c.spec);
    const TensorD ref = oracle::dense_roi_align(c.fmap, c.box, c.batch, c.spec);
    worst = std::max(worst, max_abs_diff(fast, ref));
  }
  return {"roialign-dense-oracle", false, worst, 1e-6, ""};
}

CheckResult roi_adjointness(Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const RoiCase c = random_roi_case(rng);
    const TensorD y = roi_align_forward(c.fmap, c.box, c.batch, c.spec);
    const TensorD g = random_tensor(y.shape(), rng);
    const TensorD gx =
        roi_align_backward(g, c.box, c.batch, c.spec, c.fmap.shape());
    const double lhs = dot(y, g), rhs = dot(c.fmap, gx);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  return {"roialign-adjointness", false, worst, 1e-6, ""};
}

CheckResult fd_roialign(Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    RoiCase c = random_roi_case(rng);
    const TensorD g = random_tensor(
        {c.fmap.dim(1), c.spec.output_size, c.spec.output_size}, rng);
    const TensorD gx =
        roi_align_backward(g, c.box, c.batch, c.spec, c.fmap.shape());
    worst = std::max(worst, fd_error({&c.fmap}, {&gx}, [&] {
      return weighted_sum(roi_align_forward(c.fmap, c.box, c.batch, c.spec), g);
    }));
  }
  return {"fd-roialign", false, worst, 1e-6, ""};
}

CheckResult conv_naive_oracle(Rng& rng) {
  double worst = 0.0;
  for (std::size_t stride : {1, 2}) {
    for (std::size_t pad : {0, 1}) {
      const TensorD x = random_tensor({2, 3, 7, 6}, rng);
      const TensorD w = random_tensor({4, 3, 3, 3}, rng);
      const TensorD b = random_tensor({4}, rng);
      const TensorD fast = nn::conv2d_forward(x, w, b, {3, stride, pad});
      worst = std::max(worst,
                       max_abs_diff(fast, oracle::naive_conv2d(x, w, b, stride, pad)));
    }
  }
  return {"conv2d-naive-oracle", false, worst, 1e-10, ""};
}

CheckResult fd_conv(Rng& rng) {
  double worst = 0.0;
  for (std::size_t stride : {1, 2}) {
    TensorD x = random_tensor({2, 2, 6, 5}, rng);
    TensorD w = random_tensor({3, 2, 3, 3}, rng);
    TensorD b = random_tensor({3}, rng);
    const nn::Conv2dGeometry geom{3, stride, 1};
    const TensorD y = nn::conv2d_forward(x, w, b, geom);
    const TensorD g = random_tensor(y.shape(), rng);
    TensorD gw(w.shape()), gb(b.shape());
    const TensorD gx = nn::conv2d_backward(g, x, w, geom, gw, gb);
    worst = std::max(worst, fd_error({&x, &w, &b}, {&gx, &gw, &gb}, [&] {
      return weighted_sum(nn::conv2d_forward(x, w, b, geom), g);
    }));
  }
  return {"fd-conv2d", false, worst, 1e-6, ""};
}

CheckResult fd_linear(Rng& rng) {
  TensorD x = random_tensor({3, 5}, rng);
  TensorD w = random_tensor({4, 5}, rng);
  TensorD b = random_tensor({4}, rng);
  const TensorD g = random_tensor({3, 4}, rng);
  TensorD gw(w.shape()), gb(b.shape());
  const TensorD gx = nn::linear_backward(g, x, w, gw, gb);
  const double err = fd_error({&x, &w, &b}, {&gx, &gw, &gb}, [&] {
    return weighted_sum(nn::linear_forward(x, w, b), g);
  });
  return {"fd-linear", false, err, 1e-6, ""};
}

CheckResult fd_relu(Rng& rng) {
  TensorD x = away_from_zero({4, 6}, rng);
  const TensorD g = random_tensor(x.shape(), rng);
  const TensorD gx = nn::relu_backward(g, x);
  const double err = fd_error({&x}, {&gx}, [&] {
    return weighted_sum(nn::relu_forward(x), g);
  });
  return {"fd-relu", false, err, 1e-6, ""};
}

CheckResult fd_l2_normalize(Rng& rng) {
  TensorD x = random_tensor({4, 6}, rng);
  const TensorD g = random_tensor(x.shape(), rng);
  const TensorD gx = nn::l2_normalize_backward(g, x);
  const double err = fd_error({&x}, {&gx}, [&] {
    return weighted_sum(nn::l2_normalize(x), g);
  });
  return {"fd-l2-normalize", false, err, 1e-6, ""};
}

CheckResult fd_pool_ops(Rng& rng) {
  double worst = 0.0;
  {
    TensorD x = random_tensor({2, 3, 4, 6}, rng);
    nn::MaxPool2d<double> pool;
    const TensorD y = pool.forward(x);
    const TensorD g = random_tensor(y.shape(), rng);
    const TensorD gx = pool.backward(g);
    worst = std::max(worst, fd_error({&x}, {&gx}, [&] {
      nn::MaxPool2d<double> p;
      return weighted_sum(p.forward(x), g);
    }));
  }
  {
    TensorD x = random_tensor({2, 3, 4, 5}, rng);
    const TensorD y = nn::global_avg_pool_forward(x);
    const TensorD g = random_tensor(y.shape(), rng);
    const TensorD gx = nn::global_avg_pool_backward(g, x.shape());
    worst = std::max(worst, fd_error({&x}, {&gx}, [&] {
      return weighted_sum(nn::global_avg_pool_forward(x), g);
    }));
  }
  {
    TensorD x = random_tensor({2, 2, 3, 4}, rng);
    const TensorD y = nn::upsample_nearest2x_forward(x);
    const TensorD g = random_tensor(y.shape(), rng);
    const TensorD gx = nn::upsample_nearest2x_backward(g);
    worst = std::max(worst, fd_error({&x}, {&gx}, [&] {
      return weighted_sum(nn::upsample_nearest2x_forward(x), g);
    }));
  }
  {
    TensorD x = random_tensor({2, 3, 4, 4}, rng);
    nn::ChannelStandardize<double> norm;
    const TensorD y = norm.forward(x);
    const TensorD g = random_tensor(y.shape(), rng);
    const TensorD gx = norm.backward(g);
    worst = std::max(worst, fd_error({&x}, {&gx}, [&] {
      nn::ChannelStandardize<double> n;
      return weighted_sum(n.forward(x), g);
    }));
  }
  return {"fd-pool-upsample-norm", false, worst, 1e-6, ""};
}

CheckResult fd_mlp_head(Rng& rng) {
  nn::MlpHead<double> head(6, 8, 5);
  head.init(rng);
  TensorD x = random_tensor({3, 6}, rng);
  const TensorD g = random_tensor({3, 5}, rng);
  head.forward(x);
  nn::zero_grads(head.params());
  const TensorD gx = head.backward(g);
  std::vector<TensorD*> wrt{&x};
  std::vector<const TensorD*> analytic{&gx};
  for (auto* p : head.params()) {
    wrt.push_back(&p->value);
    analytic.push_back(&p->grad);
  }
  const double err = fd_error(wrt, analytic, [&] {
    return weighted_sum(head.forward(x), g);
  });
  return {"fd-mlp-head", false, err, 1e-6, ""};
}

CheckResult fd_info_nce(Rng& rng) {
  MemoryQueue<double> queue(12, 6);
  queue.fill_random(rng);
  TensorD q = unit_rows(4, 6, rng);
  const TensorD k = unit_rows(4, 6, rng);
  const TensorD gq = info_nce_loss(q, k, queue, 0.2).grad_q;
  const double err = fd_error({&q}, {&gq}, [&] {
    return info_nce_loss(q, k, queue, 0.2).loss;
  });
  return {"fd-infonce", false, err, 1e-6, ""};
}

CheckResult fd_probe_loss(Rng& rng) {
  TensorD x = random_tensor({10, 4}, rng);
  TensorD w = random_tensor({4, 3}, rng, -0.5, 0.5);
  TensorD b = random_tensor({3}, rng, -0.5, 0.5);
  std::vector<std::size_t> y;
  for (int i = 0; i < 10; ++i) y.push_back(static_cast<std::size_t>(i % 3));
  const ProbeLoss pl = probe_loss(x, y, w, b);
  const double err = fd_error({&w, &b}, {&pl.grad_weight, &pl.grad_bias},
                              [&] { return probe_loss(x, y, w, b).loss; });
  return {"fd-probe-loss", false, err, 1e-6, ""};
}

// Whole contrastive step in 64-bit on a tiny encoder.
CheckResult fd_end_to_end(Rng& rng, BackboneVariant variant) {
  BackboneConfig cfg;
  cfg.variant = variant;
  std::size_t side = 16;
  if (variant == BackboneVariant::kC4) {
    cfg.widths = {3, 4};
  } else {
    cfg.widths = {2, 3, 3, 3};
    cfg.fpn_width = 3;
    cfg.box_fc_dim = 6;
    side = 32;
  }
  cfg.head_hidden = 6;
  cfg.head_dim = 5;
  cfg.roi_output = 3;
  EncoderPair<double> pair(cfg, 0.9);
  pair.init(rng);
  // Decouple the key encoder from the query encoder.
  for (auto* p : pair.key().params()) {
    for (auto& v : p->value.values()) v += uniform(rng, -0.05, 0.05);
  }
  std::vector<MemoryQueue<double>> queues;
  for (std::size_t l = 0; l < cfg.num_levels(); ++l) {
    queues.emplace_back(8, cfg.head_dim);
    queues.back().fill_random(rng);
  }
  StepInputs<double> in;
  const std::size_t B = 2;
  in.query_images = random_tensor({B, 3, side, side}, rng, 0.0, 1.0);
  in.key_images = random_tensor({B, 3, side, side}, rng, 0.0, 1.0);
  for (std::size_t b = 0; b < B; ++b) {
    const double s = double(side);
    in.query_boxes.push_back({uniform(rng, 0, 0.3 * s), uniform(rng, 0, 0.3 * s),
                              uniform(rng, 0.6 * s, s), uniform(rng, 0.6 * s, s)});
    in.key_boxes.push_back({uniform(rng, 0, 0.3 * s), uniform(rng, 0, 0.3 * s),
                            uniform(rng, 0.6 * s, s), uniform(rng, 0.6 * s, s)});
  }
  insloc_step_loss(pair, in, queues, 0.2, {true, false});
  std::vector<TensorD*> wrt;
  std::vector<TensorD> analytic_copy;
  for (auto* p : pair.query().params()) {
    wrt.push_back(&p->value);
    analytic_copy.push_back(p->grad);
  }
  std::vector<const TensorD*> analytic;
  for (const auto& g : analytic_copy) analytic.push_back(&g);
  const double err = fd_error(wrt, analytic, [&] {
    return insloc_step_loss(pair, in, queues, 0.2, {false, false}).loss;
  });
  return {std::string("fd-end-to-end-") +
              (variant == BackboneVariant::kC4 ? "c4" : "fpn"),
          false, err, 1e-6, ""};
}

// Training precision: float encoder pair, central differences on the
// backbone coordinates with the largest gradients (small ones drown in
// 32-bit rounding).
CheckResult fd_end_to_end_f32(Rng& rng) {
  BackboneConfig cfg;
  cfg.widths = {4, 6};
  cfg.head_hidden = 8;
  cfg.head_dim = 6;
  cfg.roi_output = 3;
  EncoderPair<float> pair(cfg, 0.9);
  pair.init(rng);
  for (auto* p : pair.key().params()) {
    for (auto& v : p->value.values()) v += static_cast<float>(uniform(rng, -0.05, 0.05));
  }
  std::vector<MemoryQueue<float>> queues{MemoryQueue<float>(8, cfg.head_dim)};
  queues[0].fill_random(rng);
  StepInputs<float> in;
  in.query_images = random_tensor({2, 3, 16, 16}, rng, 0.0, 1.0).cast<float>();
  in.key_images = random_tensor({2, 3, 16, 16}, rng, 0.0, 1.0).cast<float>();
  in.query_boxes = {{1, 2, 14, 13}, {0, 0, 12, 16}};
  in.key_boxes = {{3, 1, 16, 15}, {2, 2, 14, 14}};
  insloc_step_loss(pair, in, queues, 0.2, {true, false});

  std::vector<std::pair<nn::Parameter<float>*, std::size_t>> coords;
  for (auto* p : pair.query().backbone().params()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) coords.emplace_back(p, i);
  }
  std::sort(coords.begin(), coords.end(), [](const auto& a, const auto& b) {
    return std::abs(a.first->grad[a.second]) > std::abs(b.first->grad[b.second]);
  });
  coords.resize(std::min<std::size_t>(coords.size(), 10));
  std::vector<double> analytic, numeric;
  const float h = 2e-3f;
  for (auto [p, i] : coords) {
    analytic.push_back(p->grad[i]);
    const float saved = p->value[i];
    const float hi = saved + h, lo = saved - h;
    p->value[i] = hi;
    const double up = insloc_step_loss(pair, in, queues, 0.2, {false, false}).loss;
    p->value[i] = lo;
    const double down = insloc_step_loss(pair, in, queues, 0.2, {false, false}).loss;
    p->value[i] = saved;
    numeric.push_back((up - down) / (double(hi) - double(lo)));
  }
  return {"fd-end-to-end-c4-f32", false,
          oracle::relative_error(analytic, numeric), 1e-3, ""};
}

CheckResult info_nce_closed_form() {
  const std::size_t D = 9;
  TensorD q({1, D});
  q.at(0, 0) = 1.0;
  MemoryQueue<double> queue(8, D);
  TensorD negatives({8, D});
  for (std::size_t i = 0; i < 8; ++i) negatives.at(i, i + 1) = 1.0;
  queue.enqueue(negatives);
  const double loss = info_nce_loss(q, q, queue, 0.2).loss;
  const double expected = -std::log(std::exp(5.0) / (std::exp(5.0) + 8.0));
  return {"infonce-closed-form", false, std::abs(loss - expected), 1e-5, ""};
}

CheckResult info_nce_uniform_limit(Rng& rng) {
  MemoryQueue<double> queue(16, 8);
  queue.fill_random(rng);
  const TensorD q = unit_rows(3, 8, rng);
  const TensorD k = unit_rows(3, 8, rng);
  const double loss = info_nce_loss(q, k, queue, 1e6).loss;
  return {"infonce-uniform-limit", false, std::abs(loss - std::log(17.0)), 1e-3,
          ""};
}

// Every gt box on an 4-pixel lattice: candidate sets match a brute-force
// IoU scan and every augmented box clears the threshold.
CheckResult anchor_iou_scan(Rng& rng) {
  const int side = 64;
  const AnchorConfig cfg;
  const auto anchors = clipped_anchors(cfg, side, side);
  double violations = 0.0;
  for (int x1 = 0; x1 < side; x1 += 4)
    for (int y1 = 0; y1 < side; y1 += 4)
      for (int w = 8; x1 + w <= side; w += 8)
        for (int h = 8; y1 + h <= side; h += 8) {
          const BBox gt{double(x1), double(y1), double(x1 + w), double(y1 + h)};
          std::vector<std::size_t> brute;
          for (std::size_t i = 0; i < anchors.size(); ++i) {
            if (oracle::box_iou(gt, anchors[i]) > 0.5) brute.push_back(i);
          }
          if (brute != anchor_candidates(gt, anchors, 0.5)) violations += 1;
          const BBox aug = augment_bbox(gt, anchors, 0.5, rng);
          if (!(aug == gt || oracle::box_iou(aug, gt) > 0.5)) violations += 1;
        }
  return {"anchor-iou-scan", false, violations, 0.5, ""};
}

}  // namespace

std::vector<CheckResult> run_selfcheck(std::uint64_t seed) {
  Rng rng = make_stream(seed, "selfcheck");
  std::vector<std::function<CheckResult()>> checks = {
      [&] { return roi_dense_oracle(rng); },
      [&] { return roi_adjointness(rng); },
      [&] { return fd_roialign(rng); },
      [&] { return conv_naive_oracle(rng); },
      [&] { return fd_conv(rng); },
      [&] { return fd_linear(rng); },
      [&] { return fd_relu(rng); },
      [&] { return fd_l2_normalize(rng); },
      [&] { return fd_pool_ops(rng); },
      [&] { return fd_mlp_head(rng); },
      [&] { return fd_info_nce(rng); },
      [&] { return fd_probe_loss(rng); },
      [&] { return fd_end_to_end(rng, BackboneVariant::kC4); },
      [&] { return fd_end_to_end(rng, BackboneVariant::kFpn); },
      [&] { return fd_end_to_end_f32(rng); },
      [] { return info_nce_closed_form(); },
      [&] { return info_nce_uniform_limit(rng); },
      [&] { return anchor_iou_scan(rng); },
  };
  // Names in the same order, for reporting checks that throw.
  static const char* const kNames[] = {
      "roialign-dense-oracle", "roialign-adjointness", "fd-roialign",
      "conv2d-naive-oracle",   "fd-conv2d",            "fd-linear",
      "fd-relu",               "fd-l2-normalize",      "fd-pool-upsample-norm",
      "fd-mlp-head",           "fd-infonce",           "fd-probe-loss",
      "fd-end-to-end-c4",      "fd-end-to-end-fpn",    "fd-end-to-end-c4-f32",
      "infonce-closed-form",
      "infonce-uniform-limit", "anchor-iou-scan"};
  std::vector<CheckResult> out;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    CheckResult r;
    try {
      r = checks[i]();
      r.pass = std::isfinite(r.error) && r.error < r.tolerance;
    } catch (const std::exception& e) {
      r.name = kNames[i];
      r.pass = false;
      r.error = std::numeric_limits<double>::infinity();
      r.detail = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_check(const CheckResult& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s  %-22s error=%.3e tol=%.1e",
                r.pass ? "PASS" : "FAIL", r.name.c_str(), r.error, r.tolerance);
  std::string s(buf);
  if (!r.detail.empty()) s += "  (" + r.detail + ")";
  return s;
}

}  // namespace insloc
