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

#include "insloc/probes.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "insloc/errors.hpp"

namespace insloc {
namespace {

using MatrixRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

std::size_t grid_side(std::size_t M) {
  const auto g = static_cast<std::size_t>(std::llround(std::sqrt(double(M))));
  if (M == 0 || g * g != M) {
    throw InvalidArgument("patch count M=" + std::to_string(M) +
                          " is not a positive perfect square");
  }
  return g;
}

void check_labels(const Tensor<double>& x, const std::vector<std::size_t>& labels,
                  std::size_t num_classes) {
  require_rank(x, 2, "probe features");
  if (labels.size() != x.dim(0)) {
    throw ShapeError("probe: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(x.dim(0)) + " rows");
  }
  for (auto y : labels) {
    if (y >= num_classes) {
      throw InvalidArgument("probe: label " + std::to_string(y) +
                            " out of range for " + std::to_string(num_classes) +
                            " classes");
    }
  }
}

// Rows standardized with the classifier's statistics.
MatrixRM standardized(const LinearClassifier& clf, const Tensor<double>& x) {
  const std::size_t n = x.dim(0), D = x.dim(1);
  if (D != clf.mean.size()) {
    throw ShapeError("probe: feature width " + std::to_string(D) +
                     " vs classifier width " + std::to_string(clf.mean.size()));
  }
  MatrixRM z(n, D);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < D; ++d)
      z(i, d) = (x.at(i, d) - clf.mean[d]) * clf.inv_std[d];
  if (!clf.whiten.empty()) {
    z = z * ConstMapRM(clf.whiten.data(), D, D);
  }
  return z;
}

Tensor<double> to_tensor(const MatrixRM& m) {
  Tensor<double> t({static_cast<std::size_t>(m.rows()),
                    static_cast<std::size_t>(m.cols())});
  std::copy(m.data(), m.data() + m.size(), t.data());
  return t;
}

}  // namespace

void ProbeConfig::validate() const {
  grid_side(M);
  if (steps < 1) throw InvalidArgument("probe steps must be >= 1");
  if (!(lr > 0.0)) throw InvalidArgument("probe lr must be > 0");
  if (!(whiten_ridge > 0.0)) throw InvalidArgument("probe whiten ridge must be > 0");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw InvalidArgument("probe eval fraction must lie in (0,1)");
  }
  if (cls_train_views < 1 || cls_eval_views < 1) {
    throw InvalidArgument("classification probe needs >= 1 view per split");
  }
  augment.validate();
}

std::vector<BBox> patch_grid(int image_h, int image_w, std::size_t M) {
  const std::size_t g = grid_side(M);
  if (image_h <= 0 || image_w <= 0) {
    throw InvalidArgument("patch_grid: image size must be positive");
  }
  std::vector<BBox> cells;
  cells.reserve(M);
  const double gd = static_cast<double>(g);
  for (std::size_t r = 0; r < g; ++r) {
    for (std::size_t c = 0; c < g; ++c) {
      // Edges computed as image * k / g so neighbours share them exactly.
      cells.push_back(BBox{image_w * double(c) / gd, image_h * double(r) / gd,
                           image_w * double(c + 1) / gd,
                           image_h * double(r + 1) / gd});
    }
  }
  return cells;
}

std::size_t probe_level(const BackboneConfig& cfg, const BBox& box) {
  if (cfg.variant != BackboneVariant::kFpn) return 0;
  return static_cast<std::size_t>(
      assign_fpn_level(box, static_cast<int>(cfg.num_levels())));
}

Tensor<double> embed_regions(Encoder<float>& encoder,
                             const std::vector<Region>& regions,
                             std::size_t images_per_batch) {
  if (regions.empty()) throw InvalidArgument("embed_regions: no regions");
  if (images_per_batch == 0) images_per_batch = 1;
  std::vector<const Image*> images;
  std::unordered_map<const Image*, std::size_t> slot;
  std::vector<std::size_t> image_of(regions.size());
  for (std::size_t r = 0; r < regions.size(); ++r) {
    auto [it, fresh] = slot.try_emplace(regions[r].image, images.size());
    if (fresh) images.push_back(regions[r].image);
    image_of[r] = it->second;
  }
  const std::size_t D = encoder.config().head_dim;
  Tensor<double> out({regions.size(), D});
  for (std::size_t first = 0; first < images.size(); first += images_per_batch) {
    const std::size_t last = std::min(images.size(), first + images_per_batch);
    const std::vector<const Image*> chunk(images.begin() + first,
                                          images.begin() + last);
    const auto maps = encoder.features(images_to_tensor<float>(chunk));
    std::vector<std::size_t> rows, batch_index;
    std::vector<BBox> boxes;
    for (std::size_t r = 0; r < regions.size(); ++r) {
      if (image_of[r] < first || image_of[r] >= last) continue;
      rows.push_back(r);
      boxes.push_back(regions[r].box);
      batch_index.push_back(image_of[r] - first);
    }
    const auto emb = encoder.embed_regions(maps, boxes, batch_index);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::size_t level = probe_level(encoder.config(), boxes[i]);
      for (std::size_t d = 0; d < D; ++d) {
        out.at(rows[i], d) = emb[level].at(i, d);
      }
    }
  }
  return out;
}

namespace {

// Crop of one grid cell resized back to the full image size.
Image isolated_patch(const Image& image, const BBox& cell) {
  const int x0 = static_cast<int>(std::lround(cell.x1));
  const int y0 = static_cast<int>(std::lround(cell.y1));
  const int x1 = static_cast<int>(std::lround(cell.x2));
  const int y1 = static_cast<int>(std::lround(cell.y2));
  return resize_region(image, x0, y0, std::max(1, x1 - x0),
                       std::max(1, y1 - y0), image.height(), image.width());
}

BBox full_box(const Image& image) {
  return BBox{0, 0, double(image.width()), double(image.height())};
}

}  // namespace

Tensor<double> extract_patch_embedding(Encoder<float>& encoder,
                                       const Image& image,
                                       std::size_t patch_index, std::size_t M,
                                       bool isolated) {
  const auto cells = patch_grid(image.height(), image.width(), M);
  if (patch_index >= M) {
    throw InvalidArgument("patch index " + std::to_string(patch_index) +
                          " out of range for M=" + std::to_string(M));
  }
  Tensor<double> row;
  if (isolated) {
    const Image crop = isolated_patch(image, cells[patch_index]);
    row = embed_regions(encoder, {Region{&crop, full_box(crop)}});
  } else {
    row = embed_regions(encoder, {Region{&image, cells[patch_index]}});
  }
  return row.reshaped({row.dim(1)});
}

std::vector<std::size_t> LinearClassifier::predict(const Tensor<double>& x) const {
  require_rank(x, 2, "probe predict");
  const MatrixRM z = standardized(*this, x);
  const ConstMapRM W(weight.data(), weight.dim(0), weight.dim(1));
  const MatrixRM logits =
      (z * W).rowwise() +
      Eigen::Map<const Eigen::RowVectorXd>(bias.data(), bias.size());
  std::vector<std::size_t> out(x.dim(0));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    out[i] = static_cast<std::size_t>(arg);
  }
  return out;
}

ProbeLoss probe_loss(const Tensor<double>& x,
                     const std::vector<std::size_t>& labels,
                     const Tensor<double>& weight, const Tensor<double>& bias) {
  require_rank(weight, 2, "probe weight");
  const std::size_t L = weight.dim(1);
  check_labels(x, labels, L);
  if (weight.dim(0) != x.dim(1) || bias.shape() != Shape{L}) {
    throw ShapeError("probe_loss: weight " + shape_string(weight.shape()) +
                     " / bias " + shape_string(bias.shape()) +
                     " do not fit features " + shape_string(x.shape()));
  }
  const std::size_t n = x.dim(0);
  const ConstMapRM X(x.data(), n, x.dim(1));
  const ConstMapRM W(weight.data(), weight.dim(0), L);
  MatrixRM p = (X * W).rowwise() +
               Eigen::Map<const Eigen::RowVectorXd>(bias.data(), L);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double mx = p.row(i).maxCoeff();
    const double target = p(i, labels[i]);
    p.row(i).array() = (p.row(i).array() - mx).exp();
    const double z = p.row(i).sum();
    loss += std::log(z) + mx - target;
    p.row(i) /= z;
    p(i, labels[i]) -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  ProbeLoss out;
  out.loss = loss * inv_n;
  out.grad_weight = to_tensor(MatrixRM(X.transpose() * p * inv_n));
  out.grad_bias = Tensor<double>({L});
  const Eigen::RowVectorXd gb = p.colwise().sum() * inv_n;
  std::copy(gb.data(), gb.data() + L, out.grad_bias.data());
  return out;
}

LinearClassifier train_linear_probe(const Tensor<double>& x,
                                    const std::vector<std::size_t>& labels,
                                    std::size_t num_classes,
                                    const ProbeConfig& cfg) {
  check_labels(x, labels, num_classes);
  const std::size_t n = x.dim(0), D = x.dim(1);
  if (num_classes < 2) {
    throw InvalidArgument("linear probe needs at least 2 classes");
  }
  if (n < num_classes) {
    throw InvalidArgument("linear probe needs n >= L (" + std::to_string(n) +
                          " < " + std::to_string(num_classes) + ")");
  }
  if (std::all_of(labels.begin(), labels.end(),
                  [&](std::size_t y) { return y == labels.front(); })) {
    throw InvalidArgument("linear probe labels are all one class");
  }
  if (cfg.steps < 1 || !(cfg.lr > 0.0)) {
    throw InvalidArgument("linear probe needs steps >= 1 and lr > 0");
  }

  LinearClassifier clf;
  clf.mean.assign(D, 0.0);
  clf.inv_std.assign(D, 1.0);
  for (std::size_t d = 0; d < D; ++d) {
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += x.at(i, d);
    m /= double(n);
    for (std::size_t i = 0; i < n; ++i) v += (x.at(i, d) - m) * (x.at(i, d) - m);
    v /= double(n);
    clf.mean[d] = m;
    // Constant (dead) dimensions carry nothing; keep them at zero.
    clf.inv_std[d] = v > 1e-12 ? 1.0 / std::sqrt(v) : 0.0;
  }
  if (cfg.whiten) {
    // ZCA on the correlation matrix. Correlated embeddings otherwise leave
    // most directions far below the top eigenvalue, and a few hundred
    // descent steps stop well short of the optimum.
    const MatrixRM s = standardized(clf, x);
    const Eigen::MatrixXd corr = (s.transpose() * s) / double(n);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    const double ridge =
        cfg.whiten_ridge * std::max(eig.eigenvalues().mean(), 1e-12);
    const Eigen::VectorXd scale =
        (eig.eigenvalues().array().max(0.0) + ridge).rsqrt().matrix();
    const MatrixRM T = eig.eigenvectors() * scale.asDiagonal() *
                       eig.eigenvectors().transpose();
    clf.whiten = to_tensor(T);
  }
  const Tensor<double> z = to_tensor(standardized(clf, x));

  // Step size scaled by the top eigenvalue of the feature second moment, so
  // one lr works for well- and ill-conditioned encoders alike.
  const ConstMapRM Z(z.data(), n, D);
  const Eigen::MatrixXd second = (Z.transpose() * Z) / double(n);
  const double top =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(second,
                                                     Eigen::EigenvaluesOnly)
          .eigenvalues()
          .maxCoeff();
  const double step = cfg.lr / std::max(1.0, top);

  clf.weight = Tensor<double>({D, num_classes});
  clf.bias = Tensor<double>({num_classes});
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const ProbeLoss g = probe_loss(z, labels, clf.weight, clf.bias);
    axpy(-step, g.grad_weight, clf.weight);
    axpy(-step, g.grad_bias, clf.bias);
  }
  return clf;
}

double accuracy(const LinearClassifier& clf, const Tensor<double>& x,
                const std::vector<std::size_t>& labels) {
  const auto pred = clf.predict(x);
  if (pred.size() != labels.size() || pred.empty()) {
    throw ShapeError("accuracy: prediction/label count mismatch");
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == labels[i];
  return double(hit) / double(pred.size());
}

ProbeResult localization_probe_accuracy(Encoder<float>& encoder,
                                        const Gallery& gallery,
                                        const ProbeConfig& cfg) {
  cfg.validate();
  ProbeResult res;
  res.chance = 1.0 / double(cfg.M);
  if (cfg.M == 1) {
    res.accuracy = res.train_accuracy = 1.0;
    return res;
  }
  const std::size_t K = gallery.size();
  const auto n_eval = static_cast<std::size_t>(
      std::max(1.0, std::round(cfg.eval_fraction * double(K))));
  if (K < 2 || n_eval >= K) {
    throw InvalidArgument("localization probe: gallery of " + std::to_string(K) +
                          " images cannot be split");
  }
  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), 0);
  Rng split = make_stream(cfg.seed, "probe-split");
  std::shuffle(order.begin(), order.end(), split);

  std::vector<Image> crops;  // isolated mode owns its inputs
  auto build = [&](std::size_t begin, std::size_t end,
                   std::vector<std::size_t>& labels) {
    std::vector<Region> regions;
    if (cfg.isolated_patches) {
      crops.clear();
      crops.reserve((end - begin) * cfg.M);
    }
    for (std::size_t i = begin; i < end; ++i) {
      const Image& img = gallery.images[order[i]];
      const auto cells = patch_grid(img.height(), img.width(), cfg.M);
      for (std::size_t p = 0; p < cfg.M; ++p) {
        if (cfg.isolated_patches) {
          crops.push_back(isolated_patch(img, cells[p]));
          regions.push_back({&crops.back(), full_box(crops.back())});
        } else {
          regions.push_back({&img, cells[p]});
        }
        labels.push_back(p);
      }
    }
    return embed_regions(encoder, regions);
  };
  std::vector<std::size_t> y_train, y_eval;
  const Tensor<double> x_eval = build(0, n_eval, y_eval);
  const Tensor<double> x_train = build(n_eval, K, y_train);
  const LinearClassifier clf = train_linear_probe(x_train, y_train, cfg.M, cfg);
  res.accuracy = accuracy(clf, x_eval, y_eval);
  res.train_accuracy = accuracy(clf, x_train, y_train);
  res.eval_count = y_eval.size();
  return res;
}

ProbeResult classification_probe_accuracy(Encoder<float>& encoder,
                                          const Gallery& gallery,
                                          const ProbeConfig& cfg) {
  cfg.validate();
  const std::size_t K = gallery.size();
  if (K < 2) throw InvalidArgument("classification probe needs >= 2 instances");
  std::vector<Image> train_views, eval_views;
  std::vector<std::size_t> y_train, y_eval;
  for (std::size_t k = 0; k < K; ++k) {
    const Image& src = gallery.images[k];
    AugmentParams aug = cfg.augment;
    aug.view_size = src.height();
    Rng rng = make_stream(cfg.seed, "probe-views", k);
    for (std::size_t v = 0; v < cfg.cls_train_views; ++v) {
      train_views.push_back(augment_view(src, aug, rng));
      y_train.push_back(k);
    }
    for (std::size_t v = 0; v < cfg.cls_eval_views; ++v) {
      eval_views.push_back(augment_view(src, aug, rng));
      y_eval.push_back(k);
    }
  }
  auto embed_all = [&](const std::vector<Image>& views) {
    std::vector<Region> regions;
    for (const auto& v : views) regions.push_back({&v, full_box(v)});
    return embed_regions(encoder, regions);
  };
  const Tensor<double> x_train = embed_all(train_views);
  const Tensor<double> x_eval = embed_all(eval_views);
  const LinearClassifier clf = train_linear_probe(x_train, y_train, K, cfg);
  ProbeResult res;
  res.chance = 1.0 / double(K);
  res.accuracy = accuracy(clf, x_eval, y_eval);
  res.train_accuracy = accuracy(clf, x_train, y_train);
  res.eval_count = y_eval.size();
  return res;
}

std::string probe_tsv_row(const std::string& mode, std::size_t M,
                          double loc_acc, double cls_acc, std::uint64_t seed) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << mode << '\t' << M << '\t' << loc_acc << '\t' << cls_acc << '\t' << seed;
  return os.str();
}

std::uint64_t parameter_fingerprint(Encoder<float>& encoder) {
  std::uint64_t h = fnv1a64("");
  for (const auto* p : encoder.params()) {
    h = fnv1a64(p->name, h);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(p->value.data()),
                                 p->value.size() * sizeof(float)),
                h);
  }
  return h;
}

}  // namespace insloc
