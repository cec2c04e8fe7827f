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

// Python bindings: geometry, kernels, and a thin training/probe driver.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "insloc/config.hpp"
#include "insloc/contrastive.hpp"
#include "insloc/probes.hpp"
#include "insloc/roi_align.hpp"
#include "insloc/selfcheck.hpp"
#include "insloc/trainer.hpp"

namespace py = pybind11;
using insloc::BBox;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

using Box = std::tuple<double, double, double, double>;

BBox to_bbox(const Box& b) {
  return {std::get<0>(b), std::get<1>(b), std::get<2>(b), std::get<3>(b)};
}

Box from_bbox(const BBox& b) { return {b.x1, b.y1, b.x2, b.y2}; }

insloc::Tensor<double> to_tensor(const Array& a) {
  insloc::Shape shape(a.shape(), a.shape() + a.ndim());
  return insloc::Tensor<double>(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const insloc::Tensor<double>& t) {
  Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data(), t.data() + t.size(), out.mutable_data());
  return out;
}

Array image_to_array(const insloc::Image& img) {
  Array out({img.height(), img.width(), 3});
  std::copy(img.pixels().begin(), img.pixels().end(), out.mutable_data());
  return out;
}

insloc::RunConfig run_config(const std::vector<std::string>& overrides) {
  insloc::RunConfig cfg;
  for (const auto& o : overrides) insloc::apply_override(cfg, o);
  cfg.resolve();
  return cfg;
}

// Owns a Trainer built from `key=value` overrides.
class PyTrainer {
 public:
  explicit PyTrainer(const std::vector<std::string>& overrides)
      : cfg_(run_config(overrides)), trainer_(cfg_.train) {}

  std::vector<std::tuple<std::size_t, double, double, double>> run(std::size_t until) {
    std::vector<std::tuple<std::size_t, double, double, double>> out;
    for (const auto& r : trainer_.run(until)) {
      out.emplace_back(r.step, r.loss, r.lr, r.positive_similarity);
    }
    return out;
  }

  std::pair<double, double> probe(const std::string& encoder) {
    insloc::Encoder<float>& enc =
        encoder == "key" ? trainer_.pair().key() : trainer_.pair().query();
    const auto loc = insloc::localization_probe_accuracy(enc, trainer_.gallery(), cfg_.probe);
    const auto cls = insloc::classification_probe_accuracy(enc, trainer_.gallery(), cfg_.probe);
    return {loc.accuracy, cls.accuracy};
  }

  py::bytes checkpoint() {
    const auto bytes = insloc::encode_checkpoint(trainer_.checkpoint());
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  }

  void restore(const py::bytes& data) {
    const std::string s = data;
    trainer_.restore(insloc::decode_checkpoint(std::vector<std::uint8_t>(s.begin(), s.end())));
  }

  std::size_t step() const { return trainer_.step(); }
  std::string config() const { return insloc::render_config(cfg_); }

 private:
  insloc::RunConfig cfg_;
  insloc::Trainer trainer_;
};

}  // namespace

PYBIND11_MODULE(_ext, m) {
  m.doc() = "Instance-localization pretraining kernels and driver";

  // Translators run newest first, so the subclass goes last.
  py::register_exception<insloc::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<insloc::ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("iou", [](const Box& a, const Box& b) { return insloc::iou(to_bbox(a), to_bbox(b)); });
  m.def("clipped_anchors", [](int h, int w) {
    std::vector<Box> out;
    for (const auto& b : insloc::clipped_anchors(insloc::AnchorConfig{}, h, w)) {
      out.push_back(from_bbox(b));
    }
    return out;
  }, py::arg("height"), py::arg("width"));
  m.def("augment_bbox", [](const Box& gt, int h, int w, double thr, std::uint64_t seed) {
    insloc::Rng rng(seed);
    const auto anchors = insloc::clipped_anchors(insloc::AnchorConfig{}, h, w);
    return from_bbox(insloc::augment_bbox(to_bbox(gt), anchors, thr, rng));
  }, py::arg("gt"), py::arg("height"), py::arg("width"),
     py::arg("iou_threshold") = 0.5, py::arg("seed") = 0);
  m.def("patch_grid", [](int h, int w, std::size_t M) {
    std::vector<Box> out;
    for (const auto& b : insloc::patch_grid(h, w, M)) out.push_back(from_bbox(b));
    return out;
  });

  m.def("roi_align", [](const Array& fmap, const Box& box, std::size_t batch_index,
                        std::size_t output_size, std::size_t sampling,
                        double spatial_scale, bool aligned) {
    insloc::RoiSpec spec{output_size, sampling, spatial_scale, aligned};
    return to_array(insloc::roi_align_forward(to_tensor(fmap), to_bbox(box), batch_index, spec));
  }, py::arg("fmap"), py::arg("box"), py::arg("batch_index") = 0,
     py::arg("output_size") = 7, py::arg("sampling") = 2,
     py::arg("spatial_scale") = 1.0 / 16.0, py::arg("aligned") = true);

  m.def("info_nce_loss", [](const Array& q, const Array& k, const Array& negatives, double tau) {
    const auto neg = to_tensor(negatives);
    insloc::MemoryQueue<double> queue(neg.dim(0), neg.dim(1));
    queue.enqueue(neg);
    const auto r = insloc::info_nce_loss(to_tensor(q), to_tensor(k), queue, tau);
    return py::make_tuple(r.loss, to_array(r.grad_q));
  }, py::arg("q"), py::arg("k"), py::arg("negatives"), py::arg("tau") = 0.2);

  m.def("generate_gallery", [](std::size_t count, int size, std::uint64_t seed) {
    std::vector<Array> out;
    for (const auto& img : insloc::generate_gallery(count, size, seed).images) {
      out.push_back(image_to_array(img));
    }
    return out;
  }, py::arg("count"), py::arg("size") = 64, py::arg("seed") = 0);

  m.def("selfcheck", [] {
    py::list out;
    for (const auto& r : insloc::run_selfcheck()) {
      py::dict d;
      d["name"] = r.name;
      d["pass"] = r.pass;
      d["error"] = r.error;
      d["tolerance"] = r.tolerance;
      out.append(d);
    }
    return out;
  });
  m.def("config_help", &insloc::config_help);

  py::class_<PyTrainer>(m, "Trainer")
      .def(py::init<const std::vector<std::string>&>(), py::arg("overrides") = std::vector<std::string>{})
      .def("run", &PyTrainer::run, py::arg("until"),
           "Train up to step `until`; returns (step, loss, lr, positive_similarity) rows.")
      .def("probe", &PyTrainer::probe, py::arg("encoder") = "query",
           "(localization accuracy, classification accuracy)")
      .def("checkpoint", &PyTrainer::checkpoint)
      .def("restore", &PyTrainer::restore)
      .def_property_readonly("step", &PyTrainer::step)
      .def_property_readonly("config", &PyTrainer::config);
}
