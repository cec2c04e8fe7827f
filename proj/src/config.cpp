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

#include "insloc/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "insloc/errors.hpp"

namespace insloc {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(std::string_view key, std::string_view value,
                      const std::string& why) {
  throw ConfigError("config key '" + std::string(key) + "': value '" +
                    std::string(value) + "' " + why);
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    bad(key, v, "is not a non-negative integer");
  }
  return out;
}

std::size_t parse_count(std::string_view key, std::string_view v,
                        std::size_t lo, std::size_t hi) {
  const std::uint64_t out = parse_u64(key, v);
  if (out < lo || out > hi) {
    bad(key, v, "must lie in [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "]");
  }
  return static_cast<std::size_t>(out);
}

// Inclusive bounds unless open_lo is set.
double parse_real(std::string_view key, std::string_view v, double lo,
                  double hi, bool open_lo = false) {
  double out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size() ||
      !std::isfinite(out)) {
    bad(key, v, "is not a finite number");
  }
  if ((open_lo ? out <= lo : out < lo) || out > hi) {
    bad(key, v, std::string("must lie in ") + (open_lo ? "(" : "[") + fmt(lo) +
                    ", " + (std::isinf(hi) ? "inf)" : fmt(hi) + "]"));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad(key, v, "is not a boolean (true/false)");
}

std::vector<std::string_view> split_list(std::string_view key,
                                         std::string_view v) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = v.find(',');
    out.push_back(trim(v.substr(0, comma)));
    if (out.back().empty()) bad(key, v, "has an empty list element");
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

template <typename Vec>
std::string join(const Vec& v) {
  std::string s;
  for (const auto& x : v) {
    if (!s.empty()) s += ',';
    if constexpr (std::is_floating_point_v<typename Vec::value_type>) {
      s += fmt(x);
    } else {
      s += std::to_string(x);
    }
  }
  return s;
}

struct Entry {
  ConfigKey key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

using Range = std::pair<double, double>;

// Two keys `<name>_min` / `<name>_max` over one pair field.
void add_range(std::vector<Entry>& t, const std::string& name,
               const std::string& help, Range& (*field)(RunConfig&),
               double lo, double hi, bool open_lo) {
  t.push_back({{name + "_min", help + " (lower bound)"},
               [=](RunConfig& c, std::string_view v) {
                 field(c).first = parse_real(name + "_min", v, lo, hi, open_lo);
               },
               [=](const RunConfig& c) {
                 return fmt(field(const_cast<RunConfig&>(c)).first);
               }});
  t.push_back({{name + "_max", help + " (upper bound)"},
               [=](RunConfig& c, std::string_view v) {
                 field(c).second = parse_real(name + "_max", v, lo, hi, open_lo);
               },
               [=](const RunConfig& c) {
                 return fmt(field(const_cast<RunConfig&>(c)).second);
               }});
}

std::vector<Entry> build_table() {
  std::vector<Entry> t;
  auto count = [&](const char* name, const char* help, std::size_t lo,
                   std::size_t hi, auto field) {
    t.push_back({{name, help},
                 [=](RunConfig& c, std::string_view v) {
                   field(c) = parse_count(name, v, lo, hi);
                 },
                 [=](const RunConfig& c) {
                   return std::to_string(field(const_cast<RunConfig&>(c)));
                 }});
  };
  auto real = [&](const char* name, const char* help, double lo, double hi,
                  bool open_lo, auto field) {
    t.push_back({{name, help},
                 [=](RunConfig& c, std::string_view v) {
                   field(c) = parse_real(name, v, lo, hi, open_lo);
                 },
                 [=](const RunConfig& c) {
                   return fmt(field(const_cast<RunConfig&>(c)));
                 }});
  };
  auto flag = [&](const char* name, const char* help, auto field) {
    t.push_back({{name, help},
                 [=](RunConfig& c, std::string_view v) {
                   field(c) = parse_bool(name, v);
                 },
                 [=](const RunConfig& c) {
                   return std::string(field(const_cast<RunConfig&>(c)) ? "true"
                                                                       : "false");
                 }});
  };
  auto prob = [&](const char* name, const char* help, auto field) {
    real(name, help, 0.0, 1.0, false, field);
  };
  using C = RunConfig;

  t.push_back({{"mode", "insloc-c4 | insloc-fpn | baseline-holistic"},
               [](C& c, std::string_view v) {
                 try {
                   c.train.mode = parse_train_mode(v);
                 } catch (const InvalidArgument&) {
                   bad("mode", v,
                       "is not one of insloc-c4, insloc-fpn, baseline-holistic");
                 }
               },
               [](const C& c) { return to_string(c.train.mode); }});
  count("steps", "training steps (0: initialization only)", 0, 10'000'000,
        [](C& c) -> std::size_t& { return c.train.steps; });
  count("batch_size", "images per step", 1, 4096,
        [](C& c) -> std::size_t& { return c.train.batch_size; });
  real("lr", "base learning rate (cosine schedule)", 0.0, 10.0, true,
       [](C& c) -> double& { return c.train.lr; });
  real("sgd_momentum", "SGD momentum", 0.0, 0.999999, false,
       [](C& c) -> double& { return c.train.sgd_momentum; });
  real("weight_decay", "L2 weight decay", 0.0, 1.0, false,
       [](C& c) -> double& { return c.train.weight_decay; });
  real("temperature", "InfoNCE temperature", 0.0, 1e6, true,
       [](C& c) -> double& { return c.train.temperature; });
  count("queue_size", "negatives per memory queue", 1, 1u << 20,
        [](C& c) -> std::size_t& { return c.train.queue_size; });
  t.push_back({{"queue_init", "random (unit vectors) | grow (start empty)"},
               [](C& c, std::string_view v) {
                 if (v == "random") {
                   c.train.queue_random_init = true;
                 } else if (v == "grow") {
                   c.train.queue_random_init = false;
                 } else {
                   bad("queue_init", v, "is not one of random, grow");
                 }
               },
               [](const C& c) {
                 return std::string(c.train.queue_random_init ? "random"
                                                              : "grow");
               }});
  real("ema_momentum", "key-encoder EMA coefficient", 0.0, 1.0, false,
       [](C& c) -> double& { return c.train.ema_momentum; });
  t.push_back({{"seed", "master seed for every random stream"},
               [](C& c, std::string_view v) {
                 c.train.seed = parse_u64("seed", v);
                 c.probe.seed = c.train.seed;
               },
               [](const C& c) { return std::to_string(c.train.seed); }});
  count("gallery_size", "number of gallery instances K", 3, 1u << 20,
        [](C& c) -> std::size_t& { return c.train.gallery_size; });
  t.push_back({{"image_size", "gallery image and composite side, pixels"},
               [](C& c, std::string_view v) {
                 c.train.composition.composite_size =
                     static_cast<int>(parse_count("image_size", v, 8, 1024));
               },
               [](const C& c) {
                 return std::to_string(c.train.composition.composite_size);
               }});
  add_range(t, "scale", "pasted foreground shorter side, pixels",
            [](C& c) -> Range& { return c.train.composition.scale; }, 0.0,
            1024.0, true);
  for (const bool is_min : {true, false}) {
    const std::string name = is_min ? "aspect_min" : "aspect_max";
    t.push_back(
        {{name, std::string("pasted foreground width/height ") +
                    (is_min ? "lower" : "upper") +
                    " bound (default: 1/3..3 for C4, 1/2..2 for FPN)"},
         [=](C& c, std::string_view v) {
           (is_min ? c.aspect_min : c.aspect_max) =
               parse_real(name, v, 0.0, 1e3, true);
         },
         [=](const C& c) {
           const auto& o = is_min ? c.aspect_min : c.aspect_max;
           return o ? fmt(*o) : std::string("auto");
         }});
  }
  count("view_size", "augmented foreground view side, pixels", 1, 1024,
        [](C& c) -> int& { return c.train.augment.view_size; });
  add_range(t, "crop_area", "random-resized-crop area fraction",
            [](C& c) -> Range& { return c.train.augment.crop_area; }, 0.0, 1.0,
            true);
  add_range(t, "crop_aspect", "random-resized-crop aspect ratio",
            [](C& c) -> Range& { return c.train.augment.crop_aspect; }, 0.0,
            100.0, true);
  real("brightness", "colour-jitter brightness strength", 0.0, 1.0, false,
       [](C& c) -> double& { return c.train.augment.brightness; });
  real("contrast", "colour-jitter contrast strength", 0.0, 1.0, false,
       [](C& c) -> double& { return c.train.augment.contrast; });
  real("saturation", "colour-jitter saturation strength", 0.0, 1.0, false,
       [](C& c) -> double& { return c.train.augment.saturation; });
  prob("jitter_p", "probability of applying colour jitter",
       [](C& c) -> double& { return c.train.augment.jitter_p; });
  prob("grayscale_p", "probability of grayscale conversion",
       [](C& c) -> double& { return c.train.augment.grayscale_p; });
  prob("blur_p", "probability of Gaussian blur",
       [](C& c) -> double& { return c.train.augment.blur_p; });
  add_range(t, "blur_sigma", "Gaussian blur sigma",
            [](C& c) -> Range& { return c.train.augment.blur_sigma; }, 0.0,
            100.0, true);
  prob("flip_p", "probability of horizontal flip",
       [](C& c) -> double& { return c.train.augment.flip_p; });
  flag("box_aug", "replace the query box by a random anchor with IoU > threshold",
       [](C& c) -> bool& { return c.train.box_aug; });
  real("iou_threshold", "anchor IoU threshold for box augmentation", 0.0,
       0.999, false, [](C& c) -> double& { return c.train.iou_threshold; });
  t.push_back({{"anchor_strides", "comma-separated anchor grid strides"},
               [](C& c, std::string_view v) {
                 c.train.anchors.strides.clear();
                 for (auto s : split_list("anchor_strides", v)) {
                   c.train.anchors.strides.push_back(
                       static_cast<int>(parse_count("anchor_strides", s, 1, 1024)));
                 }
               },
               [](const C& c) { return join(c.train.anchors.strides); }});
  t.push_back({{"anchor_scales", "comma-separated anchor sizes, pixels"},
               [](C& c, std::string_view v) {
                 c.train.anchors.scales.clear();
                 for (auto s : split_list("anchor_scales", v)) {
                   c.train.anchors.scales.push_back(
                       parse_real("anchor_scales", s, 0.0, 4096.0, true));
                 }
               },
               [](const C& c) { return join(c.train.anchors.scales); }});
  t.push_back({{"anchor_ratios", "comma-separated anchor width/height ratios"},
               [](C& c, std::string_view v) {
                 c.train.anchors.aspect_ratios.clear();
                 for (auto s : split_list("anchor_ratios", v)) {
                   c.train.anchors.aspect_ratios.push_back(
                       parse_real("anchor_ratios", s, 0.0, 100.0, true));
                 }
               },
               [](const C& c) { return join(c.train.anchors.aspect_ratios); }});
  t.push_back({{"widths", "comma-separated backbone stage widths"},
               [](C& c, std::string_view v) {
                 c.train.backbone.widths.clear();
                 for (auto s : split_list("widths", v)) {
                   c.train.backbone.widths.push_back(parse_count("widths", s, 1, 4096));
                 }
               },
               [](const C& c) { return join(c.train.backbone.widths); }});
  count("fpn_width", "FPN lateral width", 1, 4096,
        [](C& c) -> std::size_t& { return c.train.backbone.fpn_width; });
  count("box_fc_dim", "FPN box-head width", 1, 65536,
        [](C& c) -> std::size_t& { return c.train.backbone.box_fc_dim; });
  count("head_hidden", "projection-head hidden width", 1, 65536,
        [](C& c) -> std::size_t& { return c.train.backbone.head_hidden; });
  count("head_dim", "embedding dimension", 1, 65536,
        [](C& c) -> std::size_t& { return c.train.backbone.head_dim; });
  flag("channel_norm", "per-channel standardization after the first conv",
       [](C& c) -> bool& { return c.train.backbone.channel_norm; });
  count("roi_output", "RoIAlign bins per axis", 1, 64,
        [](C& c) -> std::size_t& { return c.train.backbone.roi_output; });
  count("roi_sampling", "RoIAlign samples per bin axis", 1, 16,
        [](C& c) -> std::size_t& { return c.train.backbone.roi_sampling; });
  flag("roi_aligned", "half-pixel RoIAlign alignment",
       [](C& c) -> bool& { return c.train.backbone.roi_aligned; });
  count("probe_M", "localization probe patch count (perfect square)", 1, 4096,
        [](C& c) -> std::size_t& { return c.probe.M; });
  count("probe_steps", "probe gradient-descent steps", 1, 1'000'000,
        [](C& c) -> std::size_t& { return c.probe.steps; });
  real("probe_lr", "probe step size, in units of 1/top feature eigenvalue",
       0.0, 4.0, true, [](C& c) -> double& { return c.probe.lr; });
  real("probe_eval_fraction", "gallery fraction held out for localization",
       0.0, 0.99, true, [](C& c) -> double& { return c.probe.eval_fraction; });
  flag("probe_whiten", "probe: whiten standardized features before descent",
       [](C& c) -> bool& { return c.probe.whiten; });
  real("probe_ridge", "probe whitening ridge, relative to the mean eigenvalue",
       0.0, 1e6, true, [](C& c) -> double& { return c.probe.whiten_ridge; });
  count("probe_train_views", "classification-probe training views per instance",
        1, 1024, [](C& c) -> std::size_t& { return c.probe.cls_train_views; });
  count("probe_eval_views", "classification-probe held-out views per instance",
        1, 1024, [](C& c) -> std::size_t& { return c.probe.cls_eval_views; });
  flag("isolated_patches", "probe: forward each patch alone instead of the full image",
       [](C& c) -> bool& { return c.probe.isolated_patches; });
  t.push_back({{"out_dir", "output directory"},
               [](C& c, std::string_view v) {
                 if (v.empty()) bad("out_dir", v, "must not be empty");
                 c.out_dir = std::string(v);
               },
               [](const C& c) { return c.out_dir; }});
  count("checkpoint_every", "also checkpoint every N steps (0: final only)", 0,
        10'000'000, [](C& c) -> std::size_t& { return c.checkpoint_every; });
  count("compose_count", "composite pairs written by `compose`", 0, 100'000,
        [](C& c) -> std::size_t& { return c.compose_count; });
  return t;
}

const std::vector<Entry>& table() {
  static const std::vector<Entry> t = build_table();
  return t;
}

const Entry& find_entry(std::string_view key) {
  for (const auto& e : table()) {
    if (e.key.name == key) return e;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

void RunConfig::resolve() {
  train.backbone.variant = variant_for(train.mode);
  const CompositionParams defaults =
      CompositionParams::defaults_for(train.backbone.variant);
  train.composition.aspect = {aspect_min.value_or(defaults.aspect.first),
                              aspect_max.value_or(defaults.aspect.second)};
  probe.seed = train.seed;
  probe.augment = train.augment;
  try {
    train.validate();
    probe.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& e : table()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  find_entry(trim(key)).set(cfg, trim(value));
}

std::string get_setting(const RunConfig& cfg, std::string_view key) {
  return find_entry(key).get(cfg);
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) +
                      "' is not of the form key=value");
  }
  apply_setting(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

RunConfig parse_config_text(std::string_view text, const std::string& source) {
  RunConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    try {
      if (eq == std::string_view::npos) {
        throw ConfigError("expected 'key = value', got '" + std::string(line) + "'");
      }
      apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::string render_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& e : table()) {
    const std::string v = e.get(cfg);
    if (v == "auto") continue;  // unset optional keys
    out += e.key.name + " = " + v + "\n";
  }
  return out;
}

std::string config_help() {
  const RunConfig defaults;
  std::size_t width = 0;
  for (const auto& e : table()) width = std::max(width, e.key.name.size());
  std::string out = "Config keys (key = default  description):\n";
  for (const auto& e : table()) {
    std::string line = "  " + e.key.name;
    line.resize(width + 4, ' ');
    line += "= " + e.get(defaults);
    if (line.size() < width + 20) line.resize(width + 20, ' ');
    out += line + "  " + e.key.help + "\n";
  }
  return out;
}

}  // namespace insloc
