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

#include "insloc/imaging.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "insloc/errors.hpp"

namespace insloc {
namespace {

using Color = std::array<float, 3>;

Color hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(h * 6.0, 6.0);
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  return {float(r + m), float(g + m), float(b + m)};
}

float luminance(float r, float g, float b) {
  return 0.299f * r + 0.587f * g + 0.114f * b;
}

void blend(Image& img, int y, int x, const Color& c, float alpha) {
  for (int k = 0; k < 3; ++k) {
    img.at(y, x, k) = (1.0f - alpha) * img.at(y, x, k) + alpha * c[k];
  }
}

bool inside_convex(const std::vector<std::pair<double, double>>& poly,
                   double px, double py) {
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    const double cross = (b.first - a.first) * (py - a.second) -
                         (b.second - a.second) * (px - a.first);
    pos |= cross > 0;
    neg |= cross < 0;
  }
  return !(pos && neg);
}

Image make_instance(int size, Rng& rng) {
  // Palette around a random hue so each instance has a recognizable scheme.
  const double base_hue = uniform(rng, 0.0, 1.0);
  std::vector<Color> palette;
  for (int i = 0; i < 4; ++i) {
    const double hue = std::fmod(base_hue + uniform(rng, -0.25, 0.25) + 1.0, 1.0);
    palette.push_back(hsv_to_rgb(hue, uniform(rng, 0.35, 1.0),
                                 uniform(rng, 0.3, 1.0)));
  }
  Image img(size, size);
  const double g_angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double gx = std::cos(g_angle), gy = std::sin(g_angle);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = ((x + 0.5) / size - 0.5) * gx + ((y + 0.5) / size - 0.5) * gy;
      const float t = static_cast<float>(std::clamp(u + 0.5, 0.0, 1.0));
      for (int k = 0; k < 3; ++k) {
        img.at(y, x, k) = (1.0f - t) * palette[0][k] + t * palette[1][k];
      }
    }
  }

  // Oriented stripes.
  const double s_angle = uniform(rng, 0.0, std::numbers::pi);
  const double freq = uniform(rng, 2.0, 7.0);
  const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double amp = uniform(rng, 0.3, 0.8);
  const double sx = std::cos(s_angle), sy = std::sin(s_angle);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = ((x + 0.5) * sx + (y + 0.5) * sy) / size;
      const double w = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * freq * u + phase);
      blend(img, y, x, palette[2], static_cast<float>(amp * w));
    }
  }

  // Soft blobs.
  const int blobs = static_cast<int>(uniform_int(rng, 1, 3));
  for (int b = 0; b < blobs; ++b) {
    const double cx = uniform(rng, 0.1, 0.9) * size, cy = uniform(rng, 0.1, 0.9) * size;
    const double sigma = uniform(rng, 0.06, 0.2) * size;
    const Color c = palette[static_cast<std::size_t>(uniform_int(rng, 1, 3))];
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double d2 = (x + 0.5 - cx) * (x + 0.5 - cx) + (y + 0.5 - cy) * (y + 0.5 - cy);
        blend(img, y, x, c, static_cast<float>(0.9 * std::exp(-d2 / (2 * sigma * sigma))));
      }
    }
  }

  // Filled convex polygons (triangles or quads around a center).
  const int polys = static_cast<int>(uniform_int(rng, 1, 3));
  for (int p = 0; p < polys; ++p) {
    const int corners = static_cast<int>(uniform_int(rng, 3, 4));
    const double cx = uniform(rng, 0.15, 0.85) * size, cy = uniform(rng, 0.15, 0.85) * size;
    const double radius = uniform(rng, 0.1, 0.3) * size;
    const double rot = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    std::vector<std::pair<double, double>> poly;
    for (int k = 0; k < corners; ++k) {
      const double a = rot + 2.0 * std::numbers::pi * k / corners;
      const double r = radius * uniform(rng, 0.7, 1.0);
      poly.emplace_back(cx + r * std::cos(a), cy + r * std::sin(a));
    }
    const Color c = palette[static_cast<std::size_t>(uniform_int(rng, 0, 3))];
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        if (inside_convex(poly, x + 0.5, y + 0.5)) blend(img, y, x, c, 0.85f);
      }
    }
  }
  img.clamp01();
  return img;
}

template <typename Fn>
Image map_pixels(const Image& img, Fn&& fn) {
  Image out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      fn(out, y, x);
    }
  }
  out.clamp01();
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Random resized crop window in integer pixels (x0, y0, w, h).
std::array<int, 4> sample_crop(int H, int W, const AugmentParams& p, Rng& rng) {
  const double area = static_cast<double>(H) * W;
  const double log_lo = std::log(p.crop_aspect.first);
  const double log_hi = std::log(p.crop_aspect.second);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * uniform(rng, p.crop_area.first, p.crop_area.second);
    const double ratio = std::exp(log_lo == log_hi ? log_lo : uniform(rng, log_lo, log_hi));
    const int w = static_cast<int>(std::lround(std::sqrt(target * ratio)));
    const int h = static_cast<int>(std::lround(std::sqrt(target / ratio)));
    if (w >= 1 && h >= 1 && w <= W && h <= H) {
      const int x0 = static_cast<int>(uniform_int(rng, 0, W - w));
      const int y0 = static_cast<int>(uniform_int(rng, 0, H - h));
      return {x0, y0, w, h};
    }
  }
  // Fallback: central crop at the closest admissible aspect ratio.
  const double in_ratio = static_cast<double>(W) / H;
  int w = W, h = H;
  if (in_ratio < p.crop_aspect.first) {
    h = static_cast<int>(std::lround(W / p.crop_aspect.first));
  } else if (in_ratio > p.crop_aspect.second) {
    w = static_cast<int>(std::lround(H * p.crop_aspect.second));
  }
  w = std::clamp(w, 1, W);
  h = std::clamp(h, 1, H);
  return {(W - w) / 2, (H - h) / 2, w, h};
}

}  // namespace

Image::Image(int height, int width, float fill)
    : height_(height), width_(width) {
  if (height <= 0 || width <= 0) {
    throw InvalidArgument("image dims must be positive, got " +
                          std::to_string(height) + "x" + std::to_string(width));
  }
  pixels_.assign(static_cast<std::size_t>(height) * width * 3, fill);
}

void Image::clamp01() {
  for (auto& v : pixels_) v = std::clamp(v, 0.0f, 1.0f);
}

Gallery generate_gallery(std::size_t count, int size, std::uint64_t seed) {
  if (count < 2) {
    throw InvalidArgument("generate_gallery: need at least 2 instances, got " +
                          std::to_string(count));
  }
  if (size <= 0) throw InvalidArgument("generate_gallery: size must be positive");
  Gallery g;
  g.seed = seed;
  g.images.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_stream(seed, "gallery", i);
    g.images.push_back(make_instance(size, rng));
  }
  return g;
}

void AugmentParams::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidArgument(std::string(name) + " must lie in [0,1]");
    }
  };
  prob(jitter_p, "jitter_p");
  prob(grayscale_p, "grayscale_p");
  prob(blur_p, "blur_p");
  prob(flip_p, "flip_p");
  if (view_size <= 0) throw InvalidArgument("view_size must be positive");
  if (!(crop_area.first > 0.0 && crop_area.first <= crop_area.second &&
        crop_area.second <= 1.0)) {
    throw InvalidArgument("crop area range must satisfy 0 < lo <= hi <= 1");
  }
  if (!(crop_aspect.first > 0.0 && crop_aspect.first <= crop_aspect.second)) {
    throw InvalidArgument("crop aspect range must satisfy 0 < lo <= hi");
  }
  if (!(blur_sigma.first > 0.0 && blur_sigma.first <= blur_sigma.second)) {
    throw InvalidArgument("blur sigma range must satisfy 0 < lo <= hi");
  }
  for (double s : {brightness, contrast, saturation}) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw InvalidArgument("jitter strengths must lie in [0,1]");
    }
  }
}

Image augment_view(const Image& img, const AugmentParams& p, Rng& rng) {
  p.validate();
  const auto [x0, y0, w, h] = sample_crop(img.height(), img.width(), p, rng);
  Image out = resize_region(img, x0, y0, w, h, p.view_size, p.view_size);
  if (bernoulli(rng, p.jitter_p)) {
    out = adjust_brightness(out, uniform(rng, 1.0 - p.brightness, 1.0 + p.brightness));
    out = adjust_contrast(out, uniform(rng, 1.0 - p.contrast, 1.0 + p.contrast));
    out = adjust_saturation(out, uniform(rng, 1.0 - p.saturation, 1.0 + p.saturation));
  }
  if (bernoulli(rng, p.grayscale_p)) out = to_grayscale(out);
  if (bernoulli(rng, p.blur_p)) {
    out = gaussian_blur(out, uniform(rng, p.blur_sigma.first, p.blur_sigma.second));
  }
  if (bernoulli(rng, p.flip_p)) out = flip_horizontal(out);
  return out;
}

Image resize_region(const Image& img, int x0, int y0, int w, int h, int out_h,
                    int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw InvalidArgument("resize: output dims must be >= 1");
  }
  if (w < 1 || h < 1 || x0 < 0 || y0 < 0 || x0 + w > img.width() ||
      y0 + h > img.height()) {
    throw InvalidArgument("resize: region outside the source image");
  }
  Image out(out_h, out_w);
  const double sy = static_cast<double>(h) / out_h;
  const double sx = static_cast<double>(w) / out_w;
  for (int oy = 0; oy < out_h; ++oy) {
    const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, double(h - 1));
    const int ya = static_cast<int>(std::floor(fy));
    const int yb = std::min(ya + 1, h - 1);
    const float wy = static_cast<float>(fy - ya);
    for (int ox = 0; ox < out_w; ++ox) {
      const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, double(w - 1));
      const int xa = static_cast<int>(std::floor(fx));
      const int xb = std::min(xa + 1, w - 1);
      const float wx = static_cast<float>(fx - xa);
      for (int c = 0; c < 3; ++c) {
        // a + w (b - a) keeps constant regions exact.
        const float ta = img.at(y0 + ya, x0 + xa, c);
        const float tb = img.at(y0 + ya, x0 + xb, c);
        const float ba = img.at(y0 + yb, x0 + xa, c);
        const float bb = img.at(y0 + yb, x0 + xb, c);
        const float top = ta + wx * (tb - ta);
        const float bot = ba + wx * (bb - ba);
        out.at(oy, ox, c) = top + wy * (bot - top);
      }
    }
  }
  return out;
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  return resize_region(img, 0, 0, img.width(), img.height(), out_h, out_w);
}

Image flip_horizontal(const Image& img) {
  Image out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c)
        out.at(y, img.width() - 1 - x, c) = img.at(y, x, c);
  return out;
}

Image to_grayscale(const Image& img) {
  return map_pixels(img, [](Image& o, int y, int x) {
    const float g = luminance(o.at(y, x, 0), o.at(y, x, 1), o.at(y, x, 2));
    for (int c = 0; c < 3; ++c) o.at(y, x, c) = g;
  });
}

Image adjust_brightness(const Image& img, double factor) {
  const float f = static_cast<float>(factor);
  return map_pixels(img, [f](Image& o, int y, int x) {
    for (int c = 0; c < 3; ++c) o.at(y, x, c) *= f;
  });
}

Image adjust_contrast(const Image& img, double factor) {
  double mean = 0.0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      mean += luminance(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
  mean /= static_cast<double>(img.height()) * img.width();
  const float m = static_cast<float>(mean), f = static_cast<float>(factor);
  return map_pixels(img, [m, f](Image& o, int y, int x) {
    for (int c = 0; c < 3; ++c) o.at(y, x, c) = m + f * (o.at(y, x, c) - m);
  });
}

Image adjust_saturation(const Image& img, double factor) {
  const float f = static_cast<float>(factor);
  return map_pixels(img, [f](Image& o, int y, int x) {
    const float g = luminance(o.at(y, x, 0), o.at(y, x, 1), o.at(y, x, 2));
    for (int c = 0; c < 3; ++c) o.at(y, x, c) = g + f * (o.at(y, x, c) - g);
  });
}

// Separable, edge-clamped. Written as centre + sum w_i (x_i - centre) so a
// constant image comes back bit-identical.
Image gaussian_blur(const Image& img, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian_blur: sigma must be > 0");
  const std::vector<double> k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int H = img.height(), W = img.width();
  Image tmp(H, W), out(H, W);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) {
        const float centre = img.at(y, x, c);
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) {
          acc += k[i + r] * (img.at(y, std::clamp(x + i, 0, W - 1), c) - centre);
        }
        tmp.at(y, x, c) = centre + static_cast<float>(acc);
      }
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) {
        const float centre = tmp.at(y, x, c);
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) {
          acc += k[i + r] * (tmp.at(std::clamp(y + i, 0, H - 1), x, c) - centre);
        }
        out.at(y, x, c) = centre + static_cast<float>(acc);
      }
  out.clamp01();
  return out;
}

Image draw_box(const Image& img, const BBox& box, float r, float g, float b) {
  Image out = img;
  const int x1 = std::clamp(static_cast<int>(std::floor(box.x1)), 0, img.width() - 1);
  const int y1 = std::clamp(static_cast<int>(std::floor(box.y1)), 0, img.height() - 1);
  const int x2 = std::clamp(static_cast<int>(std::ceil(box.x2)) - 1, 0, img.width() - 1);
  const int y2 = std::clamp(static_cast<int>(std::ceil(box.y2)) - 1, 0, img.height() - 1);
  auto paint = [&](int y, int x) {
    out.at(y, x, 0) = r;
    out.at(y, x, 1) = g;
    out.at(y, x, 2) = b;
  };
  for (int x = x1; x <= x2; ++x) {
    paint(y1, x);
    paint(y2, x);
  }
  for (int y = y1; y <= y2; ++y) {
    paint(y, x1);
    paint(y, x2);
  }
  return out;
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
  const std::string header = "P6\n" + std::to_string(img.width()) + " " +
                             std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(header.size() + img.size());
  for (float v : img.pixels()) {
    const float q = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f);
    bytes.push_back(static_cast<std::uint8_t>(q));
  }
  return bytes;
}

Image decode_ppm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto skip_space = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* what) {
    skip_space();
    const std::size_t start = pos;
    long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1 << 20) throw ParseError(std::string("ppm: ") + what + " too large", start);
      ++pos;
    }
    if (pos == start) {
      throw ParseError(std::string("ppm: expected ") + what, start);
    }
    return value;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw ParseError("ppm: expected magic \"P6\"", 0);
  }
  pos = 2;
  const long w = read_int("width");
  const long h = read_int("height");
  const std::size_t maxval_at = pos;
  const long maxval = read_int("maxval");
  if (w <= 0 || h <= 0) throw ParseError("ppm: dimensions must be positive", maxval_at);
  if (maxval != 255) {
    throw ParseError("ppm: only maxval 255 is supported, got " +
                         std::to_string(maxval),
                     maxval_at);
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw ParseError("ppm: expected single whitespace after maxval", pos);
  }
  ++pos;
  const std::size_t expected = static_cast<std::size_t>(w) * h * 3;
  const std::size_t actual = bytes.size() - pos;
  if (actual < expected) {
    throw ParseError("ppm: truncated payload, expected " +
                         std::to_string(expected) + " bytes, found " +
                         std::to_string(actual),
                     bytes.size());
  }
  Image img(static_cast<int>(h), static_cast<int>(w));
  for (std::size_t i = 0; i < expected; ++i) {
    img.pixels()[i] = static_cast<float>(bytes[pos + i]) / 255.0f;
  }
  return img;
}

void write_ppm(const Image& img, const std::filesystem::path& path) {
  const auto bytes = encode_ppm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_ppm(bytes);
}

template <typename T>
Tensor<T> images_to_tensor(const std::vector<const Image*>& images) {
  if (images.empty()) throw InvalidArgument("images_to_tensor: empty batch");
  const int H = images.front()->height(), W = images.front()->width();
  Tensor<T> t({images.size(), 3, static_cast<std::size_t>(H),
               static_cast<std::size_t>(W)});
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& img = *images[n];
    if (img.height() != H || img.width() != W) {
      throw ShapeError("images_to_tensor: mixed image sizes in batch");
    }
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
          t.at(n, c, y, x) = static_cast<T>(img.at(y, x, c));
  }
  return t;
}

double mean_pixel_distance(const Image& a, const Image& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw ShapeError("mean_pixel_distance: image sizes differ");
  }
  double total = 0.0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double d = a.at(y, x, c) - b.at(y, x, c);
        d2 += d * d;
      }
      total += std::sqrt(d2);
    }
  return total / (static_cast<double>(a.height()) * a.width());
}

template Tensor<float> images_to_tensor<float>(const std::vector<const Image*>&);
template Tensor<double> images_to_tensor<double>(const std::vector<const Image*>&);

}  // namespace insloc
