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

#ifndef INSLOC_IMAGING_HPP_
#define INSLOC_IMAGING_HPP_

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "insloc/boxes.hpp"
#include "insloc/rng.hpp"
#include "insloc/tensor.hpp"

namespace insloc {

// H x W x 3 raster, row-major, interleaved RGB in [0,1].
class Image {
 public:
  Image() = default;
  Image(int height, int width, float fill = 0.0f);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }

  float& at(int y, int x, int c) { return pixels_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return pixels_[index(y, x, c)]; }

  std::vector<float>& pixels() { return pixels_; }
  const std::vector<float>& pixels() const { return pixels_; }

  void clamp01();

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
  }

  int height_ = 0, width_ = 0;
  std::vector<float> pixels_;
};

struct Gallery {
  std::vector<Image> images;  // instance id == index
  std::uint64_t seed = 0;

  std::size_t size() const { return images.size(); }
};

// K procedural instances (random palette, gradient, oriented stripes, blobs,
// polygons). Instance i depends only on (seed, i).
Gallery generate_gallery(std::size_t count, int size, std::uint64_t seed);

struct AugmentParams {
  int view_size = 64;
  std::pair<double, double> crop_area{0.2, 1.0};  // fraction of the source
  std::pair<double, double> crop_aspect{3.0 / 4.0, 4.0 / 3.0};
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.4;
  double jitter_p = 0.8;
  double grayscale_p = 0.2;
  double blur_p = 0.5;
  std::pair<double, double> blur_sigma{0.1, 2.0};
  double flip_p = 0.5;

  void validate() const;
};

// Random resized crop, color jitter (brightness, contrast, saturation),
// grayscale, gaussian blur, horizontal flip. Output is view_size^2.
Image augment_view(const Image& img, const AugmentParams& p, Rng& rng);

// Half-pixel-aligned bilinear resampling with edge clamping.
Image resize_bilinear(const Image& img, int out_h, int out_w);

// Resamples the integer pixel rectangle [x0,x0+w) x [y0,y0+h) to out_h x
// out_w. resize_bilinear is the full-image case.
Image resize_region(const Image& img, int x0, int y0, int w, int h, int out_h,
                    int out_w);

Image flip_horizontal(const Image& img);
Image to_grayscale(const Image& img);
Image gaussian_blur(const Image& img, double sigma);
Image adjust_brightness(const Image& img, double factor);
Image adjust_contrast(const Image& img, double factor);
Image adjust_saturation(const Image& img, double factor);

// Copy of img with a one-pixel outline of box drawn in the given color.
Image draw_box(const Image& img, const BBox& box, float r, float g, float b);

// Binary PPM: "P6\n<w> <h>\n255\n" followed by RGB bytes.
void write_ppm(const Image& img, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_ppm(const Image& img);
Image decode_ppm(const std::vector<std::uint8_t>& bytes);

// Stacks images into [B,3,H,W].
template <typename T>
Tensor<T> images_to_tensor(const std::vector<const Image*>& images);

double mean_pixel_distance(const Image& a, const Image& b);

}  // namespace insloc

#endif  // INSLOC_IMAGING_HPP_
