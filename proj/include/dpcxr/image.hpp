// Copyright 2026 The dpcxr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPCXR_IMAGE_HPP_
#define DPCXR_IMAGE_HPP_

// Radiograph preprocessing: normalize -> equalize -> resize, plus the
// training-time augmentation used by non-private runs.

#include <cstdint>
#include <vector>

#include "dpcxr/rng.hpp"
#include "dpcxr/tensor.hpp"

namespace dpcxr::data {

template <typename T>
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<T> pixels;  // row-major

  Image() = default;
  Image(std::size_t h, std::size_t w, T fill = T{})
      : height(h), width(w), pixels(h * w, fill) {}
  Image(std::size_t h, std::size_t w, std::vector<T> p)
      : height(h), width(w), pixels(std::move(p)) {}

  T& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  const T& at(std::size_t y, std::size_t x) const {
    return pixels[y * width + x];
  }
  bool empty() const { return pixels.empty(); }
  friend bool operator==(const Image&, const Image&) = default;
};

using RawImage = Image<std::uint16_t>;
using ByteImage = Image<std::uint8_t>;
using FloatImage = Image<double>;

// Subtract the minimum, divide by the maximum of the shifted image, scale by
// 255 and truncate (floor). A constant image maps to all zeros.
ByteImage normalize_image(const RawImage& raw);

// out(v) = round(255 * CDF(v)), halves rounded up.
ByteImage equalize_histogram(const ByteImage& image);

// Lookup table used by equalize_histogram.
std::vector<std::uint8_t> equalization_map(const ByteImage& image);

// Kolmogorov-Smirnov distance between the gray-level distribution and the
// uniform distribution over 0..255.
double ks_distance_to_uniform(const ByteImage& image);

// Bilinear, half-pixel centres. Resizing to the own size is the identity.
FloatImage resize(const FloatImage& image, std::size_t height,
                  std::size_t width);

FloatImage to_float(const ByteImage& image);

struct AugmentParams {
  double angle_degrees = 0.0;
  bool flip = false;
};

// Rotation about the image centre with bilinear resampling and zero padding,
// then an optional left-right flip. Angle 0 skips resampling entirely.
FloatImage apply_augmentation(const FloatImage& image,
                              const AugmentParams& params);

// Draws angle ~ U[-10, 10] and flip with probability 0.5. Disabled returns
// the input unchanged.
FloatImage augment(const FloatImage& image, Rng& rng, bool enabled);

// normalize -> equalize -> resize.
FloatImage preprocess(const RawImage& raw, std::size_t height,
                      std::size_t width);

// Scales to [0, 1] and replicates the gray channel `channels` times.
Tensor to_tensor(const FloatImage& image, std::size_t channels);
FloatImage from_tensor_channel0(const Tensor& t);

}  // namespace dpcxr::data

#endif  // DPCXR_IMAGE_HPP_
