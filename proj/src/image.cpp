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

#include "dpcxr/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "dpcxr/errors.hpp"

namespace dpcxr::data {
namespace {

double sample_bilinear(const FloatImage& img, double y, double x) {
  const auto H = static_cast<std::ptrdiff_t>(img.height);
  const auto W = static_cast<std::ptrdiff_t>(img.width);
  const double fy = std::floor(y);
  const double fx = std::floor(x);
  const auto y0 = static_cast<std::ptrdiff_t>(fy);
  const auto x0 = static_cast<std::ptrdiff_t>(fx);
  const double wy = y - fy;
  const double wx = x - fx;
  auto px = [&](std::ptrdiff_t yy, std::ptrdiff_t xx) {
    if (yy < 0 || yy >= H || xx < 0 || xx >= W) return 0.0;
    return img.pixels[yy * W + xx];
  };
  return (1 - wy) * ((1 - wx) * px(y0, x0) + wx * px(y0, x0 + 1)) +
         wy * ((1 - wx) * px(y0 + 1, x0) + wx * px(y0 + 1, x0 + 1));
}

}  // namespace

ByteImage normalize_image(const RawImage& raw) {
  if (raw.empty()) throw ConfigError("normalize_image: empty image");
  const auto [lo_it, hi_it] =
      std::minmax_element(raw.pixels.begin(), raw.pixels.end());
  const double lo = *lo_it;
  const double range = static_cast<double>(*hi_it) - lo;
  ByteImage out(raw.height, raw.width, std::uint8_t{0});
  if (range == 0.0) return out;
  for (std::size_t i = 0; i < raw.pixels.size(); ++i) {
    const double v = (raw.pixels[i] - lo) / range * 255.0;
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::floor(v), 0.0, 255.0));
  }
  return out;
}

std::vector<std::uint8_t> equalization_map(const ByteImage& image) {
  std::array<std::size_t, 256> hist{};
  for (std::uint8_t v : image.pixels) ++hist[v];
  std::vector<std::uint8_t> map(256);
  const double n = static_cast<double>(image.pixels.size());
  std::size_t cum = 0;
  for (int v = 0; v < 256; ++v) {
    cum += hist[v];
    const double cdf = n > 0 ? static_cast<double>(cum) / n : 0.0;
    map[v] = static_cast<std::uint8_t>(std::floor(255.0 * cdf + 0.5));
  }
  return map;
}

ByteImage equalize_histogram(const ByteImage& image) {
  const auto map = equalization_map(image);
  ByteImage out = image;
  for (auto& v : out.pixels) v = map[v];
  return out;
}

double ks_distance_to_uniform(const ByteImage& image) {
  std::array<std::size_t, 256> hist{};
  for (std::uint8_t v : image.pixels) ++hist[v];
  const double n = static_cast<double>(image.pixels.size());
  double cum = 0.0, worst = 0.0;
  for (int v = 0; v < 256; ++v) {
    cum += static_cast<double>(hist[v]);
    worst = std::max(worst, std::abs(cum / n - (v + 1) / 256.0));
  }
  return worst;
}

FloatImage resize(const FloatImage& image, std::size_t height,
                  std::size_t width) {
  if (height == 0 || width == 0) throw ConfigError("resize: target must be >= 1");
  if (image.empty()) throw ConfigError("resize: empty image");
  if (height == image.height && width == image.width) return image;
  FloatImage out(height, width, 0.0);
  const double sy = static_cast<double>(image.height) / height;
  const double sx = static_cast<double>(image.width) / width;
  const double max_y = static_cast<double>(image.height - 1);
  const double max_x = static_cast<double>(image.width - 1);
  for (std::size_t y = 0; y < height; ++y) {
    const double src_y = std::clamp((y + 0.5) * sy - 0.5, 0.0, max_y);
    for (std::size_t x = 0; x < width; ++x) {
      const double src_x = std::clamp((x + 0.5) * sx - 0.5, 0.0, max_x);
      // Clamped coordinates keep every tap inside the frame.
      const auto y0 = static_cast<std::size_t>(src_y);
      const auto x0 = static_cast<std::size_t>(src_x);
      const std::size_t y1 = std::min(y0 + 1, image.height - 1);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const double wy = src_y - y0;
      const double wx = src_x - x0;
      out.at(y, x) = (1 - wy) * ((1 - wx) * image.at(y0, x0) + wx * image.at(y0, x1)) +
                     wy * ((1 - wx) * image.at(y1, x0) + wx * image.at(y1, x1));
    }
  }
  return out;
}

FloatImage to_float(const ByteImage& image) {
  FloatImage out(image.height, image.width, 0.0);
  for (std::size_t i = 0; i < image.pixels.size(); ++i)
    out.pixels[i] = image.pixels[i];
  return out;
}

FloatImage apply_augmentation(const FloatImage& image,
                              const AugmentParams& params) {
  FloatImage out = image;
  if (params.angle_degrees != 0.0) {
    const double theta = params.angle_degrees * std::numbers::pi / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double cy = (image.height - 1) / 2.0;
    const double cx = (image.width - 1) / 2.0;
    for (std::size_t y = 0; y < image.height; ++y) {
      for (std::size_t x = 0; x < image.width; ++x) {
        // Inverse map: output pixel pulls from the source rotated by -theta.
        const double dy = y - cy;
        const double dx = x - cx;
        const double src_x = c * dx + s * dy + cx;
        const double src_y = -s * dx + c * dy + cy;
        out.at(y, x) = sample_bilinear(image, src_y, src_x);
      }
    }
  }
  if (params.flip) {
    for (std::size_t y = 0; y < out.height; ++y)
      std::reverse(out.pixels.begin() + y * out.width,
                   out.pixels.begin() + (y + 1) * out.width);
  }
  return out;
}

FloatImage augment(const FloatImage& image, Rng& rng, bool enabled) {
  if (!enabled) return image;
  AugmentParams p;
  p.angle_degrees = rng.uniform(-10.0, 10.0);
  p.flip = rng.bernoulli(0.5);
  return apply_augmentation(image, p);
}

FloatImage preprocess(const RawImage& raw, std::size_t height,
                      std::size_t width) {
  return resize(to_float(equalize_histogram(normalize_image(raw))), height,
                width);
}

Tensor to_tensor(const FloatImage& image, std::size_t channels) {
  Tensor t({channels, image.height, image.width});
  const std::size_t hw = image.height * image.width;
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < hw; ++i) t[c * hw + i] = image.pixels[i] / 255.0;
  return t;
}

FloatImage from_tensor_channel0(const Tensor& t) {
  FloatImage out(t.dim(1), t.dim(2), 0.0);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = t[i] * 255.0;
  return out;
}

}  // namespace dpcxr::data
