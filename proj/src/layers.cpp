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

#include "dpcxr/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpcxr/errors.hpp"

namespace dpcxr::nn {
namespace {

void require_rank3(const Shape& s, const std::string& layer) {
  if (s.size() != 3)
    throw ConfigError(layer + ": expected C x H x W input, got " +
                      shape_string(s));
}

// Range of output columns whose tap (ox * stride + kx - pad) lands inside
// [0, extent).
std::pair<std::ptrdiff_t, std::ptrdiff_t> valid_range(std::ptrdiff_t out,
                                                      std::ptrdiff_t extent,
                                                      std::ptrdiff_t offset,
                                                      std::ptrdiff_t stride) {
  std::ptrdiff_t lo = 0;
  if (offset < 0) lo = (-offset + stride - 1) / stride;
  std::ptrdiff_t hi = (extent - 1 - offset);
  hi = hi < 0 ? 0 : hi / stride + 1;
  return {lo, std::min(hi, out)};
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "mish") return Activation::kMish;
  throw ConfigError("unknown activation '" + name + "' (expected relu|mish)");
}

std::string to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "mish";
}

double softplus(double x) {
  return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0);
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

// tanh(softplus(x)) = (e^2x + 2e^x) / (e^2x + 2e^x + 2), one exp.
double tanh_softplus(double x) {
  if (x > 20.0) return 1.0;
  const double e = std::exp(x);
  const double n = e * (e + 2.0);
  return n / (n + 2.0);
}

}  // namespace

double mish(double x) { return x * tanh_softplus(x); }

double mish_derivative(double x) {
  if (x > 20.0) return 1.0;
  const double e = std::exp(x);
  const double n = e * (e + 2.0);
  const double t = n / (n + 2.0);
  return t + x * (1.0 - t * t) * (e / (1.0 + e));
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::string name, std::size_t in_channels,
               std::size_t out_channels, std::size_t kernel,
               std::size_t stride, std::size_t padding, bool bias)
    : Layer(std::move(name)),
      in_(in_channels),
      out_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(padding),
      bias_(bias) {
  if (in_ == 0 || out_ == 0 || k_ == 0 || stride_ == 0)
    throw ConfigError(this->name() + ": channels, kernel and stride must be > 0");
}

Shape Conv2d::output_shape(const Shape& input) const {
  require_rank3(input, name());
  if (input[0] != in_)
    throw ConfigError(name() + ": expected " + std::to_string(in_) +
                      " input channels, got " + std::to_string(input[0]));
  if (input[1] + 2 * pad_ < k_ || input[2] + 2 * pad_ < k_)
    throw ConfigError(name() + ": input " + shape_string(input) +
                      " smaller than kernel");
  return {out_, (input[1] + 2 * pad_ - k_) / stride_ + 1,
          (input[2] + 2 * pad_ - k_) / stride_ + 1};
}

std::size_t Conv2d::param_count() const {
  return out_ * in_ * k_ * k_ + (bias_ ? out_ : 0);
}

void Conv2d::init(std::span<double> params, Rng& rng) const {
  const double std = std::sqrt(2.0 / static_cast<double>(in_ * k_ * k_));
  const std::size_t nw = out_ * in_ * k_ * k_;
  for (std::size_t i = 0; i < nw; ++i) params[i] = rng.normal(0.0, std);
  for (std::size_t i = nw; i < params.size(); ++i) params[i] = 0.0;
}

// Unfolds x into a (in * k * k) x (OH * OW) matrix of taps; out-of-frame taps
// are zero.
std::vector<double> Conv2d::im2col(const Tensor& x, std::size_t oh,
                                   std::size_t ow) const {
  const auto H = static_cast<std::ptrdiff_t>(x.dim(1));
  const auto W = static_cast<std::ptrdiff_t>(x.dim(2));
  const auto OH = static_cast<std::ptrdiff_t>(oh);
  const auto OW = static_cast<std::ptrdiff_t>(ow);
  const auto s = static_cast<std::ptrdiff_t>(stride_);
  const auto p = static_cast<std::ptrdiff_t>(pad_);
  const auto K = static_cast<std::ptrdiff_t>(k_);
  std::vector<double> col(in_ * k_ * k_ * oh * ow, 0.0);
  const double* xd = x.data();
  std::size_t r = 0;
  for (std::size_t c = 0; c < in_; ++c) {
    const double* xc = xd + c * H * W;
    for (std::ptrdiff_t ky = 0; ky < K; ++ky) {
      const auto [oy_lo, oy_hi] = valid_range(OH, H, ky - p, s);
      for (std::ptrdiff_t kx = 0; kx < K; ++kx, ++r) {
        const auto [ox_lo, ox_hi] = valid_range(OW, W, kx - p, s);
        double* crow = col.data() + r * oh * ow;
        for (std::ptrdiff_t oy = oy_lo; oy < oy_hi; ++oy) {
          const double* xrow = xc + (oy * s + ky - p) * W + (kx - p);
          double* dst = crow + oy * OW;
          for (std::ptrdiff_t ox = ox_lo; ox < ox_hi; ++ox)
            dst[ox] = xrow[ox * s];
        }
      }
    }
  }
  return col;
}

Tensor Conv2d::forward(std::span<const double> params, const Tensor& x,
                       Cache* cache) const {
  const Shape os = output_shape(x.shape());
  const std::size_t npix = os[1] * os[2];
  const std::size_t taps = in_ * k_ * k_;
  std::vector<double> col = im2col(x, os[1], os[2]);
  Tensor y(os);
  const double* w = params.data();
  double* yd = y.data();
  for (std::size_t o = 0; o < out_; ++o) {
    double* yrow = yd + o * npix;
    if (bias_) std::fill(yrow, yrow + npix, params[taps * out_ + o]);
    const double* wrow = w + o * taps;
    for (std::size_t r = 0; r < taps; ++r) {
      const double wv = wrow[r];
      const double* crow = col.data() + r * npix;
      for (std::size_t j = 0; j < npix; ++j) yrow[j] += wv * crow[j];
    }
  }
  if (cache) {
    cache->input = Tensor(x.shape());
    cache->aux = Tensor({taps, npix}, std::move(col));
  }
  return y;
}

Tensor Conv2d::backward(std::span<const double> params, const Cache& cache,
                        const Tensor& grad_out,
                        std::span<double> grad_params) const {
  const Shape& xs = cache.input.shape();
  const auto H = static_cast<std::ptrdiff_t>(xs[1]);
  const auto W = static_cast<std::ptrdiff_t>(xs[2]);
  const auto OH = static_cast<std::ptrdiff_t>(grad_out.dim(1));
  const auto OW = static_cast<std::ptrdiff_t>(grad_out.dim(2));
  const auto s = static_cast<std::ptrdiff_t>(stride_);
  const auto p = static_cast<std::ptrdiff_t>(pad_);
  const auto K = static_cast<std::ptrdiff_t>(k_);
  const std::size_t npix = static_cast<std::size_t>(OH * OW);
  const std::size_t taps = in_ * k_ * k_;
  const double* col = cache.aux.data();
  const double* w = params.data();
  const double* gd = grad_out.data();
  double* gw = grad_params.data();
  std::vector<double> gcol(taps * npix, 0.0);
  for (std::size_t o = 0; o < out_; ++o) {
    const double* grow = gd + o * npix;
    if (bias_) {
      double acc = 0.0;
      for (std::size_t j = 0; j < npix; ++j) acc += grow[j];
      gw[taps * out_ + o] += acc;
    }
    const double* wrow = w + o * taps;
    double* gwrow = gw + o * taps;
    for (std::size_t r = 0; r < taps; ++r) {
      const double* crow = col + r * npix;
      double* gcrow = gcol.data() + r * npix;
      const double wv = wrow[r];
      double acc = 0.0;
      for (std::size_t j = 0; j < npix; ++j) {
        acc += grow[j] * crow[j];
        gcrow[j] += wv * grow[j];
      }
      gwrow[r] += acc;
    }
  }
  Tensor gx(xs);
  double* gxd = gx.data();
  std::size_t r = 0;
  for (std::size_t c = 0; c < in_; ++c) {
    double* gxc = gxd + c * H * W;
    for (std::ptrdiff_t ky = 0; ky < K; ++ky) {
      const auto [oy_lo, oy_hi] = valid_range(OH, H, ky - p, s);
      for (std::ptrdiff_t kx = 0; kx < K; ++kx, ++r) {
        const auto [ox_lo, ox_hi] = valid_range(OW, W, kx - p, s);
        const double* gcrow = gcol.data() + r * npix;
        for (std::ptrdiff_t oy = oy_lo; oy < oy_hi; ++oy) {
          double* gxrow = gxc + (oy * s + ky - p) * W + (kx - p);
          const double* src = gcrow + oy * OW;
          for (std::ptrdiff_t ox = ox_lo; ox < ox_hi; ++ox)
            gxrow[ox * s] += src[ox];
        }
      }
    }
  }
  return gx;
}

// ------------------------------------------------------------- GroupNorm

GroupNorm::GroupNorm(std::string name, std::size_t channels,
                     std::size_t groups, double variance_floor)
    : Layer(std::move(name)),
      channels_(channels),
      groups_(groups),
      floor_(variance_floor) {
  if (groups_ == 0 || channels_ % groups_ != 0)
    throw ConfigError(this->name() + ": " + std::to_string(channels_) +
                      " channels not divisible into " +
                      std::to_string(groups_) + " groups");
}

Shape GroupNorm::output_shape(const Shape& input) const {
  require_rank3(input, name());
  if (input[0] != channels_)
    throw ConfigError(name() + ": expected " + std::to_string(channels_) +
                      " channels, got " + std::to_string(input[0]));
  return input;
}

void GroupNorm::init(std::span<double> params, Rng&) const {
  std::fill(params.begin(), params.begin() + channels_, 1.0);
  std::fill(params.begin() + channels_, params.end(), 0.0);
}

Tensor GroupNorm::forward(std::span<const double> params, const Tensor& x,
                          Cache* cache) const {
  output_shape(x.shape());
  const std::size_t hw = x.dim(1) * x.dim(2);
  const std::size_t cpg = channels_ / groups_;
  const std::size_t n = cpg * hw;
  Tensor xhat(x.shape());
  Tensor y(x.shape());
  std::vector<double> stats(2 * groups_);
  for (std::size_t g = 0; g < groups_; ++g) {
    const double* xg = x.data() + g * n;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += xg[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (xg[i] - mean) * (xg[i] - mean);
    var /= static_cast<double>(n);
    const bool floored = var < floor_;
    const double inv = 1.0 / std::sqrt(floored ? floor_ : var);
    stats[2 * g] = inv;
    stats[2 * g + 1] = floored ? 1.0 : 0.0;
    double* hg = xhat.data() + g * n;
    for (std::size_t i = 0; i < n; ++i) hg[i] = (xg[i] - mean) * inv;
    for (std::size_t c = g * cpg; c < (g + 1) * cpg; ++c) {
      const double gamma = params[c];
      const double beta = params[channels_ + c];
      for (std::size_t i = 0; i < hw; ++i)
        y[c * hw + i] = gamma * xhat[c * hw + i] + beta;
    }
  }
  if (cache) {
    cache->aux = std::move(xhat);
    cache->stats = std::move(stats);
  }
  return y;
}

Tensor GroupNorm::backward(std::span<const double> params, const Cache& cache,
                           const Tensor& grad_out,
                           std::span<double> grad_params) const {
  const Tensor& xhat = cache.aux;
  const std::size_t hw = xhat.dim(1) * xhat.dim(2);
  const std::size_t cpg = channels_ / groups_;
  const std::size_t n = cpg * hw;
  Tensor gx(xhat.shape());
  std::vector<double> dxhat(n);
  for (std::size_t g = 0; g < groups_; ++g) {
    const double inv = cache.stats[2 * g];
    const bool floored = cache.stats[2 * g + 1] != 0.0;
    for (std::size_t c = g * cpg; c < (g + 1) * cpg; ++c) {
      double dgamma = 0.0, dbeta = 0.0;
      for (std::size_t i = 0; i < hw; ++i) {
        const double go = grad_out[c * hw + i];
        dgamma += go * xhat[c * hw + i];
        dbeta += go;
        dxhat[(c - g * cpg) * hw + i] = go * params[c];
      }
      grad_params[c] += dgamma;
      grad_params[channels_ + c] += dbeta;
    }
    const double* hg = xhat.data() + g * n;
    double mean_d = 0.0, mean_dh = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mean_d += dxhat[i];
      mean_dh += dxhat[i] * hg[i];
    }
    mean_d /= static_cast<double>(n);
    mean_dh /= static_cast<double>(n);
    double* gg = gx.data() + g * n;
    // With the floor active the scale is a constant, so only the mean term
    // propagates.
    if (floored) {
      for (std::size_t i = 0; i < n; ++i) gg[i] = inv * (dxhat[i] - mean_d);
    } else {
      for (std::size_t i = 0; i < n; ++i)
        gg[i] = inv * (dxhat[i] - mean_d - hg[i] * mean_dh);
    }
  }
  return gx;
}

// ------------------------------------------------------------ Activation

Tensor ActivationLayer::forward(std::span<const double>, const Tensor& x,
                                Cache* cache) const {
  Tensor y(x.shape());
  if (kind_ == Activation::kRelu) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = mish(x[i]);
  }
  if (cache) cache->input = x;
  return y;
}

Tensor ActivationLayer::backward(std::span<const double>, const Cache& cache,
                                 const Tensor& grad_out,
                                 std::span<double>) const {
  const Tensor& x = cache.input;
  Tensor gx(x.shape());
  if (kind_ == Activation::kRelu) {
    for (std::size_t i = 0; i < x.size(); ++i)
      gx[i] = x[i] > 0.0 ? grad_out[i] : 0.0;
  } else {
    for (std::size_t i = 0; i < x.size(); ++i)
      gx[i] = grad_out[i] * mish_derivative(x[i]);
  }
  return gx;
}

// ------------------------------------------------------------- MaxPool2d

Shape MaxPool2d::output_shape(const Shape& input) const {
  require_rank3(input, name());
  if (input[1] + 2 * pad_ < k_ || input[2] + 2 * pad_ < k_)
    throw ConfigError(name() + ": input smaller than pooling window");
  return {input[0], (input[1] + 2 * pad_ - k_) / stride_ + 1,
          (input[2] + 2 * pad_ - k_) / stride_ + 1};
}

Tensor MaxPool2d::forward(std::span<const double>, const Tensor& x,
                          Cache* cache) const {
  const Shape os = output_shape(x.shape());
  const auto H = static_cast<std::ptrdiff_t>(x.dim(1));
  const auto W = static_cast<std::ptrdiff_t>(x.dim(2));
  Tensor y(os);
  Tensor argmax(os);
  for (std::size_t c = 0; c < os[0]; ++c) {
    for (std::size_t oy = 0; oy < os[1]; ++oy) {
      for (std::size_t ox = 0; ox < os[2]; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t best_i = -1;
        for (std::size_t ky = 0; ky < k_; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * stride_ + ky) -
                          static_cast<std::ptrdiff_t>(pad_);
          if (iy < 0 || iy >= H) continue;
          for (std::size_t kx = 0; kx < k_; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride_ + kx) -
                            static_cast<std::ptrdiff_t>(pad_);
            if (ix < 0 || ix >= W) continue;
            const std::ptrdiff_t idx = (static_cast<std::ptrdiff_t>(c) * H + iy) * W + ix;
            if (x[idx] > best) {
              best = x[idx];
              best_i = idx;
            }
          }
        }
        const std::size_t o = (c * os[1] + oy) * os[2] + ox;
        y[o] = best;
        argmax[o] = static_cast<double>(best_i);
      }
    }
  }
  if (cache) {
    cache->input = Tensor(x.shape());  // shape only
    cache->aux = std::move(argmax);
  }
  return y;
}

Tensor MaxPool2d::backward(std::span<const double>, const Cache& cache,
                           const Tensor& grad_out, std::span<double>) const {
  Tensor gx(cache.input.shape());
  for (std::size_t o = 0; o < grad_out.size(); ++o)
    gx[static_cast<std::size_t>(cache.aux[o])] += grad_out[o];
  return gx;
}

// --------------------------------------------------------- GlobalAvgPool

Shape GlobalAvgPool::output_shape(const Shape& input) const {
  require_rank3(input, name());
  return {input[0]};
}

Tensor GlobalAvgPool::forward(std::span<const double>, const Tensor& x,
                              Cache* cache) const {
  const std::size_t hw = x.dim(1) * x.dim(2);
  Tensor y({x.dim(0)});
  for (std::size_t c = 0; c < x.dim(0); ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < hw; ++i) acc += x[c * hw + i];
    y[c] = acc / static_cast<double>(hw);
  }
  if (cache) cache->input = Tensor(x.shape());
  return y;
}

Tensor GlobalAvgPool::backward(std::span<const double>, const Cache& cache,
                               const Tensor& grad_out,
                               std::span<double>) const {
  Tensor gx(cache.input.shape());
  const std::size_t hw = gx.dim(1) * gx.dim(2);
  for (std::size_t c = 0; c < gx.dim(0); ++c) {
    const double g = grad_out[c] / static_cast<double>(hw);
    for (std::size_t i = 0; i < hw; ++i) gx[c * hw + i] = g;
  }
  return gx;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(std::string name, std::size_t in_features,
               std::size_t out_features)
    : Layer(std::move(name)), in_(in_features), out_(out_features) {
  if (in_ == 0 || out_ == 0)
    throw ConfigError(this->name() + ": features must be > 0");
}

Shape Linear::output_shape(const Shape& input) const {
  if (shape_size(input) != in_)
    throw ConfigError(name() + ": expected " + std::to_string(in_) +
                      " input features, got " + shape_string(input));
  return {out_};
}

void Linear::init(std::span<double> params, Rng& rng) const {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
  for (std::size_t i = 0; i < out_ * in_; ++i)
    params[i] = rng.uniform(-bound, bound);
  for (std::size_t i = out_ * in_; i < params.size(); ++i) params[i] = 0.0;
}

Tensor Linear::forward(std::span<const double> params, const Tensor& x,
                       Cache* cache) const {
  output_shape(x.shape());
  Tensor y({out_});
  for (std::size_t o = 0; o < out_; ++o) {
    double acc = params[out_ * in_ + o];
    const double* w = params.data() + o * in_;
    for (std::size_t i = 0; i < in_; ++i) acc += w[i] * x[i];
    y[o] = acc;
  }
  if (cache) cache->input = x;
  return y;
}

Tensor Linear::backward(std::span<const double> params, const Cache& cache,
                        const Tensor& grad_out,
                        std::span<double> grad_params) const {
  const Tensor& x = cache.input;
  Tensor gx(x.shape());
  for (std::size_t o = 0; o < out_; ++o) {
    const double g = grad_out[o];
    const double* w = params.data() + o * in_;
    double* gw = grad_params.data() + o * in_;
    for (std::size_t i = 0; i < in_; ++i) {
      gw[i] += g * x[i];
      gx[i] += g * w[i];
    }
    grad_params[out_ * in_ + o] += g;
  }
  return gx;
}

// ------------------------------------------------------------ BasicBlock

BasicBlock::BasicBlock(std::string name, std::size_t in_channels,
                       std::size_t out_channels, std::size_t stride,
                       std::size_t groups, Activation act)
    : Layer(std::move(name)) {
  const std::string& n = this->name();
  conv1_ = std::make_unique<Conv2d>(n + ".conv1", in_channels, out_channels, 3,
                                    stride, 1, false);
  norm1_ = std::make_unique<GroupNorm>(n + ".norm1", out_channels, groups);
  act1_ = std::make_unique<ActivationLayer>(n + ".act1", act);
  conv2_ = std::make_unique<Conv2d>(n + ".conv2", out_channels, out_channels,
                                    3, 1, 1, false);
  norm2_ = std::make_unique<GroupNorm>(n + ".norm2", out_channels, groups);
  if (stride != 1 || in_channels != out_channels) {
    projection_ = std::make_unique<Conv2d>(n + ".proj", in_channels,
                                           out_channels, 1, stride, 0, false);
    projection_norm_ =
        std::make_unique<GroupNorm>(n + ".proj_norm", out_channels, groups);
  }
  act_out_ = std::make_unique<ActivationLayer>(n + ".act_out", act);

  offsets_ = {0};
  auto push = [&](const Layer* l) {
    offsets_.push_back(offsets_.back() + (l ? l->param_count() : 0));
  };
  push(conv1_.get());
  push(norm1_.get());
  push(conv2_.get());
  push(norm2_.get());
  push(projection_.get());
  push(projection_norm_.get());
}

std::span<const double> BasicBlock::slice(std::span<const double> p,
                                          int i) const {
  return p.subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

std::span<double> BasicBlock::slice(std::span<double> p, int i) const {
  return p.subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

Shape BasicBlock::output_shape(const Shape& input) const {
  return norm2_->output_shape(conv2_->output_shape(conv1_->output_shape(input)));
}

std::size_t BasicBlock::param_count() const { return offsets_.back(); }

void BasicBlock::init(std::span<double> params, Rng& rng) const {
  conv1_->init(slice(params, 0), rng);
  norm1_->init(slice(params, 1), rng);
  conv2_->init(slice(params, 2), rng);
  norm2_->init(slice(params, 3), rng);
  if (projection_) {
    projection_->init(slice(params, 4), rng);
    projection_norm_->init(slice(params, 5), rng);
  }
}

Tensor BasicBlock::forward(std::span<const double> params, const Tensor& x,
                           Cache* cache) const {
  Cache* c = nullptr;
  if (cache) {
    cache->children.assign(8, Cache{});
    c = cache->children.data();
  }
  auto child = [&](int i) { return c ? c + i : nullptr; };
  Tensor h = conv1_->forward(slice(params, 0), x, child(0));
  h = norm1_->forward(slice(params, 1), h, child(1));
  h = act1_->forward({}, h, child(2));
  h = conv2_->forward(slice(params, 2), h, child(3));
  h = norm2_->forward(slice(params, 3), h, child(4));
  if (projection_) {
    Tensor s = projection_->forward(slice(params, 4), x, child(5));
    s = projection_norm_->forward(slice(params, 5), s, child(6));
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += s[i];
  } else {
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += x[i];
  }
  return act_out_->forward({}, h, child(7));
}

Tensor BasicBlock::backward(std::span<const double> params, const Cache& cache,
                            const Tensor& grad_out,
                            std::span<double> grad_params) const {
  const auto& c = cache.children;
  Tensor g = act_out_->backward({}, c[7], grad_out, {});
  Tensor gx;
  if (projection_) {
    Tensor gs = projection_norm_->backward(slice(params, 5), c[6], g,
                                           slice(grad_params, 5));
    gx = projection_->backward(slice(params, 4), c[5], gs,
                               slice(grad_params, 4));
  } else {
    gx = g;
  }
  g = norm2_->backward(slice(params, 3), c[4], g, slice(grad_params, 3));
  g = conv2_->backward(slice(params, 2), c[3], g, slice(grad_params, 2));
  g = act1_->backward({}, c[2], g, {});
  g = norm1_->backward(slice(params, 1), c[1], g, slice(grad_params, 1));
  g = conv1_->backward(slice(params, 0), c[0], g, slice(grad_params, 0));
  for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
  return gx;
}

}  // namespace dpcxr::nn
