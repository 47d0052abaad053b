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

#ifndef DPCXR_LAYERS_HPP_
#define DPCXR_LAYERS_HPP_

// Layer zoo with explicit reverse-mode derivatives. Every layer processes a
// single sample; batching happens one level up so that per-sample gradients
// fall out of the same code path as ordinary gradients.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dpcxr/rng.hpp"
#include "dpcxr/tensor.hpp"

namespace dpcxr::nn {

enum class Activation { kRelu, kMish };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

// Overflow-safe: log1p(exp(-|x|)) + max(x, 0).
double softplus(double x);
double sigmoid(double x);
double mish(double x);
double mish_derivative(double x);

// Values a layer saves during forward for its backward pass.
struct Cache {
  Tensor input;
  Tensor aux;
  std::vector<double> stats;
  std::vector<Cache> children;
};

class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  const std::string& name() const { return name_; }

  virtual Shape output_shape(const Shape& input) const = 0;
  virtual std::size_t param_count() const { return 0; }
  virtual void init(std::span<double> /*params*/, Rng& /*rng*/) const {}

  // `cache` may be null for inference.
  virtual Tensor forward(std::span<const double> params, const Tensor& x,
                         Cache* cache) const = 0;

  // Adds this layer's parameter gradient into `grad_params` and returns the
  // gradient with respect to the layer input.
  virtual Tensor backward(std::span<const double> params, const Cache& cache,
                          const Tensor& grad_out,
                          std::span<double> grad_params) const = 0;

 private:
  std::string name_;
};

class Conv2d final : public Layer {
 public:
  Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels,
         std::size_t kernel, std::size_t stride, std::size_t padding,
         bool bias);

  Shape output_shape(const Shape& input) const override;
  std::size_t param_count() const override;
  void init(std::span<double> params, Rng& rng) const override;
  Tensor forward(std::span<const double> params, const Tensor& x,
                 Cache* cache) const override;
  Tensor backward(std::span<const double> params, const Cache& cache,
                  const Tensor& grad_out,
                  std::span<double> grad_params) const override;

 private:
  std::vector<double> im2col(const Tensor& x, std::size_t oh,
                             std::size_t ow) const;

  std::size_t in_, out_, k_, stride_, pad_;
  bool bias_;
};

// Group normalisation over (channels-in-group, H, W) of one sample. The
// variance is floored at `variance_floor` so constant groups normalise to 0.
class GroupNorm final : public Layer {
 public:
  GroupNorm(std::string name, std::size_t channels, std::size_t groups,
            double variance_floor = 1e-5);

  Shape output_shape(const Shape& input) const override;
  std::size_t param_count() const override { return 2 * channels_; }
  void init(std::span<double> params, Rng& rng) const override;
  Tensor forward(std::span<const double> params, const Tensor& x,
                 Cache* cache) const override;
  Tensor backward(std::span<const double> params, const Cache& cache,
                  const Tensor& grad_out,
                  std::span<double> grad_params) const override;

  std::size_t groups() const { return groups_; }

 private:
  std::size_t channels_, groups_;
  double floor_;
};

class ActivationLayer final : public Layer {
 public:
  ActivationLayer(std::string name, Activation kind)
      : Layer(std::move(name)), kind_(kind) {}

  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(std::span<const double> params, const Tensor& x,
                 Cache* cache) const override;
  Tensor backward(std::span<const double> params, const Cache& cache,
                  const Tensor& grad_out,
                  std::span<double> grad_params) const override;

 private:
  Activation kind_;
};

class MaxPool2d final : public Layer {
 public:
  MaxPool2d(std::string name, std::size_t kernel, std::size_t stride,
            std::size_t padding)
      : Layer(std::move(name)), k_(kernel), stride_(stride), pad_(padding) {}

  Shape output_shape(const Shape& input) const override;
  Tensor forward(std::span<const double> params, const Tensor& x,
                 Cache* cache) const override;
  Tensor backward(std::span<const double> params, const Cache& cache,
                  const Tensor& grad_out,
                  std::span<double> grad_params) const override;

 private:
  std::size_t k_, stride_, pad_;
};

// C x H x W -> C
class GlobalAvgPool final : public Layer {
 public:
  explicit GlobalAvgPool(std::string name) : Layer(std::move(name)) {}

  Shape output_shape(const Shape& input) const override;
  Tensor forward(std::span<const double> params, const Tensor& x,
                 Cache* cache) const override;
  Tensor backward(std::span<const double> params, const Cache& cache,
                  const Tensor& grad_out,
                  std::span<double> grad_params) const override;
};

// Flattens its input, then y = W x + b.
class Linear final : public Layer {
 public:
  Linear(std::string name, std::size_t in_features, std::size_t out_features);

  Shape output_shape(const Shape& input) const override;
  std::size_t param_count() const override { return out_ * in_ + out_; }
  void init(std::span<double> params, Rng& rng) const override;
  Tensor forward(std::span<const double> params, const Tensor& x,
                 Cache* cache) const override;
  Tensor backward(std::span<const double> params, const Cache& cache,
                  const Tensor& grad_out,
                  std::span<double> grad_params) const override;

 private:
  std::size_t in_, out_;
};

// act(GN(conv3x3(act(GN(conv3x3(x))))) + shortcut(x)); the shortcut is a
// strided 1x1 conv + GN whenever the shape changes.
class BasicBlock final : public Layer {
 public:
  BasicBlock(std::string name, std::size_t in_channels,
             std::size_t out_channels, std::size_t stride, std::size_t groups,
             Activation act);

  Shape output_shape(const Shape& input) const override;
  std::size_t param_count() const override;
  void init(std::span<double> params, Rng& rng) const override;
  Tensor forward(std::span<const double> params, const Tensor& x,
                 Cache* cache) const override;
  Tensor backward(std::span<const double> params, const Cache& cache,
                  const Tensor& grad_out,
                  std::span<double> grad_params) const override;

  bool has_projection() const { return projection_ != nullptr; }

 private:
  std::span<const double> slice(std::span<const double> p, int i) const;
  std::span<double> slice(std::span<double> p, int i) const;

  std::unique_ptr<Conv2d> conv1_, conv2_, projection_;
  std::unique_ptr<GroupNorm> norm1_, norm2_, projection_norm_;
  std::unique_ptr<ActivationLayer> act1_, act_out_;
  std::vector<std::size_t> offsets_;
};

}  // namespace dpcxr::nn

#endif  // DPCXR_LAYERS_HPP_
