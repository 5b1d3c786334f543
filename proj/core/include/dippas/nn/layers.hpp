#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "dippas/nn/tensor.hpp"
#include "dippas/rng.hpp"

namespace dippas::nn {

template <typename T>
struct Param {
  std::string name;
  std::vector<T> value;
  std::vector<T> grad;

  Param() = default;
  Param(std::string n, std::size_t size) : name(std::move(n)), value(size, T(0)), grad(size, T(0)) {}
};

template <typename T>
using ParamList = std::vector<Param<T>*>;

// Square convolution, zero padding (kernel - 1) / 2, optional bias.
// Caches its input for backward(); the unrolled matrix is built band by band.
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
         std::size_t stride, bool bias);

  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weight and bias.
  void init(Rng& rng);

  Tensor<T> forward(const Tensor<T>& x);
  // Accumulates parameter gradients, returns the input gradient.
  Tensor<T> backward(const Tensor<T>& grad_out);

  void collect(ParamList<T>& out);

  std::size_t in_channels() const noexcept { return in_; }
  std::size_t out_channels() const noexcept { return out_; }
  std::size_t kernel() const noexcept { return kernel_; }
  std::size_t stride() const noexcept { return stride_; }
  Param<T>& weight() noexcept { return weight_; }
  Param<T>& bias() noexcept { return bias_; }
  bool has_bias() const noexcept { return has_bias_; }

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  std::size_t kernel_ = 1;
  std::size_t stride_ = 1;
  bool has_bias_ = false;
  Param<T> weight_;  // out x (in * kernel * kernel), row-major
  Param<T> bias_;

  std::size_t in_h_ = 0;
  std::size_t in_w_ = 0;
  std::size_t out_h_ = 0;
  std::size_t out_w_ = 0;
  Tensor<T> input_;
  std::vector<T> scratch_;

  // Output rows per unfolded band, sized to keep the band cache resident.
  std::size_t band_rows() const;
  void unfold_band(std::size_t oy0, std::size_t oy1, T* dst) const;
  void fold_band(const T* src, std::size_t oy0, std::size_t oy1, Tensor<T>& dx) const;
};

// Per-sample batch normalization: statistics over the spatial extent of each channel.
template <typename T>
class BatchNorm2d {
 public:
  static constexpr double kEpsilon = 1e-5;

  BatchNorm2d() = default;
  BatchNorm2d(std::string name, std::size_t channels);

  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);
  void collect(ParamList<T>& out);

  Param<T>& scale() noexcept { return scale_; }
  Param<T>& shift() noexcept { return shift_; }

 private:
  Param<T> scale_;
  Param<T> shift_;
  Tensor<T> normalized_;
  std::vector<T> inv_std_;
};

// Convolution followed by batch normalization and LeakyReLU.
template <typename T>
class ConvUnit {
 public:
  ConvUnit() = default;
  ConvUnit(const std::string& name, std::size_t in_channels, std::size_t out_channels,
           std::size_t kernel, std::size_t stride, T negative_slope);

  void init(Rng& rng) { conv_.init(rng); }
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);
  void collect(ParamList<T>& out);

  std::size_t out_channels() const noexcept { return conv_.out_channels(); }
  Conv2d<T>& conv() noexcept { return conv_; }
  BatchNorm2d<T>& norm() noexcept { return norm_; }

 private:
  Conv2d<T> conv_;
  BatchNorm2d<T> norm_;
  T slope_ = T(0.2);
  Tensor<T> pre_activation_;
};

// Widths of the three chained 3x3 convolutions of a MultiRes block, in
// ratio 1:2:3 of the nominal width, each at least 1.
std::array<std::size_t, 3> multires_split(std::size_t nominal_width);

// Three chained 3x3 convolution units whose outputs are concatenated, plus a
// 1x1 shortcut unit added to the concatenation.
template <typename T>
class MultiResBlock {
 public:
  MultiResBlock() = default;
  MultiResBlock(const std::string& name, std::size_t in_channels, std::size_t nominal_width,
                T negative_slope);

  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);
  void collect(ParamList<T>& out);

  std::size_t out_channels() const noexcept { return width_; }

 private:
  std::size_t width_ = 0;
  ConvUnit<T> first_;
  ConvUnit<T> second_;
  ConvUnit<T> third_;
  ConvUnit<T> shortcut_;
};

// Chain of (3x3 unit + 1x1 shortcut unit) residual units on an encoder skip.
// With zero units it is the identity.
template <typename T>
class ResidualPath {
 public:
  ResidualPath() = default;
  ResidualPath(const std::string& name, std::size_t channels, std::size_t length,
               T negative_slope);

  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);
  void collect(ParamList<T>& out);

  std::size_t length() const noexcept { return conv_.size(); }

 private:
  std::vector<ConvUnit<T>> conv_;
  std::vector<ConvUnit<T>> shortcut_;
};

}  // namespace dippas::nn
