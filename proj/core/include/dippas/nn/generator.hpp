#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dippas/nn/layers.hpp"
#include "dippas/nn/tensor.hpp"

namespace dippas::nn {

struct GeneratorConfig {
  std::size_t depth = 4;            // encoder / decoder levels
  std::size_t base_features = 512;  // nominal width of the first MultiRes block
  std::size_t input_channels = 3;
  std::size_t output_channels = 3;
  double negative_slope = 0.2;      // LeakyReLU
};

// Throws ConfigError for a zero depth, width or channel count, or a negative slope.
void validate(const GeneratorConfig& config);

// Nominal width at encoder level `level` (1-based); level depth + 1 is the bottleneck.
// Doubles per level, capped at four times the base.
std::size_t level_width(const GeneratorConfig& config, std::size_t level);

// Initial value of the trainable fingerprint-injection gain.
inline constexpr double kInitialInjectionGain = 0.01;

// U-shaped MultiRes generator:
//   encoder:  MultiRes block, then a stride-2 3x3 convolution unit, per level
//   skips:    residual paths of (depth - level) units
//   decoder:  nearest x2 upsampling, concatenation with the skip, MultiRes block
//   head:     1x1 convolution with bias, sigmoid
// Holds all trainable parameters, including the injection gain, and the
// activations of the most recent forward() needed by backward().
template <typename T>
class Generator {
 public:
  // Weights drawn reproducibly from `seed`.
  Generator(const GeneratorConfig& config, std::uint64_t seed);
  // parameters() points into the members.
  Generator(const Generator&) = delete;
  Generator& operator=(const Generator&) = delete;

  // Output in (0, 1) with output_channels planes and the input's extent.
  // Throws DimensionError if the extent is not divisible by 2^depth or the
  // channel count differs from input_channels.
  Tensor<T> forward(const Tensor<T>& z);

  // Gradient with respect to the most recent forward() output; accumulates
  // into every parameter gradient except the injection gain.
  void backward(const Tensor<T>& grad_output);

  void zero_grad();

  // Every network parameter in a fixed order, followed by the injection gain.
  const ParamList<T>& parameters() const noexcept { return params_; }
  Param<T>& injection_gain() noexcept { return gain_; }
  T gamma() const noexcept { return gain_.value[0]; }

  const GeneratorConfig& config() const noexcept { return config_; }
  std::size_t parameter_count() const;

 private:
  GeneratorConfig config_;
  std::vector<MultiResBlock<T>> encoders_;
  std::vector<ConvUnit<T>> downsamplers_;
  std::vector<ResidualPath<T>> skips_;
  MultiResBlock<T> bottleneck_;
  std::vector<MultiResBlock<T>> decoders_;
  Conv2d<T> head_;
  Param<T> gain_;
  ParamList<T> params_;

  std::vector<std::size_t> upsampled_channels_;
  Tensor<T> output_;
};

extern template class Generator<float>;
extern template class Generator<double>;

}  // namespace dippas::nn
