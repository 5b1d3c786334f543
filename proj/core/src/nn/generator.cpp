#include "dippas/nn/generator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dippas/errors.hpp"
#include "dippas/rng.hpp"

namespace dippas::nn {

void validate(const GeneratorConfig& config) {
  if (config.depth < 1) throw ConfigError("generator depth must be >= 1");
  if (config.base_features < 1) throw ConfigError("generator base_features must be >= 1");
  if (config.input_channels < 1 || config.output_channels < 1) {
    throw ConfigError("generator channel counts must be >= 1");
  }
  if (!(config.negative_slope >= 0.0)) throw ConfigError("negative_slope must be >= 0");
}

std::size_t level_width(const GeneratorConfig& config, std::size_t level) {
  const std::size_t factor = std::min<std::size_t>(std::size_t{1} << (level - 1), 4);
  return config.base_features * factor;
}

template <typename T>
Generator<T>::Generator(const GeneratorConfig& config, std::uint64_t seed)
    : config_(config), gain_("injection_gain", 1) {
  validate(config_);
  const T slope = static_cast<T>(config_.negative_slope);
  const std::size_t depth = config_.depth;

  std::vector<std::size_t> widths;
  std::size_t channels = config_.input_channels;
  for (std::size_t level = 1; level <= depth; ++level) {
    const std::string name = "enc" + std::to_string(level);
    encoders_.emplace_back(name, channels, level_width(config_, level), slope);
    const std::size_t width = encoders_.back().out_channels();
    widths.push_back(width);
    skips_.emplace_back("skip" + std::to_string(level), width, depth - level, slope);
    downsamplers_.emplace_back("down" + std::to_string(level), width, width, 3, 2, slope);
    channels = width;
  }
  bottleneck_ = MultiResBlock<T>("bottleneck", channels, level_width(config_, depth + 1), slope);
  channels = bottleneck_.out_channels();

  // decoders_[l] serves level l + 1; built deepest first so channel counts chain.
  decoders_.resize(depth);
  upsampled_channels_.assign(depth, 0);
  for (std::size_t l = depth; l-- > 0;) {
    upsampled_channels_[l] = channels;
    decoders_[l] = MultiResBlock<T>("dec" + std::to_string(l + 1), channels + widths[l],
                                    level_width(config_, l + 1), slope);
    channels = decoders_[l].out_channels();
  }
  head_ = Conv2d<T>("head", channels, config_.output_channels, 1, 1, true);

  auto rng = make_rng({seed});
  for (std::size_t l = 0; l < depth; ++l) {
    encoders_[l].init(rng);
    skips_[l].init(rng);
    downsamplers_[l].init(rng);
  }
  bottleneck_.init(rng);
  for (std::size_t l = depth; l-- > 0;) decoders_[l].init(rng);
  head_.init(rng);
  gain_.value[0] = static_cast<T>(kInitialInjectionGain);

  for (std::size_t l = 0; l < depth; ++l) {
    encoders_[l].collect(params_);
    skips_[l].collect(params_);
    downsamplers_[l].collect(params_);
  }
  bottleneck_.collect(params_);
  for (std::size_t l = depth; l-- > 0;) decoders_[l].collect(params_);
  head_.collect(params_);
  params_.push_back(&gain_);
}

template <typename T>
Tensor<T> Generator<T>::forward(const Tensor<T>& z) {
  const std::size_t step = std::size_t{1} << config_.depth;
  if (z.height == 0 || z.width == 0 || z.height % step != 0 || z.width % step != 0) {
    throw DimensionError("generator input " + std::to_string(z.height) + "x" +
                         std::to_string(z.width) + " is not divisible by 2^depth = " +
                         std::to_string(step));
  }
  if (z.channels != config_.input_channels) {
    throw DimensionError("generator expects " + std::to_string(config_.input_channels) +
                         " input channels, got " + std::to_string(z.channels));
  }

  const std::size_t depth = config_.depth;
  std::vector<Tensor<T>> skip_out(depth);
  Tensor<T> x = z;
  for (std::size_t l = 0; l < depth; ++l) {
    Tensor<T> e = encoders_[l].forward(x);
    skip_out[l] = skips_[l].forward(e);
    x = downsamplers_[l].forward(e);
  }
  x = bottleneck_.forward(x);
  for (std::size_t l = depth; l-- > 0;) {
    x = decoders_[l].forward(concat_channels(upsample_nearest2(x), skip_out[l]));
  }
  output_ = head_.forward(x);
  for (T& v : output_.data) v = T(1) / (T(1) + std::exp(-v));
  return output_;
}

template <typename T>
void Generator<T>::backward(const Tensor<T>& grad_output) {
  if (grad_output.size() != output_.size()) {
    throw DimensionError("generator backward: gradient does not match the last output");
  }
  const std::size_t depth = config_.depth;
  Tensor<T> g = grad_output;
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    const T y = output_.data[i];
    g.data[i] *= y * (T(1) - y);
  }
  g = head_.backward(g);

  std::vector<Tensor<T>> skip_grad(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    const Tensor<T> joined = decoders_[l].backward(g);
    Tensor<T> up;
    split_channels(joined, upsampled_channels_[l], up, skip_grad[l]);
    g = upsample_nearest2_backward(up);
  }
  g = bottleneck_.backward(g);
  for (std::size_t l = depth; l-- > 0;) {
    Tensor<T> de = downsamplers_[l].backward(g);
    const Tensor<T> ds = skips_[l].backward(skip_grad[l]);
    for (std::size_t i = 0; i < de.data.size(); ++i) de.data[i] += ds.data[i];
    g = encoders_[l].backward(de);
  }
}

template <typename T>
void Generator<T>::zero_grad() {
  for (Param<T>* p : params_) std::fill(p->grad.begin(), p->grad.end(), T(0));
}

template <typename T>
std::size_t Generator<T>::parameter_count() const {
  std::size_t n = 0;
  for (const Param<T>* p : params_) n += p->value.size();
  return n;
}

template class Generator<float>;
template class Generator<double>;

}  // namespace dippas::nn
