#include "dippas/dip.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dippas/errors.hpp"
#include "dippas/fingerprint.hpp"
#include "dippas/metrics.hpp"
#include "dippas/nn/adam.hpp"
#include "dippas/rng.hpp"

namespace dippas {

SeedNoise make_seed_noise(std::size_t height, std::size_t width, std::size_t channels,
                          std::uint64_t base_seed) {
  SeedNoise z;
  z.shape = Shape{height, width, channels};
  z.base_seed = base_seed;
  z.values.resize(z.shape.size());
  auto rng = make_rng({base_seed});
  fill_gaussian(z.values, 0.0, SeedNoise::kStddev, rng);
  return z;
}

SeedNoise perturb_seed(const SeedNoise& z, double sigma, std::size_t iteration) {
  if (!(sigma >= 0.0)) throw ConfigError("perturb_seed: sigma must be >= 0");
  SeedNoise out = z;
  if (sigma == 0.0) return out;
  std::vector<double> noise(z.values.size());
  auto rng = make_rng({z.base_seed, static_cast<std::uint64_t>(iteration)});
  fill_gaussian(noise, 0.0, sigma, rng);
  for (std::size_t i = 0; i < noise.size(); ++i) out.values[i] += noise[i];
  return out;
}

template <typename T>
nn::Tensor<T> to_planar(std::span<const double> channel_last, const Shape& shape) {
  nn::Tensor<T> t(shape.channels, shape.height, shape.width);
  for (std::size_t c = 0; c < shape.channels; ++c) {
    T* dst = t.channel(c);
    for (std::size_t p = 0; p < shape.pixels(); ++p) {
      dst[p] = static_cast<T>(channel_last[p * shape.channels + c]);
    }
  }
  return t;
}

template <typename T>
std::vector<double> to_channel_last(const nn::Tensor<T>& planar) {
  const std::size_t channels = planar.channels;
  std::vector<double> out(planar.size());
  for (std::size_t c = 0; c < channels; ++c) {
    const T* src = planar.channel(c);
    for (std::size_t p = 0; p < planar.plane(); ++p) out[p * channels + c] = src[p];
  }
  return out;
}

template <typename T>
RasterImage generator_forward(nn::Generator<T>& generator, const SeedNoise& z) {
  const nn::Tensor<T> out = generator.forward(to_planar<T>(z.values, z.shape));
  return RasterImage::clipped(Shape{out.height, out.width, out.channels}, to_channel_last(out));
}

double dip_loss(const RasterImage& generated, const RasterImage& target, const Fingerprint& p,
                double gamma) {
  require_same_shape(generated.shape(), target.shape(), "dip_loss");
  require_same_shape(generated.shape(), p.shape, "dip_loss");
  if (!(gamma >= 0.0)) throw ConfigError("dip_loss: gamma must be >= 0");
  const auto g = generated.pixels();
  const auto t = target.pixels();
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = g[i] * (1.0 + gamma * p.pattern[i]) - t[i];
    sum += r * r;
  }
  return sum;
}

template <typename T>
InjectionObjective<T>::InjectionObjective(const RasterImage& target, const Fingerprint& p)
    : shape_(target.shape()) {
  require_same_shape(target.shape(), p.shape, "InjectionObjective");
  const auto planar_target = to_planar<double>(target.pixels(), shape_);
  const auto planar_pattern = to_planar<double>(p.pattern, shape_);
  target_ = planar_target.data;
  pattern_ = planar_pattern.data;
}

template <typename T>
double InjectionObjective<T>::value(const nn::Tensor<T>& generated, double gamma) const {
  if (generated.size() != target_.size()) {
    throw DimensionError("injection objective: generated image size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < target_.size(); ++i) {
    const double r = generated.data[i] * (1.0 + gamma * pattern_[i]) - target_[i];
    sum += r * r;
  }
  return sum;
}

template <typename T>
double InjectionObjective<T>::value_and_gradient(const nn::Tensor<T>& generated, double gamma,
                                                 nn::Tensor<T>& grad, double& grad_gamma) const {
  if (generated.size() != target_.size()) {
    throw DimensionError("injection objective: generated image size mismatch");
  }
  grad.resize(generated.channels, generated.height, generated.width);
  double sum = 0.0;
  double dgamma = 0.0;
  for (std::size_t i = 0; i < target_.size(); ++i) {
    const double x = generated.data[i];
    const double m = 1.0 + gamma * pattern_[i];
    const double r = x * m - target_[i];
    sum += r * r;
    grad.data[i] = static_cast<T>(2.0 * r * m);
    dgamma += 2.0 * r * x * pattern_[i];
  }
  grad_gamma = dgamma;
  return sum;
}

template <typename T>
double InjectionObjective<T>::psnr(const nn::Tensor<T>& generated) const {
  if (generated.size() != target_.size()) {
    throw DimensionError("injection objective: generated image size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < target_.size(); ++i) {
    const double d = generated.data[i] - target_[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(target_.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

void validate(const DipRunConfig& config) {
  if (config.max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(config.perturbation_sigma >= 0.0)) throw ConfigError("perturbation_sigma must be >= 0");
  if (!(config.tau_psnr_db >= 0.0) || !(config.tau_psnr_db <= config.stop_psnr_db)) {
    throw ConfigError("need 0 <= tau_psnr_db <= stop_psnr_db, got tau = " +
                      std::to_string(config.tau_psnr_db) +
                      ", stop = " + std::to_string(config.stop_psnr_db));
  }
}

SnapshotPool run_dip(const RasterImage& target, const Fingerprint& p,
                     const GeneratorConfig& gen_config, const DipRunConfig& run_config,
                     const TraceObserver& observer) {
  validate(run_config);
  nn::validate(gen_config);
  require_same_shape(target.shape(), p.shape, "run_dip");
  if (gen_config.output_channels != target.channels()) {
    throw DimensionError("run_dip: generator emits " + std::to_string(gen_config.output_channels) +
                         " channels, target has " + std::to_string(target.channels()));
  }
  const std::size_t step = std::size_t{1} << gen_config.depth;
  if (target.height() % step != 0 || target.width() % step != 0) {
    throw DimensionError("run_dip: target " + to_string(target.shape()) +
                         " is not divisible by 2^depth = " + std::to_string(step));
  }

  nn::Generator<float> generator(gen_config, run_config.generator_seed);
  const SeedNoise z = make_seed_noise(target.height(), target.width(), gen_config.input_channels,
                                      run_config.noise_seed);
  const InjectionObjective<float> objective(target, p);
  nn::Adam<float> adam(generator.parameters(),
                       nn::AdamConfig{.learning_rate = run_config.learning_rate});
  nn::Param<float>& gain = generator.injection_gain();

  SnapshotPool pool(run_config.snapshot_capacity, run_config.spill_dir);
  nn::Tensor<float> grad;
  double best_psnr = -std::numeric_limits<double>::infinity();
  std::size_t iteration = 0;

  while (iteration < run_config.max_iterations) {
    ++iteration;
    const SeedNoise zt = perturb_seed(z, run_config.perturbation_sigma, iteration);
    const nn::Tensor<float> out = generator.forward(to_planar<float>(zt.values, zt.shape));

    const double gamma = gain.value[0];
    double grad_gamma = 0.0;
    const double loss = objective.value_and_gradient(out, gamma, grad, grad_gamma);
    if (!std::isfinite(loss) || !std::isfinite(grad_gamma)) {
      throw NumericalError("run_dip: non-finite objective at iteration " +
                           std::to_string(iteration) + " (J = " + std::to_string(loss) +
                           ", gamma = " + std::to_string(gamma) + ")");
    }
    const double quality = objective.psnr(out);
    best_psnr = std::max(best_psnr, quality);

    TraceRecord record{iteration, loss, quality, gamma, std::nullopt};
    const bool keep = quality >= run_config.tau_psnr_db;
    const bool probe = run_config.ncc_probe_interval > 0 &&
                       (iteration == 1 || iteration % run_config.ncc_probe_interval == 0);
    std::optional<RasterImage> image;
    if (keep || probe) {
      image = RasterImage::clipped(target.shape(), to_channel_last(out));
    }
    if (probe) {
      try {
        record.fingerprint_ncc = fingerprint_ncc(*image, p);
      } catch (const DegenerateInputError&) {
        record.fingerprint_ncc = 0.0;
      }
    }

    generator.zero_grad();
    generator.backward(grad);
    gain.grad[0] = static_cast<float>(grad_gamma);
    adam.step();
    gain.value[0] = std::max(gain.value[0], 0.0f);

    pool.trace.push_back(record);
    if (observer) observer(record);
    if (keep) pool.append(iteration, std::move(*image), quality);
    if (quality >= run_config.stop_psnr_db) break;
  }

  pool.final_gamma = gain.value[0];
  if (pool.empty()) {
    throw EmptyPoolError("run_dip: no iteration reached tau_psnr = " +
                             std::to_string(run_config.tau_psnr_db) + " dB (best " +
                             std::to_string(best_psnr) + " dB after " +
                             std::to_string(iteration) + " iterations)",
                         best_psnr, iteration);
  }
  return pool;
}

template class InjectionObjective<float>;
template class InjectionObjective<double>;
template nn::Tensor<float> to_planar<float>(std::span<const double>, const Shape&);
template nn::Tensor<double> to_planar<double>(std::span<const double>, const Shape&);
template std::vector<double> to_channel_last(const nn::Tensor<float>&);
template std::vector<double> to_channel_last(const nn::Tensor<double>&);
template RasterImage generator_forward(nn::Generator<float>&, const SeedNoise&);
template RasterImage generator_forward(nn::Generator<double>&, const SeedNoise&);

}  // namespace dippas
