#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "dippas/nn/generator.hpp"
#include "dippas/raster.hpp"
#include "dippas/snapshot_pool.hpp"

namespace dippas {

using nn::GeneratorConfig;

// Generator input z: gaussian, zero mean, std 0.1, channel-last H x W x C_in.
struct SeedNoise {
  static constexpr double kStddev = 0.1;

  Shape shape;
  std::vector<double> values;
  std::uint64_t base_seed = 0;
};

SeedNoise make_seed_noise(std::size_t height, std::size_t width, std::size_t channels,
                          std::uint64_t base_seed);

// z + N(0, sigma^2), drawn from (z.base_seed, iteration). The perturbation is
// fresh for every iteration and never accumulated into z.
// Throws ConfigError on negative sigma.
SeedNoise perturb_seed(const SeedNoise& z, double sigma, std::size_t iteration);

// Forward pass of `generator` on `z`, as an image in (0, 1).
template <typename T>
RasterImage generator_forward(nn::Generator<T>& generator, const SeedNoise& z);

// |generated * (1 + gamma P) - target|_F^2.
// Throws DimensionError on shape mismatch, ConfigError on negative gamma.
double dip_loss(const RasterImage& generated, const RasterImage& target, const Fingerprint& p,
                double gamma);

// Injection objective over planar generator outputs, with its gradient.
template <typename T>
class InjectionObjective {
 public:
  InjectionObjective(const RasterImage& target, const Fingerprint& p);

  double value(const nn::Tensor<T>& generated, double gamma) const;
  // Writes dJ/d(generated) into `grad` and returns J; dJ/dgamma into `grad_gamma`.
  double value_and_gradient(const nn::Tensor<T>& generated, double gamma, nn::Tensor<T>& grad,
                            double& grad_gamma) const;
  // PSNR of the generated image (without injection) against the target.
  double psnr(const nn::Tensor<T>& generated) const;

 private:
  Shape shape_;
  std::vector<double> target_;  // planar
  std::vector<double> pattern_;  // planar
};

extern template class InjectionObjective<float>;
extern template class InjectionObjective<double>;

// Planar <-> channel-last conversion helpers.
template <typename T>
nn::Tensor<T> to_planar(std::span<const double> channel_last, const Shape& shape);
template <typename T>
std::vector<double> to_channel_last(const nn::Tensor<T>& planar);

struct DipRunConfig {
  double learning_rate = 1e-3;
  std::size_t max_iterations = 10000;
  double stop_psnr_db = 39.0;
  double tau_psnr_db = 30.0;
  double perturbation_sigma = 0.1;
  std::size_t snapshot_capacity = 256;
  std::uint64_t generator_seed = 0;
  std::uint64_t noise_seed = 1;
  // Every n-th iteration the generated image's fingerprint NCC is logged; 0 disables.
  std::size_t ncc_probe_interval = 0;
  // Where snapshots beyond snapshot_capacity are written; empty = private temp dir.
  std::filesystem::path spill_dir;
};

// Throws ConfigError unless 0 <= tau <= stop, max_iterations >= 1,
// learning_rate > 0 and perturbation_sigma >= 0.
void validate(const DipRunConfig& config);

// Called after every iteration with its trace record.
using TraceObserver = std::function<void(const TraceRecord&)>;

// Fits the generator so that its output, with the fingerprint injected,
// matches the target. Each iteration: perturb z, forward, evaluate J, Adam
// step over the network weights and the injection gain, project the gain to
// >= 0; the generated image joins the pool when its PSNR reaches tau; the run
// stops once the PSNR reaches stop or after max_iterations.
// Throws EmptyPoolError if no iteration reached tau, NumericalError on a
// non-finite objective, DimensionError / ConfigError on invalid input.
SnapshotPool run_dip(const RasterImage& target, const Fingerprint& p,
                     const GeneratorConfig& gen_config, const DipRunConfig& run_config,
                     const TraceObserver& observer = {});

}  // namespace dippas
