#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "dippas/raster.hpp"

namespace dippas {

// Forward sensor model parameters: I = I0 (1 + gamma K) + Theta.
struct SensorNoiseParams {
  double gamma = 0.0;        // PRNU weight
  double theta_sigma = 0.0;  // std of the additive noise Theta
};

struct SensorSynthesis {
  RasterImage image;
  double clipped_fraction = 0.0;  // share of values clamped into [0, 1]
};

// Evaluates the sensor model with Theta drawn from `rng_seed`, then clips to [0, 1].
// Throws DimensionError on shape mismatch, ConfigError on negative parameters
// or a fingerprint that is not a device PRNU.
SensorSynthesis synthesize_sensor_image(const RasterImage& clean, const Fingerprint& k,
                                        const SensorNoiseParams& params, std::uint64_t rng_seed);

struct WienerDenoiseParams {
  int levels = 4;
  double noise_variance = 9.0 / (255.0 * 255.0);
  std::array<std::size_t, 4> windows = {3, 5, 7, 9};
};

// Minimum spatial extent accepted by denoise(): one sample per level-`levels` band.
std::size_t min_denoise_extent(const WienerDenoiseParams& params = {});

// Locally adaptive Wiener shrinkage of one detail band (row-major, h x w).
// The signal variance at each coefficient is the smallest of the windowed
// estimates max(0, mean(c^2) - noise_variance); windows are truncated at the border.
std::vector<double> wiener_shrink(std::span<const double> band, std::size_t height,
                                  std::size_t width, double noise_variance,
                                  std::span<const std::size_t> windows);

// Wavelet-domain Wiener denoiser, applied per channel. Extents not divisible
// by 2^levels are mirror-padded and cropped back. Output is not clipped.
// Throws DimensionError if either extent is below min_denoise_extent().
std::vector<double> denoise_values(const RasterImage& image,
                                   const WienerDenoiseParams& params = {});
RasterImage denoise(const RasterImage& image, const WienerDenoiseParams& params = {});

// W = I - denoise(I), zero-meaned per channel.
Fingerprint extract_noise_residual(const RasterImage& image,
                                   const WienerDenoiseParams& params = {});

// Denominator threshold below which the MLE estimate is set to zero.
inline constexpr double kMleDenominatorFloor = 1e-6;

// K = sum(W_i * I_i) / sum(I_i^2) elementwise, zero-meaned per channel.
// Throws std::invalid_argument on an empty list, DimensionError on mixed shapes.
Fingerprint estimate_prnu_mle(std::span<const RasterImage> flats,
                              const WienerDenoiseParams& params = {});

// The attribution statistic ncc(W(image), image * K).
// Throws ConfigError if k is not a device PRNU, DegenerateInputError on zero-norm operands.
double device_ncc(const RasterImage& image, const Fingerprint& k,
                  const WienerDenoiseParams& params = {});

// ncc(W(image), image * P) for any fingerprint kind.
double fingerprint_ncc(const RasterImage& image, const Fingerprint& p,
                       const WienerDenoiseParams& params = {});

// image * pattern, elementwise.
std::vector<double> modulate(const RasterImage& image, const Fingerprint& p);

}  // namespace dippas
