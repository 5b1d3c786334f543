#include "dippas/fingerprint.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "dippas/errors.hpp"
#include "dippas/ncc.hpp"
#include "dippas/rng.hpp"
#include "dippas/wavelet.hpp"

namespace dippas {

SensorSynthesis synthesize_sensor_image(const RasterImage& clean, const Fingerprint& k,
                                        const SensorNoiseParams& params,
                                        std::uint64_t rng_seed) {
  require_same_shape(clean.shape(), k.shape, "synthesize_sensor_image");
  if (k.kind != FingerprintKind::device_prnu) {
    throw ConfigError("synthesize_sensor_image: fingerprint must be a device PRNU");
  }
  if (!(params.gamma >= 0.0)) throw ConfigError("synthesize_sensor_image: gamma must be >= 0");
  if (!(params.theta_sigma >= 0.0)) {
    throw ConfigError("synthesize_sensor_image: theta_sigma must be >= 0");
  }

  const auto src = clean.pixels();
  std::vector<double> theta(src.size(), 0.0);
  if (params.theta_sigma > 0.0) {
    auto rng = make_rng({rng_seed});
    fill_gaussian(theta, 0.0, params.theta_sigma, rng);
  }

  std::vector<double> out(src.size());
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = src[i] * (1.0 + params.gamma * k.pattern[i]) + theta[i];
    const double c = std::clamp(v, 0.0, 1.0);
    if (c != v) ++clipped;
    out[i] = c;
  }
  return {RasterImage(clean.shape(), std::move(out)),
          static_cast<double>(clipped) / static_cast<double>(src.size())};
}

std::size_t min_denoise_extent(const WienerDenoiseParams& params) {
  return std::size_t{1} << params.levels;
}

std::vector<double> wiener_shrink(std::span<const double> band, std::size_t height,
                                  std::size_t width, double noise_variance,
                                  std::span<const std::size_t> windows) {
  // Summed-area table of squared coefficients, (h+1) x (w+1).
  const std::size_t stride = width + 1;
  std::vector<double> integral((height + 1) * stride, 0.0);
  for (std::size_t y = 0; y < height; ++y) {
    double row = 0.0;
    for (std::size_t x = 0; x < width; ++x) {
      const double c = band[y * width + x];
      row += c * c;
      integral[(y + 1) * stride + x + 1] = integral[y * stride + x + 1] + row;
    }
  }

  std::vector<double> out(band.size());
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double variance = std::numeric_limits<double>::infinity();
      for (std::size_t win : windows) {
        const std::size_t r = win / 2;
        const std::size_t y0 = y >= r ? y - r : 0;
        const std::size_t x0 = x >= r ? x - r : 0;
        const std::size_t y1 = std::min(height, y + r + 1);
        const std::size_t x1 = std::min(width, x + r + 1);
        const double sum = integral[y1 * stride + x1] - integral[y0 * stride + x1] -
                           integral[y1 * stride + x0] + integral[y0 * stride + x0];
        const double mean_sq = sum / static_cast<double>((y1 - y0) * (x1 - x0));
        variance = std::min(variance, std::max(0.0, mean_sq - noise_variance));
      }
      const double c = band[y * width + x];
      out[y * width + x] = c * variance / (variance + noise_variance);
    }
  }
  return out;
}

namespace {

void shrink_quadrant(wavelet::Plane& plane, std::size_t y0, std::size_t x0, std::size_t h,
                     std::size_t w, const WienerDenoiseParams& params) {
  std::vector<double> band(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) band[y * w + x] = plane.at(y0 + y, x0 + x);
  }
  const auto shrunk = wiener_shrink(band, h, w, params.noise_variance, params.windows);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) plane.at(y0 + y, x0 + x) = shrunk[y * w + x];
  }
}

std::size_t round_up(std::size_t n, std::size_t step) { return (n + step - 1) / step * step; }

}  // namespace

std::vector<double> denoise_values(const RasterImage& image, const WienerDenoiseParams& params) {
  const Shape& shape = image.shape();
  const std::size_t min_extent = min_denoise_extent(params);
  if (shape.height < min_extent || shape.width < min_extent) {
    throw DimensionError("denoise: image " + to_string(shape) + " is smaller than the " +
                         std::to_string(min_extent) + "x" + std::to_string(min_extent) +
                         " minimum for a " + std::to_string(params.levels) +
                         "-level decomposition");
  }
  const std::size_t padded_h = round_up(shape.height, min_extent);
  const std::size_t padded_w = round_up(shape.width, min_extent);

  std::vector<double> out(shape.size());
  for (std::size_t c = 0; c < shape.channels; ++c) {
    wavelet::Plane plane(shape.height, shape.width,
                         extract_channel(image.pixels(), shape, c));
    if (padded_h != shape.height || padded_w != shape.width) {
      plane = wavelet::mirror_pad(plane, padded_h, padded_w);
    }
    wavelet::forward(plane, params.levels);
    for (int level = 1; level <= params.levels; ++level) {
      const std::size_t h = padded_h >> level;
      const std::size_t w = padded_w >> level;
      shrink_quadrant(plane, 0, w, h, w, params);
      shrink_quadrant(plane, h, 0, h, w, params);
      shrink_quadrant(plane, h, w, h, w, params);
    }
    wavelet::inverse(plane, params.levels);
    for (std::size_t y = 0; y < shape.height; ++y) {
      for (std::size_t x = 0; x < shape.width; ++x) {
        out[shape.index(y, x, c)] = plane.at(y, x);
      }
    }
  }
  return out;
}

RasterImage denoise(const RasterImage& image, const WienerDenoiseParams& params) {
  return RasterImage::clipped(image.shape(), denoise_values(image, params));
}

Fingerprint extract_noise_residual(const RasterImage& image, const WienerDenoiseParams& params) {
  auto residual = denoise_values(image, params);
  const auto src = image.pixels();
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = src[i] - residual[i];
  return Fingerprint::normalized(image.shape(), std::move(residual),
                                 FingerprintKind::noise_residual);
}

Fingerprint estimate_prnu_mle(std::span<const RasterImage> flats,
                              const WienerDenoiseParams& params) {
  if (flats.empty()) throw std::invalid_argument("estimate_prnu_mle: no flat-field images");
  const Shape shape = flats.front().shape();
  std::vector<double> numerator(shape.size(), 0.0);
  std::vector<double> denominator(shape.size(), 0.0);
  for (const RasterImage& flat : flats) {
    require_same_shape(flat.shape(), shape, "estimate_prnu_mle");
    const Fingerprint w = extract_noise_residual(flat, params);
    const auto px = flat.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
      numerator[i] += w.pattern[i] * px[i];
      denominator[i] += px[i] * px[i];
    }
  }
  for (std::size_t i = 0; i < numerator.size(); ++i) {
    numerator[i] = denominator[i] < kMleDenominatorFloor ? 0.0 : numerator[i] / denominator[i];
  }
  return Fingerprint::normalized(shape, std::move(numerator), FingerprintKind::device_prnu);
}

std::vector<double> modulate(const RasterImage& image, const Fingerprint& p) {
  require_same_shape(image.shape(), p.shape, "modulate");
  const auto px = image.pixels();
  std::vector<double> out(px.size());
  for (std::size_t i = 0; i < px.size(); ++i) out[i] = px[i] * p.pattern[i];
  return out;
}

double fingerprint_ncc(const RasterImage& image, const Fingerprint& p,
                       const WienerDenoiseParams& params) {
  require_same_shape(image.shape(), p.shape, "fingerprint_ncc");
  const Fingerprint w = extract_noise_residual(image, params);
  return ncc(w.pattern, modulate(image, p));
}

double device_ncc(const RasterImage& image, const Fingerprint& k,
                  const WienerDenoiseParams& params) {
  if (k.kind != FingerprintKind::device_prnu) {
    throw ConfigError("device_ncc: fingerprint must be a device PRNU");
  }
  return fingerprint_ncc(image, k, params);
}

}  // namespace dippas
