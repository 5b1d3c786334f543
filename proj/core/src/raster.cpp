#include "dippas/raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dippas/errors.hpp"

namespace dippas {

std::string to_string(const Shape& shape) {
  return std::to_string(shape.height) + "x" + std::to_string(shape.width) + "x" +
         std::to_string(shape.channels);
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": shape mismatch " + to_string(a) + " vs " +
                         to_string(b));
  }
}

namespace {

void check_extent(const Shape& shape, std::size_t n) {
  if (shape.height == 0 || shape.width == 0 || shape.channels == 0) {
    throw DimensionError("image extent must be strictly positive, got " + to_string(shape));
  }
  if (shape.size() != n) {
    throw DimensionError("buffer holds " + std::to_string(n) + " values, shape " +
                         to_string(shape) + " needs " + std::to_string(shape.size()));
  }
}

}  // namespace

RasterImage::RasterImage(Shape shape, std::vector<double> pixels)
    : shape_(shape), pixels_(std::move(pixels)) {
  check_extent(shape_, pixels_.size());
  for (double v : pixels_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::domain_error("pixel value outside [0, 1]: " + std::to_string(v));
    }
  }
}

RasterImage RasterImage::filled(Shape shape, double value) {
  return RasterImage(shape, std::vector<double>(shape.size(), value));
}

RasterImage RasterImage::clipped(Shape shape, std::vector<double> values) {
  for (double& v : values) {
    if (std::isnan(v)) throw std::domain_error("NaN pixel value");
    v = std::clamp(v, 0.0, 1.0);
  }
  return RasterImage(shape, std::move(values));
}

const char* to_string(FingerprintKind kind) {
  return kind == FingerprintKind::device_prnu ? "device_prnu" : "noise_residual";
}

Fingerprint::Fingerprint(Shape shape_in, std::vector<double> pattern_in, FingerprintKind kind_in)
    : shape(shape_in), pattern(std::move(pattern_in)), kind(kind_in) {
  check_extent(shape, pattern.size());
}

Fingerprint Fingerprint::normalized(Shape shape, std::vector<double> pattern,
                                    FingerprintKind kind) {
  Fingerprint fp(shape, std::move(pattern), kind);
  zero_mean_per_channel(fp.pattern, fp.shape);
  return fp;
}

std::vector<double> channel_means(std::span<const double> values, const Shape& shape) {
  std::vector<double> sums(shape.channels, 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) sums[i % shape.channels] += values[i];
  for (double& s : sums) s /= static_cast<double>(shape.pixels());
  return sums;
}

void zero_mean_per_channel(std::span<double> values, const Shape& shape) {
  const auto means = channel_means(values, shape);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= means[i % shape.channels];
}

std::vector<double> extract_channel(std::span<const double> values, const Shape& shape,
                                    std::size_t c) {
  std::vector<double> plane(shape.pixels());
  for (std::size_t p = 0; p < plane.size(); ++p) plane[p] = values[p * shape.channels + c];
  return plane;
}

}  // namespace dippas
