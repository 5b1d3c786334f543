#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dippas {

// Height x width x channels, stored row-major with the channel index fastest.
struct Shape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t pixels() const noexcept { return height * width; }
  std::size_t size() const noexcept { return height * width * channels; }
  std::size_t index(std::size_t y, std::size_t x, std::size_t c) const noexcept {
    return (y * width + x) * channels + c;
  }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& shape);

// Throws DimensionError unless both shapes are equal; `what` names the operation.
void require_same_shape(const Shape& a, const Shape& b, const char* what);

// Intensity image with every value in [0, 1].
class RasterImage {
 public:
  RasterImage() = default;

  // Throws DimensionError on a zero extent or size mismatch and
  // std::domain_error on values outside [0, 1] or NaN.
  RasterImage(Shape shape, std::vector<double> pixels);

  static RasterImage filled(Shape shape, double value);
  // Clamps every value into [0, 1]; NaN is rejected.
  static RasterImage clipped(Shape shape, std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t height() const noexcept { return shape_.height; }
  std::size_t width() const noexcept { return shape_.width; }
  std::size_t channels() const noexcept { return shape_.channels; }

  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels_[shape_.index(y, x, c)];
  }
  std::span<const double> pixels() const noexcept { return pixels_; }

  bool operator==(const RasterImage&) const = default;

 private:
  Shape shape_;
  std::vector<double> pixels_;
};

enum class FingerprintKind : unsigned char { device_prnu = 0, noise_residual = 1 };

const char* to_string(FingerprintKind kind);

// A zero-mean noise pattern: either a device PRNU estimate or a single image residual.
struct Fingerprint {
  Shape shape;
  std::vector<double> pattern;
  FingerprintKind kind = FingerprintKind::device_prnu;

  Fingerprint() = default;
  // Throws DimensionError if the pattern size does not match the shape.
  Fingerprint(Shape shape, std::vector<double> pattern, FingerprintKind kind);

  // Same as the constructor, but subtracts the per-channel mean first.
  static Fingerprint normalized(Shape shape, std::vector<double> pattern, FingerprintKind kind);
};

// Subtracts the per-channel mean of a channel-last volume in place.
void zero_mean_per_channel(std::span<double> values, const Shape& shape);

std::vector<double> channel_means(std::span<const double> values, const Shape& shape);

// Single channel `c` of a channel-last volume, as a contiguous H*W plane.
std::vector<double> extract_channel(std::span<const double> values, const Shape& shape,
                                    std::size_t c);

}  // namespace dippas
