#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Orthogonal 8-tap Daubechies transform with periodic extension, Mallat layout.
namespace dippas::wavelet {

inline constexpr std::size_t kTaps = 8;

// Decomposition lowpass filter, normalized so the taps sum to sqrt(2).
std::span<const double> lowpass();
// Quadrature mirror of lowpass(): g[n] = (-1)^n h[7 - n].
std::span<const double> highpass();

struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  Plane() = default;
  Plane(std::size_t h, std::size_t w) : height(h), width(w), values(h * w, 0.0) {}
  Plane(std::size_t h, std::size_t w, std::vector<double> v)
      : height(h), width(w), values(std::move(v)) {}

  double& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
};

// One analysis step of an even-length periodic signal into halves.
void analyze(std::span<const double> signal, std::span<double> approx, std::span<double> detail);
void synthesize(std::span<const double> approx, std::span<const double> detail,
                std::span<double> signal);

// In-place multi-level 2-D transform. After `levels` steps the top-left
// (H >> levels) x (W >> levels) region holds the approximation and level l
// details occupy the three quadrants next to the (H >> l) x (W >> l) corner.
// Throws DimensionError unless both extents are divisible by 2^levels.
void forward(Plane& plane, int levels);
void inverse(Plane& plane, int levels);

// Half-sample symmetric extension of a plane to at least (height, width).
Plane mirror_pad(const Plane& plane, std::size_t height, std::size_t width);

}  // namespace dippas::wavelet
