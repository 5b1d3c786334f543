#include "dippas/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dippas/errors.hpp"

namespace dippas {

double psnr(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw DimensionError("psnr: operand sizes differ (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double psnr(const RasterImage& a, const RasterImage& b) {
  require_same_shape(a.shape(), b.shape(), "psnr");
  return psnr(a.pixels(), b.pixels());
}

}  // namespace dippas
