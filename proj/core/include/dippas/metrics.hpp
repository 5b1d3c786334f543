#pragma once

#include <span>

#include "dippas/raster.hpp"

namespace dippas {

// PSNR in dB with peak value 1: 10 log10(1 / MSE). Identical inputs give +infinity.
// Throws DimensionError on a shape mismatch.
double psnr(const RasterImage& a, const RasterImage& b);
double psnr(std::span<const double> a, std::span<const double> b);

}  // namespace dippas
