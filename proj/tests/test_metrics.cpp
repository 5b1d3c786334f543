#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "dippas/errors.hpp"
#include "dippas/metrics.hpp"
#include "oracles.hpp"

namespace dippas {
namespace {

TEST(Psnr, IdenticalIsInfinite) {
  const auto a = oracle::random_image({8, 8, 3}, 1);
  EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
}

TEST(Psnr, UniformDifferenceOfOneTenthIsTwentyDb) {
  const auto a = RasterImage::filled({4, 5, 3}, 0.3);
  const auto b = RasterImage::filled({4, 5, 3}, 0.4);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
}

TEST(Psnr, MatchesScalarMseOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Shape shape{9, 7, 3};
    const auto a = oracle::random_image(shape, s);
    const auto b = oracle::random_image(shape, 100 + s);
    const double mse = oracle::sum_squared_difference(oracle::to_vector(a.pixels()), oracle::to_vector(b.pixels())) /
                       static_cast<double>(shape.size());
    EXPECT_NEAR(psnr(a, b), 10.0 * std::log10(1.0 / mse), 1e-9);
  }
}

TEST(Psnr, ShapeMismatchThrows) {
  EXPECT_THROW(psnr(RasterImage::filled({2, 2, 1}, 0.1), RasterImage::filled({2, 2, 3}, 0.1)), DimensionError);
}

}  // namespace
}  // namespace dippas
