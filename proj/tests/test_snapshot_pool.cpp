#include <gtest/gtest.h>

#include <filesystem>

#include "dippas/errors.hpp"
#include "dippas/snapshot_pool.hpp"
#include "oracles.hpp"

namespace dippas {
namespace {

// values on a 1/256 grid survive the float32 spill exactly
RasterImage grid_image(Shape s, std::uint64_t seed) {
  auto v = oracle::random_values(s.size(), seed, 0.0, 1.0);
  for (double& x : v) x = std::floor(x * 256.0) / 256.0;
  return RasterImage(s, v);
}

TEST(SnapshotPool, KeepsFirstImagesInMemoryAndSpillsTheRest) {
  const auto dir = std::filesystem::temp_directory_path() / "dippas_pool_test";
  std::filesystem::remove_all(dir);
  {
    SnapshotPool pool(2, dir);
    std::vector<RasterImage> images;
    for (std::size_t i = 0; i < 5; ++i) {
      images.push_back(grid_image({4, 4, 3}, i));
      pool.append(10 * (i + 1), images.back(), 30.0 + static_cast<double>(i));
    }
    EXPECT_EQ(pool.size(), 5u);
    EXPECT_EQ(pool.spilled(), 3u);
    EXPECT_TRUE(pool.in_memory(1));
    EXPECT_FALSE(pool.in_memory(2));
    EXPECT_TRUE(std::filesystem::exists(dir / "snapshots" / "iter_30.dpimg"));
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(pool.image(i), images[i]);
    EXPECT_EQ(pool.info(4).iteration, 50u);
    EXPECT_EQ(pool.info(4).psnr_db, 34.0);
  }
  std::filesystem::remove_all(dir);
}

TEST(SnapshotPool, PrivateTempDirIsRemovedWithThePool) {
  {
    SnapshotPool pool(0);
    pool.append(1, grid_image({2, 2, 1}, 1), 31.0);
    EXPECT_FALSE(pool.in_memory(0));
    EXPECT_EQ(pool.image(0), grid_image({2, 2, 1}, 1));
  }
  SUCCEED();
}

TEST(SnapshotPool, RejectsOutOfOrderOrMixedShapes) {
  SnapshotPool pool(4);
  pool.append(5, grid_image({2, 2, 1}, 1), 30.0);
  EXPECT_THROW(pool.append(5, grid_image({2, 2, 1}, 2), 30.0), std::invalid_argument);
  EXPECT_THROW(pool.append(6, grid_image({2, 3, 1}, 2), 30.0), DimensionError);
  EXPECT_THROW(pool.image(3), std::out_of_range);
}

}  // namespace
}  // namespace dippas
