#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dippas/raster.hpp"
#include "dippas/snapshot_pool.hpp"

namespace dippas {

struct AssemblyConfig {
  std::size_t block_size = 64;    // B
  std::size_t average_count = 5;  // L
};

// Block sizes and average counts of the standard experimental grid.
inline constexpr std::size_t kDefaultBlockSizes[] = {32, 64, 128, 256, 512};
inline constexpr std::size_t kDefaultAverageCounts[] = {1, 5, 10, 25, 50, 75, 100};

// One B x B single-channel tile.
struct Block {
  std::size_t index = 0;
  std::size_t row = 0;      // top pixel row
  std::size_t col = 0;      // left pixel column
  std::size_t channel = 0;
};

// Non-overlapping B x B tiles exactly covering an image, ordered channel-outer,
// then row-major over block positions.
struct BlockGrid {
  Shape shape;
  std::size_t block_size = 0;
  std::vector<Block> blocks;

  std::size_t rows() const noexcept { return shape.height / block_size; }
  std::size_t cols() const noexcept { return shape.width / block_size; }
  std::size_t count() const noexcept { return blocks.size(); }

  // Copies the tile out of a channel-last volume, row-major B*B values.
  std::vector<double> tile(std::span<const double> values, const Block& block) const;
};

// Throws DimensionError unless B >= 1 divides both spatial extents.
BlockGrid partition_blocks(const Shape& shape, std::size_t block_size);

// Candidate order for one block position: negative scores by ascending
// magnitude, then non-negative scores by ascending magnitude; ties keep input
// order. Returns 0-based indices.
std::vector<std::size_t> rank_block_candidates(std::span<const double> nccs);

// Signed NCC of each snapshot tile against the fingerprint tile, per block:
// result[b][m]. Constant tiles score 0.
std::vector<std::vector<double>> block_nccs(const SnapshotPool& pool, const Fingerprint& p,
                                            const BlockGrid& grid);
// Same, restricted to the listed pool entries (columns follow `members`).
std::vector<std::vector<double>> block_nccs(const SnapshotPool& pool, const Fingerprint& p,
                                            const BlockGrid& grid,
                                            std::span<const std::size_t> members);

// For every block position and channel, ranks the pool's tiles against the
// fingerprint and averages the first min(L, M) pixelwise.
// Throws std::invalid_argument on an empty pool or L == 0, DimensionError on
// shape mismatch or a block size that does not divide the image.
RasterImage assemble(const SnapshotPool& pool, const Fingerprint& p, const AssemblyConfig& config);

// assemble() for several average counts at once, sharing the NCC pass. Only
// snapshots with psnr_db >= min_psnr_db take part.
std::vector<RasterImage> assemble_many(const SnapshotPool& pool, const Fingerprint& p,
                                       std::size_t block_size,
                                       std::span<const std::size_t> average_counts,
                                       double min_psnr_db = -std::numeric_limits<double>::infinity());

}  // namespace dippas
