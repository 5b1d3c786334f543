#include "dippas/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dippas/errors.hpp"
#include "dippas/ncc.hpp"

namespace dippas {

std::vector<double> BlockGrid::tile(std::span<const double> values, const Block& block) const {
  std::vector<double> out(block_size * block_size);
  for (std::size_t y = 0; y < block_size; ++y) {
    for (std::size_t x = 0; x < block_size; ++x) {
      out[y * block_size + x] = values[shape.index(block.row + y, block.col + x, block.channel)];
    }
  }
  return out;
}

BlockGrid partition_blocks(const Shape& shape, std::size_t block_size) {
  if (block_size == 0 || shape.height % block_size != 0 || shape.width % block_size != 0) {
    throw DimensionError("block size " + std::to_string(block_size) + " does not divide " +
                         to_string(shape));
  }
  BlockGrid grid{shape, block_size, {}};
  grid.blocks.reserve(grid.rows() * grid.cols() * shape.channels);
  for (std::size_t c = 0; c < shape.channels; ++c) {
    for (std::size_t by = 0; by < grid.rows(); ++by) {
      for (std::size_t bx = 0; bx < grid.cols(); ++bx) {
        grid.blocks.push_back({grid.blocks.size(), by * block_size, bx * block_size, c});
      }
    }
  }
  return grid;
}

std::vector<std::size_t> rank_block_candidates(std::span<const double> nccs) {
  std::vector<std::size_t> order(nccs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool neg_a = nccs[a] < 0.0;
    const bool neg_b = nccs[b] < 0.0;
    if (neg_a != neg_b) return neg_a;
    return std::abs(nccs[a]) < std::abs(nccs[b]);
  });
  return order;
}

std::vector<std::vector<double>> block_nccs(const SnapshotPool& pool, const Fingerprint& p,
                                            const BlockGrid& grid) {
  std::vector<std::size_t> all(pool.size());
  for (std::size_t m = 0; m < all.size(); ++m) all[m] = m;
  return block_nccs(pool, p, grid, all);
}

std::vector<std::vector<double>> block_nccs(const SnapshotPool& pool, const Fingerprint& p,
                                            const BlockGrid& grid,
                                            std::span<const std::size_t> members) {
  std::vector<std::vector<double>> scores(grid.count(), std::vector<double>(members.size(), 0.0));
  std::vector<std::vector<double>> fp_tiles;
  fp_tiles.reserve(grid.count());
  for (const Block& block : grid.blocks) fp_tiles.push_back(grid.tile(p.pattern, block));

  for (std::size_t m = 0; m < members.size(); ++m) {
    const RasterImage snapshot = pool.image(members[m]);
    for (const Block& block : grid.blocks) {
      const auto tile = grid.tile(snapshot.pixels(), block);
      double score = 0.0;
      try {
        score = ncc(tile, fp_tiles[block.index]);
      } catch (const DegenerateInputError&) {
        score = 0.0;
      }
      scores[block.index][m] = score;
    }
  }
  return scores;
}

std::vector<RasterImage> assemble_many(const SnapshotPool& pool, const Fingerprint& p,
                                       std::size_t block_size,
                                       std::span<const std::size_t> average_counts,
                                       double min_psnr_db) {
  std::vector<std::size_t> members;
  for (std::size_t m = 0; m < pool.size(); ++m) {
    if (pool.info(m).psnr_db >= min_psnr_db) members.push_back(m);
  }
  if (members.empty()) throw std::invalid_argument("assemble: empty snapshot pool");
  require_same_shape(pool.shape(), p.shape, "assemble");
  for (std::size_t l : average_counts) {
    if (l == 0) throw std::invalid_argument("assemble: average count must be >= 1");
  }
  const BlockGrid grid = partition_blocks(pool.shape(), block_size);
  const auto scores = block_nccs(pool, p, grid, members);

  const std::size_t m_total = members.size();
  // weight[k][b][m]: 1 / min(L_k, M) when snapshot m is among the first
  // min(L_k, M) candidates of block b.
  std::vector<std::vector<std::vector<std::size_t>>> selected(average_counts.size());
  for (std::size_t k = 0; k < average_counts.size(); ++k) {
    selected[k].resize(grid.count());
  }
  for (const Block& block : grid.blocks) {
    const auto order = rank_block_candidates(scores[block.index]);
    for (std::size_t k = 0; k < average_counts.size(); ++k) {
      const std::size_t take = std::min(average_counts[k], m_total);
      auto& chosen = selected[k][block.index];
      chosen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
      std::sort(chosen.begin(), chosen.end());
    }
  }

  const Shape shape = pool.shape();
  std::vector<std::vector<double>> sums(average_counts.size(),
                                        std::vector<double>(shape.size(), 0.0));
  for (std::size_t m = 0; m < m_total; ++m) {
    const RasterImage snapshot = pool.image(members[m]);
    const auto px = snapshot.pixels();
    for (std::size_t k = 0; k < average_counts.size(); ++k) {
      for (const Block& block : grid.blocks) {
        const auto& chosen = selected[k][block.index];
        if (!std::binary_search(chosen.begin(), chosen.end(), m)) continue;
        for (std::size_t y = 0; y < block_size; ++y) {
          for (std::size_t x = 0; x < block_size; ++x) {
            const std::size_t i = shape.index(block.row + y, block.col + x, block.channel);
            sums[k][i] += px[i];
          }
        }
      }
    }
  }

  std::vector<RasterImage> out;
  out.reserve(average_counts.size());
  for (std::size_t k = 0; k < average_counts.size(); ++k) {
    const double count = static_cast<double>(std::min(average_counts[k], m_total));
    for (double& v : sums[k]) v /= count;
    out.push_back(RasterImage::clipped(shape, std::move(sums[k])));
  }
  return out;
}

RasterImage assemble(const SnapshotPool& pool, const Fingerprint& p,
                     const AssemblyConfig& config) {
  const std::size_t counts[] = {config.average_count};
  return std::move(assemble_many(pool, p, config.block_size, counts).front());
}

}  // namespace dippas
