#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dippas/assembly.hpp"
#include "dippas/errors.hpp"
#include "dippas/ncc.hpp"
#include "oracles.hpp"

namespace dippas {
namespace {

Fingerprint prnu(Shape s, std::uint64_t seed) {
  return Fingerprint::normalized(s, oracle::gaussian_values(s.size(), seed, 0.1), FingerprintKind::device_prnu);
}

SnapshotPool random_pool(Shape s, std::size_t m, std::uint64_t seed) {
  SnapshotPool pool(m);
  for (std::size_t i = 0; i < m; ++i) pool.append(i + 1, oracle::random_image(s, seed + i, 0.05, 0.95), 30.0 + i);
  return pool;
}

std::vector<std::size_t> one_based(std::vector<std::size_t> v) {
  for (auto& x : v) ++x;
  return v;
}

TEST(Partition, CountsAndOrder) {
  EXPECT_EQ(partition_blocks({512, 512, 3}, 512).count(), 3u);
  EXPECT_EQ(partition_blocks({512, 512, 3}, 64).count(), 192u);
  EXPECT_THROW(partition_blocks({512, 512, 3}, 100), DimensionError);
  EXPECT_THROW(partition_blocks({512, 512, 3}, 0), DimensionError);
  const auto g = partition_blocks({4, 6, 2}, 2);
  ASSERT_EQ(g.count(), 12u);
  EXPECT_EQ(g.blocks[0].channel, 0u);
  EXPECT_EQ(g.blocks[1].col, 2u);
  EXPECT_EQ(g.blocks[3].row, 2u);
  EXPECT_EQ(g.blocks[6].channel, 1u);
}

TEST(Partition, TilesCoverEveryValueOnce) {
  const Shape s{6, 9, 2};
  const auto g = partition_blocks(s, 3);
  std::vector<double> v(s.size());
  std::iota(v.begin(), v.end(), 0.0);
  std::vector<int> seen(s.size(), 0);
  for (const auto& b : g.blocks)
    for (double x : g.tile(v, b)) ++seen[static_cast<std::size_t>(x)];
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(Rank, WorkedExamples) {
  EXPECT_EQ(one_based(rank_block_candidates(std::vector<double>{-0.1, 0.05, -0.02, 0.3})),
            (std::vector<std::size_t>{3, 1, 2, 4}));
  EXPECT_EQ(one_based(rank_block_candidates(std::vector<double>{0.3, 0.1})), (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(one_based(rank_block_candidates(std::vector<double>{0.1, 0.1})), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(one_based(rank_block_candidates(std::vector<double>{0.0, -0.0, -0.5})), (std::vector<std::size_t>{3, 1, 2}));
}

TEST(Rank, PermutationAndPriorityProperties) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t m = 1 + seed % 23;
    auto nccs = oracle::random_values(m, seed);
    if (seed % 5 == 0) nccs[0] = nccs[m - 1];  // some ties
    const auto order = rank_block_candidates(nccs);
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < m; ++i) ASSERT_EQ(sorted[i], i);
    for (std::size_t l = 1; l <= m; ++l) {
      std::vector<bool> chosen(m, false);
      for (std::size_t i = 0; i < l; ++i) chosen[order[i]] = true;
      for (std::size_t a = 0; a < m; ++a) {
        if (!chosen[a]) continue;
        for (std::size_t b = 0; b < m; ++b) {
          if (chosen[b] || nccs[b] >= 0.0) continue;
          // an unselected negative must not beat a selected one
          if (nccs[a] < 0.0) {
            EXPECT_LE(std::abs(nccs[a]), std::abs(nccs[b]));
          } else {
            ADD_FAILURE() << "nonnegative selected while a negative is left";
          }
        }
        if (nccs[a] >= 0.0) {
          for (std::size_t b = 0; b < m; ++b)
            if (!chosen[b] && nccs[b] >= 0.0) EXPECT_LE(std::abs(nccs[a]), std::abs(nccs[b]));
        }
      }
    }
  }
}

TEST(BlockNcc, MatchesPerTileNccAndZeroForConstantTiles) {
  const Shape s{8, 8, 2};
  SnapshotPool pool(3);
  pool.append(1, oracle::random_image(s, 1), 31.0);
  pool.append(2, RasterImage::filled(s, 0.5), 32.0);
  const auto p = prnu(s, 3);
  const auto grid = partition_blocks(s, 4);
  const auto scores = block_nccs(pool, p, grid);
  ASSERT_EQ(scores.size(), grid.count());
  for (std::size_t b = 0; b < grid.count(); ++b) {
    const auto tile = grid.tile(pool.image(0).pixels(), grid.blocks[b]);
    EXPECT_NEAR(scores[b][0], oracle::pearson(tile, grid.tile(p.pattern, grid.blocks[b])), 1e-12);
    EXPECT_EQ(scores[b][1], 0.0);
  }
}

TEST(Assemble, SingleSnapshotIsReturnedBitwise) {
  const Shape s{16, 16, 3};
  SnapshotPool pool(1);
  const auto im = oracle::random_image(s, 4);
  pool.append(7, im, 33.0);
  for (std::size_t b : {1u, 4u, 8u, 16u})
    for (std::size_t l : {1u, 3u, 50u}) EXPECT_EQ(assemble(pool, prnu(s, 5), {b, l}), im);
}

TEST(Assemble, LAtLeastMIsThePlainMean) {
  const Shape s{16, 8, 3};
  const std::size_t m = 6;
  const auto pool = random_pool(s, m, 10);
  std::vector<double> mean(s.size(), 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < s.size(); ++k) mean[k] += pool.image(i).pixels()[k];
  for (double& v : mean) v /= static_cast<double>(m);
  for (std::size_t b : {2u, 4u, 8u}) {
    const auto out = assemble(pool, prnu(s, 11), {b, m + 3});
    for (std::size_t k = 0; k < s.size(); ++k) EXPECT_NEAR(out.pixels()[k], mean[k], 1e-12);
  }
}

TEST(Assemble, FullFrameBlocksWithLOneCopyTopRankedChannel) {
  const Shape s{8, 8, 3};
  const auto pool = random_pool(s, 5, 20);
  const auto p = prnu(s, 21);
  const auto out = assemble(pool, p, {8, 1});
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> scores;
    const auto pc = extract_channel(p.pattern, s, c);
    for (std::size_t i = 0; i < pool.size(); ++i) scores.push_back(ncc(extract_channel(pool.image(i).pixels(), s, c), pc));
    const std::size_t best = rank_block_candidates(scores)[0];
    EXPECT_EQ(extract_channel(out.pixels(), s, c), extract_channel(pool.image(best).pixels(), s, c));
  }
}

TEST(Assemble, AveragesTheRankedPrefixPerBlock) {
  const Shape s{8, 8, 2};
  const auto pool = random_pool(s, 7, 30);
  const auto p = prnu(s, 31);
  const auto grid = partition_blocks(s, 4);
  const std::size_t l = 3;
  const auto out = assemble(pool, p, {4, l});
  for (const auto& blk : grid.blocks) {
    std::vector<double> scores;
    for (std::size_t i = 0; i < pool.size(); ++i)
      scores.push_back(oracle::pearson(grid.tile(pool.image(i).pixels(), blk), grid.tile(p.pattern, blk)));
    const auto order = rank_block_candidates(scores);
    std::vector<double> mean(16, 0.0);
    for (std::size_t r = 0; r < l; ++r) {
      const auto t = grid.tile(pool.image(order[r]).pixels(), blk);
      for (std::size_t k = 0; k < 16; ++k) mean[k] += t[k] / static_cast<double>(l);
    }
    const auto got = grid.tile(out.pixels(), blk);
    for (std::size_t k = 0; k < 16; ++k) EXPECT_NEAR(got[k], mean[k], 1e-12);
  }
}

TEST(Assemble, OutputStaysInUnitRangeAndIsDeterministic) {
  const Shape s{16, 16, 3};
  const auto pool = random_pool(s, 9, 40);
  const auto p = prnu(s, 41);
  const auto a = assemble(pool, p, {4, 4});
  const auto b = assemble(pool, p, {4, 4});
  EXPECT_EQ(a, b);
  for (double v : a.pixels()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Assemble, BlockLocality) {
  const Shape s{8, 8, 1};
  const auto p = prnu(s, 51);
  SnapshotPool a(4);
  SnapshotPool b(4);
  std::vector<RasterImage> images;
  for (std::size_t i = 0; i < 4; ++i) images.push_back(oracle::random_image(s, 52 + i, 0.1, 0.9));
  for (std::size_t i = 0; i < 4; ++i) a.append(i + 1, images[i], 30.0);
  // change snapshot 2 outside the top-left 4x4 block only
  auto v = oracle::to_vector(images[2].pixels());
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x)
      if (y >= 4 || x >= 4) v[s.index(y, x, 0)] = 1.0 - v[s.index(y, x, 0)];
  images[2] = RasterImage(s, v);
  for (std::size_t i = 0; i < 4; ++i) b.append(i + 1, images[i], 30.0);
  const auto oa = assemble(a, p, {4, 2});
  const auto ob = assemble(b, p, {4, 2});
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) EXPECT_EQ(oa.at(y, x, 0), ob.at(y, x, 0));
}

TEST(Assemble, Errors) {
  const Shape s{8, 8, 1};
  SnapshotPool empty(2);
  EXPECT_THROW(assemble(empty, prnu(s, 1), {4, 1}), std::invalid_argument);
  const auto pool = random_pool(s, 2, 3);
  EXPECT_THROW(assemble(pool, prnu(s, 1), {4, 0}), std::invalid_argument);
  EXPECT_THROW(assemble(pool, prnu(s, 1), {3, 1}), DimensionError);
  EXPECT_THROW(assemble(pool, prnu({8, 8, 3}, 1), {4, 1}), DimensionError);
}

TEST(AssembleMany, MatchesSeparateCallsAndFiltersByPsnr) {
  const Shape s{8, 8, 3};
  const auto pool = random_pool(s, 6, 60);  // psnr 30..35
  const auto p = prnu(s, 61);
  const std::vector<std::size_t> ls = {1, 2, 5};
  const auto many = assemble_many(pool, p, 4, ls);
  for (std::size_t i = 0; i < ls.size(); ++i) EXPECT_EQ(many[i], assemble(pool, p, {4, ls[i]}));

  SnapshotPool high(6);
  for (std::size_t i = 3; i < 6; ++i) high.append(i + 1, pool.image(i), pool.info(i).psnr_db);
  const auto filtered = assemble_many(pool, p, 4, ls, 33.0);
  for (std::size_t i = 0; i < ls.size(); ++i) EXPECT_EQ(filtered[i], assemble(high, p, {4, ls[i]}));
  EXPECT_THROW(assemble_many(pool, p, 4, ls, 99.0), std::invalid_argument);
}

}  // namespace
}  // namespace dippas
