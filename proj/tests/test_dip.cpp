#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "dippas/dip.hpp"
#include "dippas/errors.hpp"
#include "dippas/fingerprint.hpp"
#include "dippas/metrics.hpp"
#include "dippas/synth.hpp"
#include "oracles.hpp"

namespace dippas {
namespace {

Fingerprint prnu(Shape s, std::uint64_t seed) {
  return Fingerprint::normalized(s, oracle::gaussian_values(s.size(), seed, 0.1), FingerprintKind::device_prnu);
}

GeneratorConfig tiny_generator() {
  GeneratorConfig g;
  g.depth = 2;
  g.base_features = 8;
  return g;
}

TEST(SeedNoise, GaussianWithStdOneTenth) {
  const auto z = make_seed_noise(64, 64, 3, 5);
  double m = 0.0;
  for (double v : z.values) m += v;
  m /= static_cast<double>(z.values.size());
  double var = 0.0;
  for (double v : z.values) var += (v - m) * (v - m);
  var /= static_cast<double>(z.values.size());
  EXPECT_NEAR(m, 0.0, 0.005);
  EXPECT_NEAR(std::sqrt(var), 0.1, 0.003);
  EXPECT_EQ(make_seed_noise(64, 64, 3, 5).values, z.values);
}

TEST(SeedNoise, PerturbationIsFreshAndReproducible) {
  const auto z = make_seed_noise(8, 8, 3, 1);
  EXPECT_EQ(perturb_seed(z, 0.0, 4).values, z.values);
  EXPECT_EQ(perturb_seed(z, 0.1, 4).values, perturb_seed(z, 0.1, 4).values);
  EXPECT_NE(perturb_seed(z, 0.1, 4).values, perturb_seed(z, 0.1, 5).values);
  EXPECT_THROW(perturb_seed(z, -1.0, 1), ConfigError);
}

TEST(DipLoss, ZeroOnPerfectFit) {
  const Shape s{3, 3, 1};
  const auto gen = RasterImage::filled(s, 0.5);
  const auto p = prnu(s, 2);
  std::vector<double> t(s.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.5 * (1.0 + 0.2 * p.pattern[i]);
  EXPECT_NEAR(dip_loss(gen, RasterImage(s, t), p, 0.2), 0.0, 1e-30);
}

TEST(DipLoss, GammaZeroIsPlainSse) {
  const Shape s{5, 4, 3};
  const auto a = oracle::random_image(s, 3);
  const auto b = oracle::random_image(s, 4);
  EXPECT_NEAR(dip_loss(a, b, prnu(s, 5), 0.0),
              oracle::sum_squared_difference(oracle::to_vector(a.pixels()), oracle::to_vector(b.pixels())), 1e-12);
}

TEST(DipLoss, MatchesScalarLoopOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Shape s{3, 3, 1};
    const auto g = oracle::random_image(s, 10 + seed);
    const auto t = oracle::random_image(s, 20 + seed);
    const auto p = prnu(s, 30 + seed);
    const double gamma = 0.1 * static_cast<double>(seed);
    double ref = 0.0;
    for (std::size_t y = 0; y < 3; ++y)
      for (std::size_t x = 0; x < 3; ++x) {
        const double r = g.at(y, x, 0) * (1.0 + gamma * p.pattern[s.index(y, x, 0)]) - t.at(y, x, 0);
        ref += r * r;
      }
    EXPECT_NEAR(dip_loss(g, t, p, gamma), ref, 1e-10);
    EXPECT_GE(dip_loss(g, t, p, gamma), 0.0);
  }
  EXPECT_THROW(dip_loss(RasterImage::filled({3, 3, 1}, 0.1), RasterImage::filled({3, 3, 1}, 0.1), prnu({3, 3, 1}, 1), -0.1),
               ConfigError);
}

TEST(Objective, GradientMatchesFiniteDifferenceInImageAndGamma) {
  const Shape s{4, 4, 2};
  const auto t = oracle::random_image(s, 40);
  const auto p = prnu(s, 41);
  const InjectionObjective<double> obj(t, p);
  nn::Tensor<double> g(2, 4, 4);
  g.data = oracle::random_values(g.size(), 42, 0.1, 0.9);
  nn::Tensor<double> grad;
  double dgamma = 0.0;
  const double j = obj.value_and_gradient(g, 0.3, grad, dgamma);
  EXPECT_DOUBLE_EQ(j, obj.value(g, 0.3));
  const double h = 1e-6;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto up = g;
    auto down = g;
    up.data[i] += h;
    down.data[i] -= h;
    EXPECT_NEAR(grad.data[i], (obj.value(up, 0.3) - obj.value(down, 0.3)) / (2 * h), 1e-7);
  }
  EXPECT_NEAR(dgamma, (obj.value(g, 0.3 + h) - obj.value(g, 0.3 - h)) / (2 * h), 1e-7);
}

TEST(RunConfig, Validation) {
  DipRunConfig c;
  EXPECT_NO_THROW(validate(c));
  c.tau_psnr_db = 40.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.max_iterations = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.learning_rate = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.perturbation_sigma = -0.1;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(RunDip, StopAtZeroEndsAfterOneIteration) {
  const Shape s{16, 16, 3};
  DipRunConfig c;
  c.stop_psnr_db = 0.0;
  c.tau_psnr_db = 0.0;
  const auto pool = run_dip(smooth_texture(s, 1), prnu(s, 2), tiny_generator(), c);
  EXPECT_EQ(pool.trace.size(), 1u);
  EXPECT_EQ(pool.size(), 1u);
  EXPECT_EQ(pool.info(0).iteration, 1u);
}

TEST(RunDip, UnreachableTauIsEmptyPoolError) {
  const Shape s{16, 16, 3};
  DipRunConfig c;
  c.max_iterations = 3;
  c.tau_psnr_db = 38.0;
  try {
    run_dip(smooth_texture(s, 1), prnu(s, 2), tiny_generator(), c);
    FAIL() << "expected EmptyPoolError";
  } catch (const EmptyPoolError& e) {
    EXPECT_EQ(e.iterations(), 3u);
    EXPECT_LT(e.best_psnr_db(), 38.0);
  }
}

struct SmallRun {
  SnapshotPool pool;
  std::vector<TraceRecord> observed;
};

SmallRun small_run(std::uint64_t seed) {
  const Shape s{64, 64, 3};
  const auto k = prnu(s, 3);
  const auto target = synthesize_sensor_image(smooth_texture(s, 4), k, {0.05, 0.005}, 5).image;
  DipRunConfig c;
  c.tau_psnr_db = 26.0;
  c.stop_psnr_db = 30.0;
  c.max_iterations = 2000;
  c.generator_seed = seed;
  c.noise_seed = seed + 1;
  c.snapshot_capacity = 4;
  c.ncc_probe_interval = 25;
  SmallRun r{SnapshotPool{}, {}};
  r.pool = run_dip(target, k, tiny_generator(), c, [&](const TraceRecord& t) { r.observed.push_back(t); });
  return r;
}

class RunDipFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { run_ = new SmallRun(small_run(9)); }
  static void TearDownTestSuite() {
    delete run_;
    run_ = nullptr;
  }
  static SmallRun* run_;
};
SmallRun* RunDipFixture::run_ = nullptr;

TEST_F(RunDipFixture, PoolSnapshotsAreOrderedAndAboveTau) {
  const auto& pool = run_->pool;
  ASSERT_FALSE(pool.empty());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    EXPECT_GE(pool.info(i).psnr_db, 26.0);
    if (i > 0) EXPECT_GT(pool.info(i).iteration, pool.info(i - 1).iteration);
  }
  EXPECT_GT(pool.spilled(), 0u);
  // a spilled snapshot reloads at the recorded PSNR (float32 on disk)
  const auto last = pool.size() - 1;
  EXPECT_FALSE(pool.in_memory(last));
  EXPECT_EQ(pool.image(last).shape(), pool.shape());
}

TEST_F(RunDipFixture, TraceMatchesObserverAndKeepsGammaNonNegative) {
  const auto& trace = run_->pool.trace;
  ASSERT_EQ(trace.size(), run_->observed.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    EXPECT_EQ(trace[i].iteration, i + 1);
    EXPECT_EQ(trace[i].loss, run_->observed[i].loss);
    EXPECT_GE(trace[i].gamma, 0.0);
    EXPECT_EQ(trace[i].fingerprint_ncc.has_value(), i == 0 || (i + 1) % 25 == 0);
  }
  EXPECT_GE(run_->pool.final_gamma, 0.0);
  EXPECT_GE(trace.back().psnr_db, 30.0);
}

TEST_F(RunDipFixture, LossImproves) {
  const auto& trace = run_->pool.trace;
  EXPECT_LT(trace.back().loss, trace.front().loss);
  EXPECT_GT(trace.back().psnr_db, trace.front().psnr_db);
}

TEST_F(RunDipFixture, SameSeedsSameTrace) {
  const auto again = small_run(9);
  ASSERT_EQ(again.pool.trace.size(), run_->pool.trace.size());
  for (std::size_t i = 0; i < again.pool.trace.size(); ++i) {
    EXPECT_EQ(again.pool.trace[i].loss, run_->pool.trace[i].loss);
    EXPECT_EQ(again.pool.trace[i].gamma, run_->pool.trace[i].gamma);
  }
  for (std::size_t i = 0; i < again.pool.size(); ++i) EXPECT_EQ(again.pool.image(i), run_->pool.image(i));
}

}  // namespace
}  // namespace dippas
