#include <gtest/gtest.h>

#include <algorithm>

#include "dippas/errors.hpp"
#include "dippas/fingerprint.hpp"
#include "dippas/plot.hpp"
#include "dippas/synth.hpp"

namespace dippas {
namespace {

SynthSpec tiny() {
  SynthSpec s;
  s.devices = 3;
  s.images_per_device = 4;
  s.flats_per_device = 2;
  s.size = 32;
  return s;
}

TEST(Texture, RangeAndDeterminism) {
  const auto a = smooth_texture({32, 48, 3}, 5);
  const auto [lo, hi] = std::minmax_element(a.pixels().begin(), a.pixels().end());
  EXPECT_NEAR(*lo, 0.1, 1e-12);
  EXPECT_NEAR(*hi, 0.9, 1e-12);
  EXPECT_EQ(a, smooth_texture({32, 48, 3}, 5));
  EXPECT_NE(a, smooth_texture({32, 48, 3}, 6));
}

TEST(Corpus, CountsIdsAndDeterminism) {
  const auto c = synthesize_corpus(tiny());
  ASSERT_EQ(c.devices.size(), 3u);
  ASSERT_EQ(c.images.size(), 12u);
  EXPECT_EQ(c.devices[2].id, "dev2");
  EXPECT_EQ(c.images[5].id, "dev1_001");
  EXPECT_EQ(c.images[5].device, "dev1");
  EXPECT_EQ(c.devices[0].flats.size(), 2u);
  const auto again = synthesize_corpus(tiny());
  for (std::size_t i = 0; i < c.images.size(); ++i) EXPECT_EQ(c.images[i].sensor, again.images[i].sensor);
  auto other = tiny();
  other.seed = 1;
  EXPECT_NE(synthesize_corpus(other).images[0].sensor, c.images[0].sensor);
}

TEST(Corpus, SensorImagesCarryTheirDevice) {
  auto spec = tiny();
  spec.size = 64;
  const auto c = synthesize_corpus(spec);
  for (const auto& im : c.images) {
    double own = 0.0;
    double best_other = -1.0;
    for (const auto& d : c.devices) {
      const double v = device_ncc(im.sensor, d.prnu);
      if (d.id == im.device) {
        own = v;
      } else {
        best_other = std::max(best_other, v);
      }
    }
    EXPECT_GT(own, best_other) << im.id;
  }
}

TEST(Corpus, ClippingStaysBelowOnePercent) {
  const auto c = synthesize_corpus(tiny());
  for (std::size_t i = 0; i < c.images.size(); ++i) {
    const auto& im = c.images[i];
    const auto& dev = c.devices[i / c.spec.images_per_device];
    const auto r = synthesize_sensor_image(im.clean, dev.prnu, {c.spec.gamma, c.spec.theta_sigma}, i);
    EXPECT_LT(r.clipped_fraction, 0.01);
  }
}

TEST(Spec, Validation) {
  auto s = tiny();
  s.devices = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = tiny();
  s.gamma = -1.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = tiny();
  s.size = 0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Plot, SvgContainsCurvesAndPoints) {
  RocCurve c{"dev0", 0.75, {{0.0, 0.0}, {0.5, 1.0}, {1.0, 1.0}}};
  const std::vector<RocCurve> curves = {c};
  const auto svg = roc_svg(curves);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("dev0"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  const std::vector<ScatterPoint> pts = {{"pooled", 31.0, 0.6}};
  EXPECT_NE(scatter_svg(pts, "PSNR [dB]", "AUC", "trade-off").find("pooled"), std::string::npos);
}

}  // namespace
}  // namespace dippas
