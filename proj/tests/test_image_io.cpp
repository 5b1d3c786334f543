#include <gtest/gtest.h>

#include <csetjmp>
#include <cstdio>
#include <filesystem>

#include <jpeglib.h>

#include "dippas/errors.hpp"
#include "dippas/formats.hpp"
#include "dippas/image_io.hpp"
#include "oracles.hpp"

namespace dippas {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dippas_image_io_test";
  fs::create_directories(dir);
  return dir / name;
}

RasterImage coded(Shape s, std::uint64_t seed, double levels) {
  auto v = oracle::random_values(s.size(), seed, 0.0, 1.0);
  for (double& x : v) x = std::round(x * levels) / levels;
  return RasterImage(s, v);
}

std::vector<std::uint8_t> encode_jpeg(const std::vector<std::uint8_t>& rgb, int w, int h) {
  jpeg_compress_struct c{};
  jpeg_error_mgr err{};
  c.err = jpeg_std_error(&err);
  jpeg_create_compress(&c);
  unsigned char* out = nullptr;
  unsigned long size = 0;
  jpeg_mem_dest(&c, &out, &size);
  c.image_width = static_cast<JDIMENSION>(w);
  c.image_height = static_cast<JDIMENSION>(h);
  c.input_components = 3;
  c.in_color_space = JCS_RGB;
  jpeg_set_defaults(&c);
  jpeg_set_quality(&c, 100, TRUE);
  jpeg_start_compress(&c, TRUE);
  while (c.next_scanline < c.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(rgb.data() + static_cast<std::size_t>(c.next_scanline) * w * 3);
    jpeg_write_scanlines(&c, &row, 1);
  }
  jpeg_finish_compress(&c);
  std::vector<std::uint8_t> bytes(out, out + size);
  jpeg_destroy_compress(&c);
  std::free(out);
  return bytes;
}

TEST(Png, EightBitRoundTripIsExactOnCodes) {
  for (std::size_t ch : {1u, 3u}) {
    const auto im = coded({7, 9, ch}, ch, 255.0);
    EXPECT_EQ(decode_image(encode_png(im, 8)), im);
  }
}

TEST(Png, SixteenBitRoundTripIsExactOnCodes) {
  const auto im = coded({5, 6, 3}, 3, 65535.0);
  EXPECT_EQ(decode_image(encode_png(im, 16)), im);
}

TEST(Png, EndpointsNormalizeToZeroAndOne) {
  const RasterImage im({1, 2, 1}, {0.0, 1.0});
  const auto path = scratch("endpoints.png");
  write_png(path, im);
  const auto back = read_image(path);
  EXPECT_EQ(back.at(0, 0, 0), 0.0);
  EXPECT_EQ(back.at(0, 1, 0), 1.0);
}

TEST(Png, QuantizeMatchesEncodeDecode) {
  const auto im = oracle::random_image({8, 8, 3}, 5);
  EXPECT_EQ(quantize(im, 8), decode_image(encode_png(im, 8)));
  EXPECT_EQ(quantize(quantize(im)), quantize(im));
}

TEST(Jpeg, DecodesByContent) {
  const int w = 16;
  const int h = 8;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w * h * 3), 128);
  for (int i = 0; i < w * h; ++i) rgb[static_cast<std::size_t>(i) * 3] = 200;
  const auto path = scratch("gray.weird");
  write_file_atomic(path, encode_jpeg(rgb, w, h));
  const auto im = read_image(path);
  EXPECT_EQ(im.shape(), (Shape{8, 16, 3}));
  EXPECT_NEAR(im.at(3, 3, 0), 200.0 / 255.0, 3.0 / 255.0);
  EXPECT_NEAR(im.at(3, 3, 1), 128.0 / 255.0, 3.0 / 255.0);
}

TEST(Decode, RejectsGarbage) {
  EXPECT_THROW(decode_image({1, 2, 3, 4, 5, 6, 7, 8}), IoError);
  auto png = encode_png(coded({4, 4, 3}, 1, 255.0));
  png.resize(png.size() / 2);
  EXPECT_THROW(decode_image(png), IoError);
  EXPECT_THROW(read_image("/nonexistent.png"), IoError);
}

TEST(Crop, OriginIsFloorOfHalfTheExcess) {
  EXPECT_EQ(center_crop_origin({514, 516, 3}, 512), (CropOrigin{1, 2}));
  EXPECT_EQ(center_crop_origin({512, 512, 3}, 512), (CropOrigin{0, 0}));
  EXPECT_EQ(center_crop_origin({515, 600, 1}, 512), (CropOrigin{1, 44}));
  EXPECT_THROW(center_crop_origin({500, 600, 3}, 512), DimensionError);
}

TEST(Crop, TakesTheCentralWindow) {
  const auto im = coded({6, 7, 2}, 9, 255.0);
  const auto c = center_crop(im, 4);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t ch = 0; ch < 2; ++ch) EXPECT_EQ(c.at(y, x, ch), im.at(y + 1, x + 1, ch));
}

TEST(LoadAndPrepare, IdempotentOnCroppedLosslessInput) {
  const auto im = coded({20, 24, 3}, 10, 255.0);
  const auto a = scratch("big.png");
  write_png(a, im);
  const auto once = load_and_prepare(a, 16);
  const auto b = scratch("cropped.png");
  write_png(b, once);
  EXPECT_EQ(load_and_prepare(b, 16), once);
  EXPECT_EQ(once, center_crop(im, 16));
}

}  // namespace
}  // namespace dippas
