#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dippas/raster.hpp"

namespace dippas {

// Decodes PNG (8/16-bit, gray or color, alpha dropped) or baseline JPEG by
// content, normalizing intensities to [0, 1]. Throws IoError on failure.
RasterImage read_image(const std::filesystem::path& path);
RasterImage decode_image(const std::vector<std::uint8_t>& bytes);

// Lossless PNG, gray for one channel, RGB for three. Values are rounded to
// the nearest code of the given bit depth (8 or 16). Written atomically.
std::vector<std::uint8_t> encode_png(const RasterImage& image, int bit_depth = 8);
void write_png(const std::filesystem::path& path, const RasterImage& image, int bit_depth = 8);

// Rounds every value to the nearest of 2^bits - 1 levels.
RasterImage quantize(const RasterImage& image, int bits = 8);

struct CropOrigin {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const CropOrigin&) const = default;
};

// floor((dim - crop) / 2) along each axis. Throws DimensionError if the image is smaller.
CropOrigin center_crop_origin(const Shape& shape, std::size_t crop);
RasterImage center_crop(const RasterImage& image, std::size_t crop);

// read_image() followed by center_crop().
RasterImage load_and_prepare(const std::filesystem::path& path, std::size_t crop_size);

}  // namespace dippas
