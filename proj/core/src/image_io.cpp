#include "dippas/image_io.hpp"

#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "dippas/errors.hpp"
#include "dippas/formats.hpp"

namespace dippas {
namespace {

// libpng and libjpeg report fatal errors through longjmp; the decoders below
// keep only trivially destructible state between setjmp and the library calls.

struct PngReadBuffer {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t offset;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* buf = static_cast<PngReadBuffer*>(png_get_io_ptr(png));
  if (buf->offset + count > buf->size) png_error(png, "truncated PNG stream");
  std::memcpy(out, buf->data + buf->offset, count);
  buf->offset += count;
}

struct PngHeader {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int channels = 0;
};

// Decodes into `out` (already sized by the caller after the header pass).
bool png_decode(const std::vector<std::uint8_t>& bytes, PngHeader& header,
                std::vector<std::uint8_t>* pixels, char* error) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) {
    std::snprintf(error, 256, "png_create_read_struct failed");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  PngReadBuffer buffer{bytes.data(), bytes.size(), 0};
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    std::snprintf(error, 256, "malformed PNG stream");
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &buffer, png_read_from_memory);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  header.width = png_get_image_width(png, info);
  header.height = png_get_image_height(png, info);
  header.bit_depth = png_get_bit_depth(png, info);
  header.channels = png_get_channels(png, info);

  if (pixels != nullptr) {
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    pixels->resize(row_bytes * header.height);
    for (png_uint_32 y = 0; y < header.height; ++y) {
      png_read_row(png, pixels->data() + y * row_bytes, nullptr);
    }
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

RasterImage decode_png(const std::vector<std::uint8_t>& bytes) {
  PngHeader header;
  std::vector<std::uint8_t> raw;
  char error[256] = {0};
  if (!png_decode(bytes, header, &raw, error)) throw IoError(error);
  if (header.channels != 1 && header.channels != 3) {
    throw IoError("unsupported PNG channel count " + std::to_string(header.channels));
  }
  const Shape shape{header.height, header.width, static_cast<std::size_t>(header.channels)};
  std::vector<double> values(shape.size());
  if (header.bit_depth == 16) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const unsigned v = (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
      values[i] = v / 65535.0;
    }
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = raw[i] / 255.0;
  }
  return RasterImage(shape, std::move(values));
}

struct JpegError {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

bool jpeg_decode(const std::vector<std::uint8_t>& bytes, std::vector<std::uint8_t>& pixels,
                 std::size_t& height, std::size_t& width, std::size_t& channels, char* error) {
  jpeg_decompress_struct cinfo;
  JpegError err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    std::snprintf(error, 256, "malformed JPEG stream: %s", err.message);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.num_components != 1) cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  height = cinfo.output_height;
  width = cinfo.output_width;
  channels = static_cast<std::size_t>(cinfo.output_components);
  pixels.resize(height * width * channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

RasterImage decode_jpeg(const std::vector<std::uint8_t>& bytes) {
  std::vector<std::uint8_t> raw;
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t c = 0;
  char error[256] = {0};
  if (!jpeg_decode(bytes, raw, h, w, c, error)) throw IoError(error);
  std::vector<double> values(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) values[i] = raw[i] / 255.0;
  return RasterImage(Shape{h, w, c}, std::move(values));
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

bool png_encode(const std::vector<std::uint8_t>& rows, std::size_t height, std::size_t width,
                int color_type, int bit_depth, std::size_t row_bytes,
                std::vector<std::uint8_t>& out, char* error) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) {
    std::snprintf(error, 256, "png_create_write_struct failed");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    std::snprintf(error, 256, "PNG encoding failed");
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(rows.data() + y * row_bytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

RasterImage decode_image(const std::vector<std::uint8_t>& bytes) {
  static constexpr std::uint8_t kPngMagic[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kPngMagic, 4) == 0) return decode_png(bytes);
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return decode_jpeg(bytes);
  }
  throw IoError("unrecognized image format (expected PNG or JPEG)");
}

RasterImage read_image(const std::filesystem::path& path) {
  try {
    return decode_image(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const RasterImage& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ConfigError("PNG bit depth must be 8 or 16");
  if (image.channels() != 1 && image.channels() != 3) {
    throw DimensionError("PNG export supports 1 or 3 channels, got " +
                         std::to_string(image.channels()));
  }
  const std::size_t bytes_per_sample = bit_depth / 8;
  const std::size_t row_bytes = image.width() * image.channels() * bytes_per_sample;
  const double levels = bit_depth == 8 ? 255.0 : 65535.0;
  std::vector<std::uint8_t> rows(row_bytes * image.height());
  const auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const auto code = static_cast<unsigned>(std::lround(px[i] * levels));
    if (bit_depth == 8) {
      rows[i] = static_cast<std::uint8_t>(code);
    } else {
      rows[2 * i] = static_cast<std::uint8_t>(code >> 8);
      rows[2 * i + 1] = static_cast<std::uint8_t>(code & 0xff);
    }
  }
  std::vector<std::uint8_t> out;
  char error[256] = {0};
  const int color = image.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  if (!png_encode(rows, image.height(), image.width(), color, bit_depth, row_bytes, out, error)) {
    throw IoError(error);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RasterImage& image, int bit_depth) {
  write_file_atomic(path, encode_png(image, bit_depth));
}

RasterImage quantize(const RasterImage& image, int bits) {
  if (bits < 1 || bits > 16) throw ConfigError("quantize: bits must be in [1, 16]");
  const double levels = static_cast<double>((1u << bits) - 1u);
  std::vector<double> values(image.pixels().begin(), image.pixels().end());
  for (double& v : values) v = std::round(v * levels) / levels;
  return RasterImage(image.shape(), std::move(values));
}

CropOrigin center_crop_origin(const Shape& shape, std::size_t crop) {
  if (crop == 0 || shape.height < crop || shape.width < crop) {
    throw DimensionError("image " + to_string(shape) + " is smaller than the " +
                         std::to_string(crop) + "x" + std::to_string(crop) + " crop");
  }
  return {(shape.height - crop) / 2, (shape.width - crop) / 2};
}

RasterImage center_crop(const RasterImage& image, std::size_t crop) {
  const CropOrigin origin = center_crop_origin(image.shape(), crop);
  const Shape out_shape{crop, crop, image.channels()};
  std::vector<double> values(out_shape.size());
  for (std::size_t y = 0; y < crop; ++y) {
    for (std::size_t x = 0; x < crop; ++x) {
      for (std::size_t c = 0; c < image.channels(); ++c) {
        values[out_shape.index(y, x, c)] = image.at(origin.row + y, origin.col + x, c);
      }
    }
  }
  return RasterImage(out_shape, std::move(values));
}

RasterImage load_and_prepare(const std::filesystem::path& path, std::size_t crop_size) {
  return center_crop(read_image(path), crop_size);
}

}  // namespace dippas
