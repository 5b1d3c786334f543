#include "dippas/formats.hpp"

#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include <unistd.h>

#include "dippas/errors.hpp"

namespace dippas {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

std::uint32_t checked_u32(std::size_t v) {
  if (v > 0xffffffffu) throw IoError("dimension does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

void put_shape(std::vector<std::uint8_t>& out, const Shape& shape) {
  put_u32(out, checked_u32(shape.height));
  put_u32(out, checked_u32(shape.width));
  put_u32(out, checked_u32(shape.channels));
}

Shape get_shape(const std::uint8_t* p) {
  return Shape{get_u32(p), get_u32(p + 4), get_u32(p + 8)};
}

std::vector<double> get_payload(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                                const Shape& shape, const char* format) {
  if (shape.size() == 0) throw IoError(std::string(format) + ": zero extent");
  const std::size_t expected = offset + 4 * shape.size();
  if (bytes.size() != expected) {
    throw IoError(std::string(format) + ": expected " + std::to_string(expected) +
                  " bytes, got " + std::to_string(bytes.size()));
  }
  std::vector<double> values(shape.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = get_f32(&bytes[offset + 4 * i]);
  return values;
}

}  // namespace

std::vector<std::uint8_t> encode_dpfp(const Fingerprint& fp) {
  std::vector<std::uint8_t> out;
  out.reserve(18 + 4 * fp.pattern.size());
  out.insert(out.end(), {'D', 'P', 'F', 'P'});
  out.push_back(kDpfpVersion);
  out.push_back(static_cast<std::uint8_t>(fp.kind));
  put_shape(out, fp.shape);
  for (double v : fp.pattern) put_f32(out, v);
  return out;
}

Fingerprint decode_dpfp(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 18 || std::memcmp(bytes.data(), "DPFP", 4) != 0) {
    throw IoError("not a DPFP fingerprint file");
  }
  if (bytes[4] != kDpfpVersion) {
    throw IoError("unsupported DPFP version " + std::to_string(bytes[4]));
  }
  if (bytes[5] > 1) throw IoError("invalid DPFP kind " + std::to_string(bytes[5]));
  const auto kind = static_cast<FingerprintKind>(bytes[5]);
  const Shape shape = get_shape(&bytes[6]);
  return Fingerprint(shape, get_payload(bytes, 18, shape, "DPFP"), kind);
}

std::vector<std::uint8_t> encode_dpim(const RasterImage& image) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + 4 * image.pixels().size());
  out.insert(out.end(), {'D', 'P', 'I', 'M'});
  put_shape(out, image.shape());
  for (double v : image.pixels()) put_f32(out, v);
  return out;
}

RasterImage decode_dpim(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "DPIM", 4) != 0) {
    throw IoError("not a DPIM image dump");
  }
  const Shape shape = get_shape(&bytes[4]);
  return RasterImage(shape, get_payload(bytes, 16, shape, "DPIM"));
}

void write_dpfp(const std::filesystem::path& path, const Fingerprint& fp) {
  write_file_atomic(path, encode_dpfp(fp));
}

Fingerprint read_dpfp(const std::filesystem::path& path) {
  try {
    return decode_dpfp(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_dpim(const std::filesystem::path& path, const RasterImage& image) {
  write_file_atomic(path, encode_dpim(image));
}

RasterImage read_dpim(const std::filesystem::path& path) {
  try {
    return decode_dpim(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

namespace {

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  static std::atomic<unsigned> counter{0};
  return path.parent_path() / (path.filename().string() + ".tmp." + std::to_string(::getpid()) +
                               "." + std::to_string(counter.fetch_add(1)));
}

void write_atomic(const std::filesystem::path& path, const char* data, std::size_t size) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(data, static_cast<std::streamsize>(size));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  write_atomic(path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_atomic(path, text.data(), text.size());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace dippas
