#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "dippas/raster.hpp"

namespace dippas {

// DPFP fingerprint file: "DPFP", version u8, kind u8 (0 = PRNU, 1 = residual),
// H, W, C as little-endian u32, then H*W*C little-endian float32, channel-last.
inline constexpr std::uint8_t kDpfpVersion = 1;

std::vector<std::uint8_t> encode_dpfp(const Fingerprint& fp);
// Throws IoError on a bad magic, version, kind or truncated payload.
Fingerprint decode_dpfp(const std::vector<std::uint8_t>& bytes);

void write_dpfp(const std::filesystem::path& path, const Fingerprint& fp);
Fingerprint read_dpfp(const std::filesystem::path& path);

// DPIM raw image dump: "DPIM", H, W, C as little-endian u32 (16-byte header),
// then H*W*C little-endian float32, channel-last.
std::vector<std::uint8_t> encode_dpim(const RasterImage& image);
RasterImage decode_dpim(const std::vector<std::uint8_t>& bytes);

void write_dpim(const std::filesystem::path& path, const RasterImage& image);
RasterImage read_dpim(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace dippas
