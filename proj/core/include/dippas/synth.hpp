#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dippas/raster.hpp"

namespace dippas {

// Smooth value-noise texture: bilinear interpolation of gaussian lattices on the
// given grid sizes, amplitudes decaying by `persistence`, rescaled to [low, high].
struct TextureParams {
  std::vector<std::size_t> grids = {2, 4, 8};
  double persistence = 0.6;
  double low = 0.1;
  double high = 0.9;
};

RasterImage smooth_texture(const Shape& shape, std::uint64_t seed, const TextureParams& params = {});

struct SynthSpec {
  std::size_t devices = 2;
  std::size_t images_per_device = 10;
  std::size_t flats_per_device = 10;
  std::size_t size = 128;
  std::size_t channels = 3;
  double gamma = 0.05;
  double theta_sigma = 0.005;
  double prnu_stddev = 0.1;
  double flat_level = 0.5;
  std::uint64_t seed = 0;
  TextureParams texture;

  // Throws ConfigError.
  void validate() const;
};

struct SynthImage {
  std::string id;
  std::string device;
  RasterImage clean;
  RasterImage sensor;
};

struct SynthDevice {
  std::string id;
  Fingerprint prnu;
  std::vector<RasterImage> flats;
};

struct SynthCorpus {
  SynthSpec spec;
  std::vector<SynthDevice> devices;
  std::vector<SynthImage> images;  // device-major
};

std::string synth_device_id(std::size_t device);
std::string synth_image_id(std::size_t device, std::size_t image);

// Fully determined by spec (including spec.seed).
SynthCorpus synthesize_corpus(const SynthSpec& spec);

// Writes images/<id>.png (16-bit sensor images), clean/<id>.png, flats/,
// fingerprints/<device>.dpfp and manifest.json under `dir`.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

}  // namespace dippas
