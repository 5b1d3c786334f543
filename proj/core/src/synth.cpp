#include "dippas/synth.hpp"

#include <algorithm>
#include <cstdio>

#include "dippas/errors.hpp"
#include "dippas/fingerprint.hpp"
#include "dippas/formats.hpp"
#include "dippas/image_io.hpp"
#include "dippas/manifest.hpp"
#include "dippas/rng.hpp"

namespace dippas {
namespace {

enum StreamTag : std::uint64_t { kTexture = 1, kPrnu = 2, kSensor = 3, kFlat = 4 };

std::uint64_t derived_seed(std::initializer_list<std::uint64_t> keys) {
  Rng rng = make_rng(keys);
  return rng();
}

}  // namespace

RasterImage smooth_texture(const Shape& shape, std::uint64_t seed, const TextureParams& params) {
  if (shape.size() == 0) throw DimensionError("smooth_texture: empty shape");
  if (params.grids.empty() || !(params.low < params.high) || params.low < 0.0 || params.high > 1.0) {
    throw ConfigError("smooth_texture: invalid texture parameters");
  }
  Rng rng = make_rng({seed});
  std::vector<double> out(shape.size(), 0.0);
  double amplitude = 1.0;
  for (std::size_t grid : params.grids) {
    if (grid == 0) throw ConfigError("smooth_texture: grid size must be positive");
    const std::size_t side = grid + 1;
    for (std::size_t c = 0; c < shape.channels; ++c) {
      std::vector<double> lattice(side * side);
      fill_gaussian(lattice, 0.0, 1.0, rng);
      for (std::size_t y = 0; y < shape.height; ++y) {
        const double fy = static_cast<double>(y) * static_cast<double>(grid) / static_cast<double>(shape.height);
        const auto iy = static_cast<std::size_t>(fy);
        const double ty = fy - static_cast<double>(iy);
        for (std::size_t x = 0; x < shape.width; ++x) {
          const double fx = static_cast<double>(x) * static_cast<double>(grid) / static_cast<double>(shape.width);
          const auto ix = static_cast<std::size_t>(fx);
          const double tx = fx - static_cast<double>(ix);
          const double top = (1 - tx) * lattice[iy * side + ix] + tx * lattice[iy * side + ix + 1];
          const double bottom = (1 - tx) * lattice[(iy + 1) * side + ix] + tx * lattice[(iy + 1) * side + ix + 1];
          out[shape.index(y, x, c)] += amplitude * ((1 - ty) * top + ty * bottom);
        }
      }
    }
    amplitude *= params.persistence;
  }
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& v : out) {
    v = range > 0.0 ? params.low + (params.high - params.low) * (v - min) / range
                    : 0.5 * (params.low + params.high);
  }
  return RasterImage::clipped(shape, std::move(out));
}

void SynthSpec::validate() const {
  if (devices == 0 || images_per_device == 0) throw ConfigError("synth: need at least one device and one image");
  if (size == 0 || (channels != 1 && channels != 3)) throw ConfigError("synth: size must be positive and channels 1 or 3");
  if (gamma < 0.0 || theta_sigma < 0.0 || prnu_stddev < 0.0) {
    throw ConfigError("synth: gamma, theta_sigma and prnu_stddev must be nonnegative");
  }
  if (flat_level <= 0.0 || flat_level > 1.0) throw ConfigError("synth: flat_level must be in (0, 1]");
}

std::string synth_device_id(std::size_t device) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "dev%zu", device);
  return buf;
}

std::string synth_image_id(std::size_t device, std::size_t image) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "dev%zu_%03zu", device, image);
  return buf;
}

SynthCorpus synthesize_corpus(const SynthSpec& spec) {
  spec.validate();
  SynthCorpus corpus;
  corpus.spec = spec;
  const Shape shape{spec.size, spec.size, spec.channels};
  for (std::size_t d = 0; d < spec.devices; ++d) {
    Rng rng = make_rng({spec.seed, kPrnu, d});
    std::vector<double> k(shape.size());
    fill_gaussian(k, 0.0, spec.prnu_stddev, rng);
    SynthDevice device{synth_device_id(d),
                       Fingerprint::normalized(shape, std::move(k), FingerprintKind::device_prnu),
                       {}};
    const SensorNoiseParams noise{spec.gamma, spec.theta_sigma};
    const RasterImage flat = RasterImage::filled(shape, spec.flat_level);
    for (std::size_t f = 0; f < spec.flats_per_device; ++f) {
      device.flats.push_back(
          synthesize_sensor_image(flat, device.prnu, noise, derived_seed({spec.seed, kFlat, d, f})).image);
    }
    for (std::size_t i = 0; i < spec.images_per_device; ++i) {
      RasterImage clean = smooth_texture(shape, derived_seed({spec.seed, kTexture, d, i}), spec.texture);
      RasterImage sensor =
          synthesize_sensor_image(clean, device.prnu, noise, derived_seed({spec.seed, kSensor, d, i})).image;
      corpus.images.push_back({synth_image_id(d, i), device.id, std::move(clean), std::move(sensor)});
    }
    corpus.devices.push_back(std::move(device));
  }
  return corpus;
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  for (const char* sub : {"images", "clean", "flats", "fingerprints"}) fs::create_directories(dir / sub);
  DatasetManifest manifest;
  manifest.root = dir;
  for (std::size_t d = 0; d < corpus.devices.size(); ++d) {
    const SynthDevice& device = corpus.devices[d];
    ManifestDevice entry;
    entry.id = device.id;
    entry.fingerprint = fs::path("fingerprints") / (device.id + ".dpfp");
    write_dpfp(dir / *entry.fingerprint, device.prnu);
    for (std::size_t f = 0; f < device.flats.size(); ++f) {
      char name[64];
      std::snprintf(name, sizeof name, "%s_flat%03zu.png", device.id.c_str(), f);
      entry.flats.push_back(fs::path("flats") / name);
      write_png(dir / entry.flats.back(), device.flats[f], 16);
    }
    for (const SynthImage& image : corpus.images) {
      if (image.device != device.id) continue;
      const fs::path rel = fs::path("images") / (image.id + ".png");
      write_png(dir / rel, image.sensor, 16);
      write_png(dir / "clean" / (image.id + ".png"), image.clean, 16);
      entry.images.push_back({image.id, rel});
    }
    manifest.devices.push_back(std::move(entry));
  }
  manifest.save(dir / "manifest.json");
}

}  // namespace dippas
