#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dippas {

struct ManifestImage {
  std::string id;
  std::filesystem::path path;
};

struct ManifestDevice {
  std::string id;
  std::optional<std::filesystem::path> fingerprint;
  std::vector<std::filesystem::path> flats;
  std::vector<ManifestImage> images;
};

// JSON dataset description. Relative paths are resolved against `root`
// (the directory holding the manifest file).
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestDevice> devices;

  // Throws IoError when unreadable, ConfigError when malformed, with
  // duplicate ids, or (check_paths) naming files that do not exist.
  static DatasetManifest load(const std::filesystem::path& file, bool check_paths = true);
  static DatasetManifest from_json(const nlohmann::json& j, std::filesystem::path root);

  nlohmann::json to_json() const;
  void save(const std::filesystem::path& file) const;

  void validate(bool check_paths) const;
  const ManifestDevice& device(const std::string& id) const;
  std::optional<std::string> device_of(const std::string& image_id) const;
  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

}  // namespace dippas
