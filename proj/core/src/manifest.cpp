#include "dippas/manifest.hpp"

#include <set>

#include "dippas/errors.hpp"
#include "dippas/formats.hpp"

namespace dippas {
namespace {

std::string relative_string(const std::filesystem::path& p, const std::filesystem::path& root) {
  if (p.is_relative() || root.empty()) return p.generic_string();
  const auto rel = p.lexically_relative(root);
  if (rel.empty() || *rel.begin() == "..") return p.generic_string();
  return rel.generic_string();
}

}  // namespace

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j, std::filesystem::path root) {
  DatasetManifest m;
  m.root = std::move(root);
  try {
    for (const auto& d : j.at("devices")) {
      ManifestDevice dev;
      dev.id = d.at("id").get<std::string>();
      if (d.contains("fingerprint")) dev.fingerprint = d.at("fingerprint").get<std::string>();
      if (d.contains("flats")) {
        for (const auto& f : d.at("flats")) dev.flats.emplace_back(f.get<std::string>());
      }
      if (d.contains("images")) {
        for (const auto& im : d.at("images")) {
          if (im.is_string()) {
            std::filesystem::path p = im.get<std::string>();
            dev.images.push_back({p.stem().string(), p});
          } else {
            dev.images.push_back({im.at("id").get<std::string>(), im.at("path").get<std::string>()});
          }
        }
      }
      m.devices.push_back(std::move(dev));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& file, bool check_paths) {
  const auto bytes = read_file(file);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  DatasetManifest m = from_json(j, file.parent_path());
  m.validate(check_paths);
  return m;
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json devs = nlohmann::json::array();
  for (const auto& d : devices) {
    nlohmann::json jd;
    jd["id"] = d.id;
    if (d.fingerprint) jd["fingerprint"] = relative_string(*d.fingerprint, root);
    jd["flats"] = nlohmann::json::array();
    for (const auto& f : d.flats) jd["flats"].push_back(relative_string(f, root));
    jd["images"] = nlohmann::json::array();
    for (const auto& im : d.images) {
      jd["images"].push_back({{"id", im.id}, {"path", relative_string(im.path, root)}});
    }
    devs.push_back(std::move(jd));
  }
  return {{"devices", std::move(devs)}};
}

void DatasetManifest::save(const std::filesystem::path& file) const {
  write_file_atomic(file, to_json().dump(2) + "\n");
}

void DatasetManifest::validate(bool check_paths) const {
  std::set<std::string> device_ids;
  std::set<std::string> image_ids;
  std::vector<std::string> problems;
  for (const auto& d : devices) {
    if (d.id.empty()) problems.push_back("empty device id");
    if (!device_ids.insert(d.id).second) problems.push_back("duplicate device id '" + d.id + "'");
    for (const auto& im : d.images) {
      if (!image_ids.insert(im.id).second) problems.push_back("duplicate image id '" + im.id + "'");
    }
    if (!check_paths) continue;
    auto check = [&](const std::filesystem::path& p) {
      if (!std::filesystem::exists(resolve(p))) problems.push_back("missing file " + resolve(p).string());
    };
    if (d.fingerprint) check(*d.fingerprint);
    for (const auto& f : d.flats) check(f);
    for (const auto& im : d.images) check(im.path);
  }
  if (!problems.empty()) {
    std::string msg = "invalid manifest:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

const ManifestDevice& DatasetManifest::device(const std::string& id) const {
  for (const auto& d : devices) {
    if (d.id == id) return d;
  }
  throw ConfigError("unknown device '" + id + "'");
}

std::optional<std::string> DatasetManifest::device_of(const std::string& image_id) const {
  for (const auto& d : devices) {
    for (const auto& im : d.images) {
      if (im.id == image_id) return d.id;
    }
  }
  return std::nullopt;
}

std::filesystem::path DatasetManifest::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : root / p;
}

}  // namespace dippas
