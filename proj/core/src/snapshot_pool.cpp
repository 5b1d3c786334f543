#include "dippas/snapshot_pool.hpp"

#include <random>
#include <stdexcept>
#include <string>

#include "dippas/errors.hpp"
#include "dippas/formats.hpp"

namespace dippas {

struct SnapshotPool::TempDir {
  std::filesystem::path path;

  TempDir() {
    std::random_device rd;
    const auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0; attempt < 16; ++attempt) {
      auto candidate = base / ("dippas-pool-" + std::to_string(rd()));
      if (std::filesystem::create_directory(candidate)) {
        path = std::move(candidate);
        return;
      }
    }
    throw IoError("cannot create a temporary snapshot directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

SnapshotPool::SnapshotPool(std::size_t memory_capacity, std::filesystem::path spill_dir)
    : capacity_(memory_capacity), spill_dir_(std::move(spill_dir)) {}

void SnapshotPool::append(std::size_t iteration, RasterImage image, double psnr_db) {
  if (!info_.empty()) {
    if (iteration <= info_.back().iteration) {
      throw std::invalid_argument("snapshot iterations must be strictly increasing");
    }
    require_same_shape(image.shape(), shape_, "SnapshotPool::append");
  } else {
    shape_ = image.shape();
  }

  if (images_.size() < capacity_ && images_.size() == info_.size()) {
    images_.push_back(std::move(image));
  } else {
    if (spill_dir_.empty()) {
      if (!temp_dir_) temp_dir_ = std::make_shared<TempDir>();
      spill_dir_ = temp_dir_->path;
    }
    write_dpim(spill_path(iteration), image);
  }
  info_.push_back({iteration, psnr_db});
}

std::filesystem::path SnapshotPool::spill_path(std::size_t iteration) const {
  return spill_dir_ / "snapshots" / ("iter_" + std::to_string(iteration) + ".dpimg");
}

RasterImage SnapshotPool::image(std::size_t i) const {
  if (i >= info_.size()) throw std::out_of_range("snapshot index out of range");
  if (i < images_.size()) return images_[i];
  return read_dpim(spill_path(info_[i].iteration));
}

}  // namespace dippas
