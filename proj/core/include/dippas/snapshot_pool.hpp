#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "dippas/raster.hpp"

namespace dippas {

// One optimization step as logged to trace.jsonl.
struct TraceRecord {
  std::size_t iteration = 0;
  double loss = 0.0;     // injection objective J
  double psnr_db = 0.0;  // generated image vs target
  double gamma = 0.0;    // injection gain used for `loss`
  std::optional<double> fingerprint_ncc;  // present on probe iterations
};

struct SnapshotInfo {
  std::size_t iteration = 0;
  double psnr_db = 0.0;
};

// Generated images collected during a run, in increasing iteration order.
// The first `memory_capacity` images stay in memory; later ones are written
// to `<spill_dir>/snapshots/iter_<n>.dpimg`. Without a spill directory a
// private temporary one is created on demand and removed with the pool.
class SnapshotPool {
 public:
  explicit SnapshotPool(std::size_t memory_capacity = 256, std::filesystem::path spill_dir = {});

  SnapshotPool(SnapshotPool&&) noexcept = default;
  SnapshotPool& operator=(SnapshotPool&&) noexcept = default;
  SnapshotPool(const SnapshotPool&) = delete;
  SnapshotPool& operator=(const SnapshotPool&) = delete;

  // Throws std::invalid_argument unless `iteration` exceeds the last one and
  // the shape matches earlier snapshots.
  void append(std::size_t iteration, RasterImage image, double psnr_db);

  std::size_t size() const noexcept { return info_.size(); }
  bool empty() const noexcept { return info_.empty(); }
  const SnapshotInfo& info(std::size_t i) const { return info_.at(i); }
  const std::vector<SnapshotInfo>& infos() const noexcept { return info_; }
  const Shape& shape() const noexcept { return shape_; }

  // Loads spilled snapshots from disk.
  RasterImage image(std::size_t i) const;
  bool in_memory(std::size_t i) const { return i < images_.size(); }
  std::size_t spilled() const noexcept { return info_.size() - images_.size(); }

  double final_gamma = 0.0;
  std::vector<TraceRecord> trace;

 private:
  std::filesystem::path spill_path(std::size_t iteration) const;

  struct TempDir;

  std::size_t capacity_;
  std::filesystem::path spill_dir_;
  std::shared_ptr<TempDir> temp_dir_;
  Shape shape_;
  std::vector<SnapshotInfo> info_;
  std::vector<RasterImage> images_;
};

}  // namespace dippas
