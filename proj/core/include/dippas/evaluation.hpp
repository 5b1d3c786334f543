#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dippas/fingerprint.hpp"
#include "dippas/raster.hpp"

namespace dippas {

enum class Population { positive, negative };

struct ScorePair {
  std::string image_id;
  std::string device_id;  // fingerprint the image was tested against
  double ncc_value = 0.0;
  Population population = Population::negative;
};

struct RocPoint {
  double false_positive_rate = 0.0;
  double true_positive_rate = 0.0;
  bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
  std::string label;  // device id, or "pooled"
  double auc = 0.0;
  std::vector<RocPoint> points;  // from (0, 0) to (1, 1), nondecreasing in both axes
  bool operator==(const RocCurve&) const = default;
};

// Mann-Whitney AUC (ties count one half) with the empirical ROC curve.
// Throws std::invalid_argument unless both populations are present.
RocCurve roc_auc(std::span<const ScorePair> scores, std::string label = "pooled");
RocCurve roc_auc(std::span<const double> positives, std::span<const double> negatives,
                 std::string label = "pooled");

// Boolean H x W mask of high-gradient pixels.
struct EdgeMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<unsigned char> mask;
  double coverage = 0.0;
  bool degenerate = false;  // no gradient anywhere; the mask is empty

  std::size_t selected() const;
};

struct EdgeMaskParams {
  double percentile = 0.90;
  std::size_t dilations = 1;
};

// Sobel magnitude of the luminance (replicated borders), thresholded strictly
// above the given percentile, then dilated with a 3x3 square.
EdgeMask edge_mask(const RasterImage& image, const EdgeMaskParams& params = {});

// device_ncc() with mean removal and norms over masked pixels only; the mask
// applies to every channel. Throws std::invalid_argument on an empty mask,
// DegenerateInputError when the masked operands have no variance.
double masked_device_ncc(const RasterImage& image, const Fingerprint& k, const EdgeMask& mask);

// (edge_auc - full_auc) / full_auc. Throws std::domain_error if full_auc == 0.
double edge_auc_relative_change(double full_auc, double edge_auc);

struct ReportConfig {
  std::optional<std::size_t> block_size;
  std::optional<std::size_t> average_count;
  std::optional<double> tau_psnr_db;
  std::string mode;
  bool operator==(const ReportConfig&) const = default;
};

struct ImageMetrics {
  double psnr_db = 0.0;
  std::map<std::string, double> ncc_by_device;
  bool operator==(const ImageMetrics&) const = default;
};

struct ImageReport {
  std::string id;
  std::string device;
  ImageMetrics metrics;
  std::map<std::string, double> edge_ncc_by_device;
  std::optional<ImageMetrics> quantized;  // metrics of the 8-bit export, when available
  bool operator==(const ImageReport&) const = default;
};

struct EvaluationReport {
  ReportConfig config;
  std::vector<ImageReport> per_image;
  std::vector<RocCurve> roc;  // one per device, then the pooled curve
  double auc = 0.0;           // pooled
  std::optional<double> edge_auc;
  std::optional<double> edge_auc_relative_change;
  bool operator==(const EvaluationReport&) const = default;
};

nlohmann::json to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j);

struct DatasetImage {
  std::string id;
  std::string device;
  RasterImage original;
  RasterImage anonymized;
  std::optional<RasterImage> anonymized_quantized;
};

struct EvaluationOptions {
  bool edge_analysis = true;
  EdgeMaskParams edge_params;
};

// Per-image PSNR against the original and device NCC against every
// fingerprint; positives are images tested against their own device.
// Images are processed in id order. Throws ConfigError with fewer than two
// devices or when an image's device has no fingerprint.
EvaluationReport evaluate_dataset(std::span<const DatasetImage> images,
                                  const std::map<std::string, Fingerprint>& fingerprints,
                                  const EvaluationOptions& options = {});

}  // namespace dippas
