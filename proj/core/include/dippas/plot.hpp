#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "dippas/evaluation.hpp"

namespace dippas {

struct ScatterPoint {
  std::string label;
  double x = 0.0;
  double y = 0.0;
};

// Standalone SVG documents.
std::string roc_svg(std::span<const RocCurve> curves, const std::string& title = "ROC");
std::string scatter_svg(std::span<const ScatterPoint> points, const std::string& x_label,
                        const std::string& y_label, const std::string& title);

// Mean PSNR against AUC, one point per ROC curve (per-device and pooled).
std::vector<ScatterPoint> psnr_auc_points(const EvaluationReport& report);

void write_plots(const EvaluationReport& report, const std::filesystem::path& dir);

}  // namespace dippas
