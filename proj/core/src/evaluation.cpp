#include "dippas/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dippas/errors.hpp"
#include "dippas/metrics.hpp"
#include "dippas/ncc.hpp"

namespace dippas {

RocCurve roc_auc(std::span<const double> positives, std::span<const double> negatives,
                 std::string label) {
  if (positives.empty() || negatives.empty()) {
    throw std::invalid_argument("roc_auc: need at least one positive and one negative score");
  }
  struct Scored {
    double value;
    bool positive;
  };
  std::vector<Scored> all;
  all.reserve(positives.size() + negatives.size());
  for (double v : positives) all.push_back({v, true});
  for (double v : negatives) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.value > b.value; });

  const double n_pos = static_cast<double>(positives.size());
  const double n_neg = static_cast<double>(negatives.size());

  RocCurve curve;
  curve.label = std::move(label);
  curve.points.push_back({0.0, 0.0});
  // Walk thresholds from high to low; each group of tied scores moves the
  // curve diagonally, which is what gives ties a weight of one half.
  double tp = 0.0;
  double fp = 0.0;
  double area = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    double group_tp = 0.0;
    double group_fp = 0.0;
    while (j < all.size() && all[j].value == all[i].value) {
      (all[j].positive ? group_tp : group_fp) += 1.0;
      ++j;
    }
    area += group_fp * (tp + 0.5 * group_tp);
    tp += group_tp;
    fp += group_fp;
    curve.points.push_back({fp / n_neg, tp / n_pos});
    i = j;
  }
  curve.auc = area / (n_pos * n_neg);
  return curve;
}

RocCurve roc_auc(std::span<const ScorePair> scores, std::string label) {
  std::vector<double> positives;
  std::vector<double> negatives;
  for (const ScorePair& s : scores) {
    (s.population == Population::positive ? positives : negatives).push_back(s.ncc_value);
  }
  return roc_auc(positives, negatives, std::move(label));
}

std::size_t EdgeMask::selected() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

EdgeMask edge_mask(const RasterImage& image, const EdgeMaskParams& params) {
  const std::size_t h = image.height();
  const std::size_t w = image.width();
  const std::size_t c = image.channels();
  std::vector<double> luma(h * w);
  for (std::size_t p = 0; p < h * w; ++p) {
    const auto px = image.pixels().subspan(p * c, c);
    luma[p] = c == 3 ? 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]
                     : std::accumulate(px.begin(), px.end(), 0.0) / static_cast<double>(c);
  }
  auto at = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
    y = std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(h) - 1);
    x = std::clamp<std::ptrdiff_t>(x, 0, static_cast<std::ptrdiff_t>(w) - 1);
    return luma[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };
  std::vector<double> magnitude(h * w);
  for (std::size_t yy = 0; yy < h; ++yy) {
    for (std::size_t xx = 0; xx < w; ++xx) {
      const auto y = static_cast<std::ptrdiff_t>(yy);
      const auto x = static_cast<std::ptrdiff_t>(xx);
      const double gx = (at(y - 1, x + 1) + 2 * at(y, x + 1) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2 * at(y, x - 1) + at(y + 1, x - 1));
      const double gy = (at(y + 1, x - 1) + 2 * at(y + 1, x) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2 * at(y - 1, x) + at(y - 1, x + 1));
      magnitude[yy * w + xx] = std::hypot(gx, gy);
    }
  }

  std::vector<double> sorted = magnitude;
  const auto rank = static_cast<std::size_t>(
      std::floor(params.percentile * static_cast<double>(sorted.size() - 1)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank), sorted.end());
  const double threshold = sorted[rank];

  EdgeMask out;
  out.height = h;
  out.width = w;
  out.mask.assign(h * w, 0);
  for (std::size_t p = 0; p < h * w; ++p) out.mask[p] = magnitude[p] > threshold ? 1 : 0;

  for (std::size_t pass = 0; pass < params.dilations; ++pass) {
    std::vector<unsigned char> grown(out.mask.size(), 0);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        if (!out.mask[y * w + x]) continue;
        for (std::size_t ny = y > 0 ? y - 1 : 0; ny <= std::min(h - 1, y + 1); ++ny) {
          for (std::size_t nx = x > 0 ? x - 1 : 0; nx <= std::min(w - 1, x + 1); ++nx) {
            grown[ny * w + nx] = 1;
          }
        }
      }
    }
    out.mask = std::move(grown);
  }
  const std::size_t selected = out.selected();
  out.coverage = static_cast<double>(selected) / static_cast<double>(h * w);
  out.degenerate = selected == 0;
  return out;
}

double masked_device_ncc(const RasterImage& image, const Fingerprint& k, const EdgeMask& mask) {
  if (k.kind != FingerprintKind::device_prnu) {
    throw ConfigError("masked_device_ncc: fingerprint must be a device PRNU");
  }
  require_same_shape(image.shape(), k.shape, "masked_device_ncc");
  if (mask.height != image.height() || mask.width != image.width()) {
    throw DimensionError("masked_device_ncc: mask extent differs from the image");
  }
  if (mask.selected() == 0) throw std::invalid_argument("masked_device_ncc: empty mask");

  const std::size_t c = image.channels();
  std::vector<unsigned char> volume_mask(image.pixels().size());
  for (std::size_t i = 0; i < volume_mask.size(); ++i) volume_mask[i] = mask.mask[i / c];
  const Fingerprint w = extract_noise_residual(image);
  return masked_ncc(w.pattern, modulate(image, k), volume_mask);
}

double edge_auc_relative_change(double full_auc, double edge_auc) {
  if (full_auc == 0.0) throw std::domain_error("edge_auc_relative_change: full AUC is zero");
  return (edge_auc - full_auc) / full_auc;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double number(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw IoError("report: unexpected numeric string '" + s + "'");
  }
  return j.get<double>();
}

nlohmann::json metrics_json(const ImageMetrics& m) {
  nlohmann::json by_device = nlohmann::json::object();
  for (const auto& [device, value] : m.ncc_by_device) by_device[device] = number(value);
  return {{"psnr_db", number(m.psnr_db)}, {"ncc_by_device", by_device}};
}

ImageMetrics metrics_from(const nlohmann::json& j) {
  ImageMetrics m;
  m.psnr_db = number(j.at("psnr_db"));
  for (const auto& [device, value] : j.at("ncc_by_device").items()) {
    m.ncc_by_device[device] = number(value);
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json config = nlohmann::json::object();
  if (report.config.block_size) config["block_size"] = *report.config.block_size;
  if (report.config.average_count) config["average_count"] = *report.config.average_count;
  if (report.config.tau_psnr_db) config["tau_psnr_db"] = number(*report.config.tau_psnr_db);
  if (!report.config.mode.empty()) config["mode"] = report.config.mode;

  nlohmann::json images = nlohmann::json::array();
  for (const ImageReport& img : report.per_image) {
    nlohmann::json entry = metrics_json(img.metrics);
    entry["id"] = img.id;
    entry["device"] = img.device;
    if (!img.edge_ncc_by_device.empty()) {
      nlohmann::json edge = nlohmann::json::object();
      for (const auto& [device, value] : img.edge_ncc_by_device) edge[device] = number(value);
      entry["edge_ncc_by_device"] = edge;
    }
    if (img.quantized) entry["quantized"] = metrics_json(*img.quantized);
    images.push_back(std::move(entry));
  }

  nlohmann::json roc = nlohmann::json::array();
  for (const RocCurve& curve : report.roc) {
    nlohmann::json points = nlohmann::json::array();
    for (const RocPoint& p : curve.points) {
      points.push_back({p.false_positive_rate, p.true_positive_rate});
    }
    roc.push_back({{"label", curve.label}, {"auc", curve.auc}, {"points", points}});
  }

  return {
      {"config", config},
      {"per_image", images},
      {"roc", roc},
      {"auc", report.auc},
      {"edge_auc", report.edge_auc ? nlohmann::json(*report.edge_auc) : nlohmann::json()},
      {"edge_auc_relative_change", report.edge_auc_relative_change
                                       ? nlohmann::json(*report.edge_auc_relative_change)
                                       : nlohmann::json()},
  };
}

EvaluationReport report_from_json(const nlohmann::json& j) {
  EvaluationReport report;
  const auto& config = j.at("config");
  if (config.contains("block_size")) report.config.block_size = config["block_size"].get<std::size_t>();
  if (config.contains("average_count")) {
    report.config.average_count = config["average_count"].get<std::size_t>();
  }
  if (config.contains("tau_psnr_db")) report.config.tau_psnr_db = number(config["tau_psnr_db"]);
  if (config.contains("mode")) report.config.mode = config["mode"].get<std::string>();

  for (const auto& entry : j.at("per_image")) {
    ImageReport img;
    img.id = entry.at("id").get<std::string>();
    img.device = entry.at("device").get<std::string>();
    img.metrics = metrics_from(entry);
    if (entry.contains("edge_ncc_by_device")) {
      for (const auto& [device, value] : entry["edge_ncc_by_device"].items()) {
        img.edge_ncc_by_device[device] = number(value);
      }
    }
    if (entry.contains("quantized")) img.quantized = metrics_from(entry["quantized"]);
    report.per_image.push_back(std::move(img));
  }
  for (const auto& curve : j.at("roc")) {
    RocCurve c;
    c.label = curve.at("label").get<std::string>();
    c.auc = curve.at("auc").get<double>();
    for (const auto& p : curve.at("points")) c.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    report.roc.push_back(std::move(c));
  }
  report.auc = j.at("auc").get<double>();
  if (!j.at("edge_auc").is_null()) report.edge_auc = j["edge_auc"].get<double>();
  if (!j.at("edge_auc_relative_change").is_null()) {
    report.edge_auc_relative_change = j["edge_auc_relative_change"].get<double>();
  }
  return report;
}

// ---------------------------------------------------------------------------
// Dataset evaluation

namespace {

ImageMetrics image_metrics(const RasterImage& original, const RasterImage& tested,
                           const std::map<std::string, Fingerprint>& fingerprints) {
  ImageMetrics m;
  m.psnr_db = psnr(tested, original);
  for (const auto& [device, k] : fingerprints) m.ncc_by_device[device] = device_ncc(tested, k);
  return m;
}

}  // namespace

EvaluationReport evaluate_dataset(std::span<const DatasetImage> images,
                                  const std::map<std::string, Fingerprint>& fingerprints,
                                  const EvaluationOptions& options) {
  if (fingerprints.size() < 2) {
    throw ConfigError("evaluate_dataset: need fingerprints for at least two devices");
  }
  std::vector<std::string> missing;
  for (const DatasetImage& img : images) {
    if (!fingerprints.contains(img.device)) {
      missing.push_back(img.id + " (device " + img.device + ")");
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("evaluate_dataset: no fingerprint for " + list);
  }

  std::vector<const DatasetImage*> ordered;
  for (const DatasetImage& img : images) ordered.push_back(&img);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const DatasetImage* a, const DatasetImage* b) { return a->id < b->id; });

  EvaluationReport report;
  std::vector<ScorePair> pooled;
  std::vector<ScorePair> pooled_edge;
  std::map<std::string, std::vector<ScorePair>> by_device;
  bool edge_ok = options.edge_analysis;

  for (const DatasetImage* img : ordered) {
    ImageReport entry;
    entry.id = img->id;
    entry.device = img->device;
    entry.metrics = image_metrics(img->original, img->anonymized, fingerprints);
    if (img->anonymized_quantized) {
      entry.quantized = image_metrics(img->original, *img->anonymized_quantized, fingerprints);
    }
    if (edge_ok) {
      const EdgeMask mask = edge_mask(img->anonymized, options.edge_params);
      if (mask.degenerate) {
        edge_ok = false;
      } else {
        for (const auto& [device, k] : fingerprints) {
          try {
            entry.edge_ncc_by_device[device] = masked_device_ncc(img->anonymized, k, mask);
          } catch (const DegenerateInputError&) {
            edge_ok = false;
          }
        }
      }
    }
    for (const auto& [device, value] : entry.metrics.ncc_by_device) {
      const Population pop = device == img->device ? Population::positive : Population::negative;
      ScorePair score{img->id, device, value, pop};
      pooled.push_back(score);
      by_device[device].push_back(score);
      if (edge_ok && entry.edge_ncc_by_device.contains(device)) {
        pooled_edge.push_back({img->id, device, entry.edge_ncc_by_device[device], pop});
      }
    }
    report.per_image.push_back(std::move(entry));
  }

  for (const auto& [device, scores] : by_device) {
    const bool has_pos = std::any_of(scores.begin(), scores.end(),
                                     [](const ScorePair& s) { return s.population == Population::positive; });
    const bool has_neg = std::any_of(scores.begin(), scores.end(),
                                     [](const ScorePair& s) { return s.population == Population::negative; });
    if (has_pos && has_neg) report.roc.push_back(roc_auc(scores, device));
  }
  RocCurve pooled_curve = roc_auc(pooled, "pooled");
  report.auc = pooled_curve.auc;
  report.roc.push_back(std::move(pooled_curve));

  if (edge_ok && !pooled_edge.empty()) {
    report.edge_auc = roc_auc(pooled_edge, "pooled_edges").auc;
    report.edge_auc_relative_change = edge_auc_relative_change(report.auc, *report.edge_auc);
  } else {
    for (ImageReport& entry : report.per_image) entry.edge_ncc_by_device.clear();
  }
  return report;
}

}  // namespace dippas
