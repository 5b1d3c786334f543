#include "dippas/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "dippas/formats.hpp"

namespace dippas {
namespace {

constexpr double kWidth = 480;
constexpr double kHeight = 400;
constexpr double kLeft = 60;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Axes {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

std::string frame(const Axes& a, const std::string& title, const std::string& xl, const std::string& yl) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
                  num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) + "</text>\n";
  s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(kWidth - kLeft - kRight) +
       "\" height=\"" + num(kHeight - kTop - kBottom) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = a.x0 + (a.x1 - a.x0) * i / 4.0;
    const double fy = a.y0 + (a.y1 - a.y0) * i / 4.0;
    s += "<text x=\"" + num(a.px(fx)) + "\" y=\"" + num(kHeight - kBottom + 16) + "\" text-anchor=\"middle\">" + num(fx) + "</text>\n";
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(a.py(fy) + 4) + "\" text-anchor=\"end\">" + num(fy) + "</text>\n";
  }
  s += "<text x=\"" + num(kLeft + (kWidth - kLeft - kRight) / 2) + "\" y=\"" + num(kHeight - 12) +
       "\" text-anchor=\"middle\">" + escape(xl) + "</text>\n";
  s += "<text x=\"16\" y=\"" + num(kTop + (kHeight - kTop - kBottom) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       num(kTop + (kHeight - kTop - kBottom) / 2) + ")\">" + escape(yl) + "</text>\n";
  return s;
}

std::string legend_entry(std::size_t i, const std::string& label) {
  const double y = kTop + 16 + 16 * static_cast<double>(i);
  const double x = kWidth - kRight - 150;
  return "<rect x=\"" + num(x) + "\" y=\"" + num(y - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
         kPalette[i % std::size(kPalette)] + "\"/><text x=\"" + num(x + 14) + "\" y=\"" + num(y) + "\">" +
         escape(label) + "</text>\n";
}

}  // namespace

std::string roc_svg(std::span<const RocCurve> curves, const std::string& title) {
  const Axes a{0, 1, 0, 1};
  std::string s = frame(a, title, "false positive rate", "true positive rate");
  s += "<line x1=\"" + num(a.px(0)) + "\" y1=\"" + num(a.py(0)) + "\" x2=\"" + num(a.px(1)) + "\" y2=\"" +
       num(a.py(1)) + "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"/>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    std::string pts;
    for (const RocPoint& p : curves[i].points) pts += num(a.px(p.false_positive_rate)) + "," + num(a.py(p.true_positive_rate)) + " ";
    s += "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" + std::string(kPalette[i % std::size(kPalette)]) +
         "\" points=\"" + pts + "\"/>\n";
    char label[160];
    std::snprintf(label, sizeof label, "%s (AUC %.3f)", curves[i].label.c_str(), curves[i].auc);
    s += legend_entry(i, label);
  }
  return s + "</svg>\n";
}

std::string scatter_svg(std::span<const ScatterPoint> points, const std::string& x_label,
                        const std::string& y_label, const std::string& title) {
  double x0 = 0;
  double x1 = 1;
  if (!points.empty()) {
    const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                              [](const ScatterPoint& p, const ScatterPoint& q) { return p.x < q.x; });
    x0 = std::floor(lo->x) - 1;
    x1 = std::ceil(hi->x) + 1;
    if (!std::isfinite(x0) || !std::isfinite(x1)) {
      x0 = 0;
      x1 = 100;
    }
  }
  const Axes a{x0, x1, 0, 1};
  std::string s = frame(a, title, x_label, y_label);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = std::clamp(points[i].x, x0, x1);
    s += "<circle cx=\"" + num(a.px(x)) + "\" cy=\"" + num(a.py(points[i].y)) + "\" r=\"5\" fill=\"" +
         kPalette[i % std::size(kPalette)] + "\"/>\n";
    s += legend_entry(i, points[i].label);
  }
  return s + "</svg>\n";
}

std::vector<ScatterPoint> psnr_auc_points(const EvaluationReport& report) {
  std::map<std::string, std::pair<double, std::size_t>> by_device;
  double total = 0.0;
  for (const auto& im : report.per_image) {
    auto& [sum, n] = by_device[im.device];
    sum += im.metrics.psnr_db;
    ++n;
    total += im.metrics.psnr_db;
  }
  std::vector<ScatterPoint> out;
  for (const RocCurve& c : report.roc) {
    const auto it = by_device.find(c.label);
    if (it != by_device.end()) {
      out.push_back({c.label, it->second.first / static_cast<double>(it->second.second), c.auc});
    } else if (!report.per_image.empty()) {
      out.push_back({c.label, total / static_cast<double>(report.per_image.size()), c.auc});
    }
  }
  return out;
}

void write_plots(const EvaluationReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "roc.svg", roc_svg(report.roc));
  const auto points = psnr_auc_points(report);
  write_file_atomic(dir / "psnr_auc.svg", scatter_svg(points, "PSNR [dB]", "AUC", "PSNR vs AUC"));
}

}  // namespace dippas
