#include "dippas/ncc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dippas/errors.hpp"

namespace dippas {
namespace {

template <typename Select>
double centered_correlation(std::span<const double> a, std::span<const double> b,
                            Select selected) {
  if (a.size() != b.size()) {
    throw DimensionError("ncc: operand sizes differ (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
  double sum_a = 0.0;
  double sum_b = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!selected(i)) continue;
    sum_a += a[i];
    sum_b += b[i];
    ++count;
  }
  if (count == 0) throw DimensionError("ncc: no samples selected");
  const double mean_a = sum_a / static_cast<double>(count);
  const double mean_b = sum_b / static_cast<double>(count);

  double dot = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!selected(i)) continue;
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    dot += da * db;
    norm_a += da * da;
    norm_b += db * db;
  }
  norm_a = std::sqrt(norm_a);
  norm_b = std::sqrt(norm_b);
  if (!(norm_a >= kNccEpsilon) || !(norm_b >= kNccEpsilon)) {
    throw DegenerateInputError("ncc: operand has zero variance over the selected samples");
  }
  return std::clamp(dot / (norm_a * norm_b), -1.0, 1.0);
}

}  // namespace

double ncc(std::span<const double> a, std::span<const double> b) {
  return centered_correlation(a, b, [](std::size_t) { return true; });
}

double masked_ncc(std::span<const double> a, std::span<const double> b,
                  std::span<const unsigned char> mask) {
  if (mask.size() != a.size()) {
    throw DimensionError("masked ncc: mask has " + std::to_string(mask.size()) +
                         " entries, operands have " + std::to_string(a.size()));
  }
  return centered_correlation(a, b, [&](std::size_t i) { return mask[i] != 0; });
}

}  // namespace dippas
