#pragma once

#include <span>

namespace dippas {

// Norm below which a mean-removed operand is treated as carrying no signal.
inline constexpr double kNccEpsilon = 1e-12;

// Pearson-style normalized cross-correlation: both operands are mean-removed,
// then <a, b> / (|a|_F |b|_F). Result lies in [-1, 1].
// Throws DimensionError on a size mismatch or empty input and
// DegenerateInputError when either centered norm is below kNccEpsilon.
double ncc(std::span<const double> a, std::span<const double> b);

// Same statistic restricted to entries where `mask` is set.
double masked_ncc(std::span<const double> a, std::span<const double> b,
                  std::span<const unsigned char> mask);

}  // namespace dippas
