#include "dippas/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <stdexcept>

#include <Eigen/Core>

#include "dippas/errors.hpp"

namespace dippas::nn {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using StridedMap = Eigen::Map<RowMatrix<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const RowMatrix<T>, 0, Eigen::OuterStride<>>;

template <typename T>
void add_into(Tensor<T>& acc, const Tensor<T>& x) {
  for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += x.data[i];
}

// Output columns [lo, hi) whose input column ox * stride + kx - pad lies inside [0, in_w).
std::pair<std::size_t, std::size_t> valid_range(std::size_t out_w, std::size_t in_w,
                                                std::size_t stride, std::size_t kx,
                                                std::size_t pad) {
  const std::size_t lo = kx >= pad ? 0 : (pad - kx + stride - 1) / stride;
  if (in_w + pad <= kx) return {lo, lo};
  const std::size_t hi = std::min(out_w, (in_w - 1 + pad - kx) / stride + 1);
  return {lo, std::max(lo, hi)};
}

// Sums f(i) over [0, n) in double with a fixed lane split so the loop vectorizes
// while the result stays independent of the build.
template <typename F>
double lane_sum(std::size_t n, F&& f) {
  constexpr std::size_t kLanes = 8;
  double lanes[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) lanes[l] += f(i + l);
  }
  for (; i < n; ++i) lanes[i % kLanes] += f(i);
  double total = 0.0;
  for (double v : lanes) total += v;
  return total;
}

}  // namespace

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.height != b.height || a.width != b.width) {
    throw DimensionError("concat_channels: spatial extents differ");
  }
  Tensor<T> out;
  out.channels = a.channels + b.channels;
  out.height = a.height;
  out.width = a.width;
  out.data.reserve(a.size() + b.size());
  out.data.insert(out.data.end(), a.data.begin(), a.data.end());
  out.data.insert(out.data.end(), b.data.begin(), b.data.end());
  return out;
}

template <typename T>
void split_channels(const Tensor<T>& joined, std::size_t first_channels, Tensor<T>& a,
                    Tensor<T>& b) {
  const std::size_t plane = joined.plane();
  const std::size_t cut = first_channels * plane;
  a.channels = first_channels;
  a.height = joined.height;
  a.width = joined.width;
  a.data.assign(joined.data.begin(), joined.data.begin() + static_cast<std::ptrdiff_t>(cut));
  b.channels = joined.channels - first_channels;
  b.height = joined.height;
  b.width = joined.width;
  b.data.assign(joined.data.begin() + static_cast<std::ptrdiff_t>(cut), joined.data.end());
}

template <typename T>
Tensor<T> upsample_nearest2(const Tensor<T>& x) {
  Tensor<T> out(x.channels, x.height * 2, x.width * 2);
  for (std::size_t c = 0; c < x.channels; ++c) {
    const T* src = x.channel(c);
    T* dst = out.channel(c);
    for (std::size_t y = 0; y < out.height; ++y) {
      const T* row = src + (y / 2) * x.width;
      T* orow = dst + y * out.width;
      for (std::size_t xx = 0; xx < out.width; ++xx) orow[xx] = row[xx / 2];
    }
  }
  return out;
}

template <typename T>
Tensor<T> upsample_nearest2_backward(const Tensor<T>& grad) {
  Tensor<T> out(grad.channels, grad.height / 2, grad.width / 2);
  for (std::size_t c = 0; c < grad.channels; ++c) {
    const T* src = grad.channel(c);
    T* dst = out.channel(c);
    for (std::size_t y = 0; y < grad.height; ++y) {
      const T* row = src + y * grad.width;
      T* orow = dst + (y / 2) * out.width;
      for (std::size_t xx = 0; xx < grad.width; ++xx) orow[xx / 2] += row[xx];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels,
                  std::size_t kernel, std::size_t stride, bool bias)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      has_bias_(bias),
      weight_(name + ".weight", out_channels * in_channels * kernel * kernel),
      bias_(name + ".bias", bias ? out_channels : 0) {
  if (kernel % 2 == 0 || stride == 0 || in_channels == 0 || out_channels == 0) {
    throw ConfigError("Conv2d " + name + ": invalid geometry");
  }
}

template <typename T>
void Conv2d<T>::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_ * kernel_ * kernel_));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (T& w : weight_.value) w = static_cast<T>(dist(rng));
  for (T& b : bias_.value) b = static_cast<T>(dist(rng));
}

template <typename T>
std::size_t Conv2d<T>::band_rows() const {
  constexpr std::size_t kBandBytes = 192 * 1024;
  const std::size_t row_bytes = in_ * kernel_ * kernel_ * out_w_ * sizeof(T);
  return std::clamp<std::size_t>(kBandBytes / std::max<std::size_t>(row_bytes, 1), 1, out_h_);
}

template <typename T>
void Conv2d<T>::unfold_band(std::size_t oy0, std::size_t oy1, T* dst) const {
  const std::size_t pad = kernel_ / 2;
  const std::size_t band = (oy1 - oy0) * out_w_;
  for (std::size_t c = 0; c < in_; ++c) {
    const T* src = input_.channel(c);
    for (std::size_t ky = 0; ky < kernel_; ++ky) {
      for (std::size_t kx = 0; kx < kernel_; ++kx) {
        T* plane = dst + ((c * kernel_ + ky) * kernel_ + kx) * band;
        const auto [lo, hi] = valid_range(out_w_, in_w_, stride_, kx, pad);
        for (std::size_t oy = oy0; oy < oy1; ++oy) {
          T* drow = plane + (oy - oy0) * out_w_;
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride_ + ky) -
                                    static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h_) || lo >= hi) {
            std::fill(drow, drow + out_w_, T(0));
            continue;
          }
          std::fill(drow, drow + lo, T(0));
          std::fill(drow + hi, drow + out_w_, T(0));
          const T* srow = src + static_cast<std::size_t>(iy) * in_w_ + (lo * stride_ + kx - pad);
          if (stride_ == 1) {
            std::copy(srow, srow + (hi - lo), drow + lo);
          } else {
            for (std::size_t ox = lo; ox < hi; ++ox) drow[ox] = srow[(ox - lo) * stride_];
          }
        }
      }
    }
  }
}

template <typename T>
void Conv2d<T>::fold_band(const T* src, std::size_t oy0, std::size_t oy1, Tensor<T>& dx) const {
  const std::size_t pad = kernel_ / 2;
  const std::size_t band = (oy1 - oy0) * out_w_;
  for (std::size_t c = 0; c < in_; ++c) {
    T* dst = dx.channel(c);
    for (std::size_t ky = 0; ky < kernel_; ++ky) {
      for (std::size_t kx = 0; kx < kernel_; ++kx) {
        const T* plane = src + ((c * kernel_ + ky) * kernel_ + kx) * band;
        const auto [lo, hi] = valid_range(out_w_, in_w_, stride_, kx, pad);
        if (lo >= hi) continue;
        for (std::size_t oy = oy0; oy < oy1; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride_ + ky) -
                                    static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h_)) continue;
          const T* srow = plane + (oy - oy0) * out_w_;
          T* base = dst + static_cast<std::size_t>(iy) * in_w_ + (lo * stride_ + kx - pad);
          const std::size_t count = hi - lo;
          if (stride_ == 1) {
            for (std::size_t i = 0; i < count; ++i) base[i] += srow[lo + i];
          } else {
            for (std::size_t i = 0; i < count; ++i) base[i * stride_] += srow[lo + i];
          }
        }
      }
    }
  }
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) {
  if (x.channels != in_) {
    throw DimensionError(weight_.name + ": expected " + std::to_string(in_) +
                         " input channels, got " + std::to_string(x.channels));
  }
  const std::size_t pad = kernel_ / 2;
  in_h_ = x.height;
  in_w_ = x.width;
  out_h_ = (in_h_ + 2 * pad - kernel_) / stride_ + 1;
  out_w_ = (in_w_ + 2 * pad - kernel_) / stride_ + 1;
  input_ = x;
  const auto positions = static_cast<Eigen::Index>(out_h_ * out_w_);
  const auto rows = static_cast<Eigen::Index>(in_ * kernel_ * kernel_);
  const auto outs = static_cast<Eigen::Index>(out_);

  Tensor<T> y(out_, out_h_, out_w_);
  ConstMatrixMap<T> w(weight_.value.data(), outs, rows);
  if (kernel_ == 1 && stride_ == 1) {
    ConstMatrixMap<T> in(input_.data.data(), rows, positions);
    MatrixMap<T>(y.data.data(), outs, positions).noalias() = w * in;
  } else {
    const std::size_t step = band_rows();
    for (std::size_t oy0 = 0; oy0 < out_h_; oy0 += step) {
      const std::size_t oy1 = std::min(out_h_, oy0 + step);
      const auto band = static_cast<Eigen::Index>((oy1 - oy0) * out_w_);
      scratch_.resize(static_cast<std::size_t>(rows * band));
      unfold_band(oy0, oy1, scratch_.data());
      ConstMatrixMap<T> cols(scratch_.data(), rows, band);
      StridedMap<T> out(y.data.data() + oy0 * out_w_, outs, band, Eigen::OuterStride<>(positions));
      out.noalias() = w * cols;
    }
  }
  if (has_bias_) {
    MatrixMap<T> out(y.data.data(), outs, positions);
    for (Eigen::Index o = 0; o < outs; ++o) out.row(o).array() += bias_.value[static_cast<std::size_t>(o)];
  }
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out) {
  if (grad_out.channels != out_ || grad_out.height != out_h_ || grad_out.width != out_w_) {
    throw DimensionError(weight_.name + ": gradient shape does not match the cached forward");
  }
  const auto positions = static_cast<Eigen::Index>(out_h_ * out_w_);
  const auto rows = static_cast<Eigen::Index>(in_ * kernel_ * kernel_);
  const auto outs = static_cast<Eigen::Index>(out_);
  ConstMatrixMap<T> dy(grad_out.data.data(), outs, positions);
  ConstMatrixMap<T> w(weight_.value.data(), outs, rows);
  MatrixMap<T> dw(weight_.grad.data(), outs, rows);
  if (has_bias_) {
    for (std::size_t o = 0; o < out_; ++o) {
      const T* row = grad_out.channel(o);
      bias_.grad[o] += static_cast<T>(lane_sum(grad_out.plane(), [row](std::size_t i) { return static_cast<double>(row[i]); }));
    }
  }

  Tensor<T> dx(in_, in_h_, in_w_);
  if (kernel_ == 1 && stride_ == 1) {
    ConstMatrixMap<T> in(input_.data.data(), rows, positions);
    dw.noalias() += dy * in.transpose();
    MatrixMap<T>(dx.data.data(), rows, positions).noalias() = w.transpose() * dy;
    return dx;
  }

  const std::size_t step = band_rows();
  for (std::size_t oy0 = 0; oy0 < out_h_; oy0 += step) {
    const std::size_t oy1 = std::min(out_h_, oy0 + step);
    const auto band = static_cast<Eigen::Index>((oy1 - oy0) * out_w_);
    scratch_.resize(static_cast<std::size_t>(rows * band));
    unfold_band(oy0, oy1, scratch_.data());
    ConstStridedMap<T> dy_band(grad_out.data.data() + oy0 * out_w_, outs, band,
                               Eigen::OuterStride<>(positions));
    ConstMatrixMap<T> cols(scratch_.data(), rows, band);
    dw.noalias() += dy_band * cols.transpose();
    MatrixMap<T> dcols(scratch_.data(), rows, band);
    dcols.noalias() = w.transpose() * dy_band;
    fold_band(scratch_.data(), oy0, oy1, dx);
  }
  return dx;
}

template <typename T>
void Conv2d<T>::collect(ParamList<T>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

// ---------------------------------------------------------------------------
// BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(std::string name, std::size_t channels)
    : scale_(name + ".scale", channels), shift_(name + ".shift", channels) {
  for (T& s : scale_.value) s = T(1);
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x) {
  const std::size_t n = x.plane();
  normalized_.resize(x.channels, x.height, x.width);
  inv_std_.assign(x.channels, T(0));
  Tensor<T> y(x.channels, x.height, x.width);
  for (std::size_t c = 0; c < x.channels; ++c) {
    const T* src = x.channel(c);
    const double mean = lane_sum(n, [src](std::size_t i) { return static_cast<double>(src[i]); }) /
                        static_cast<double>(n);
    const double sq = lane_sum(n, [src, mean](std::size_t i) {
      const double d = src[i] - mean;
      return d * d;
    });
    const double inv_std = 1.0 / std::sqrt(sq / static_cast<double>(n) + kEpsilon);
    inv_std_[c] = static_cast<T>(inv_std);
    T* xn = normalized_.channel(c);
    T* dst = y.channel(c);
    const T scale = scale_.value[c];
    const T shift = shift_.value[c];
    for (std::size_t i = 0; i < n; ++i) {
      xn[i] = static_cast<T>((src[i] - mean) * inv_std);
      dst[i] = scale * xn[i] + shift;
    }
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& grad_out) {
  const std::size_t n = grad_out.plane();
  Tensor<T> dx(grad_out.channels, grad_out.height, grad_out.width);
  for (std::size_t c = 0; c < grad_out.channels; ++c) {
    const T* dy = grad_out.channel(c);
    const T* xn = normalized_.channel(c);
    const double sum_dy = lane_sum(n, [dy](std::size_t i) { return static_cast<double>(dy[i]); });
    const double sum_dy_xn = lane_sum(
        n, [dy, xn](std::size_t i) { return static_cast<double>(dy[i]) * static_cast<double>(xn[i]); });
    scale_.grad[c] += static_cast<T>(sum_dy_xn);
    shift_.grad[c] += static_cast<T>(sum_dy);

    const double scale = scale_.value[c];
    const double k = scale * inv_std_[c] / static_cast<double>(n);
    const double mean_dy = sum_dy;
    const double mean_dy_xn = sum_dy_xn;
    T* dst = dx.channel(c);
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] = static_cast<T>(k * (static_cast<double>(n) * dy[i] - mean_dy - xn[i] * mean_dy_xn));
    }
  }
  return dx;
}

template <typename T>
void BatchNorm2d<T>::collect(ParamList<T>& out) {
  out.push_back(&scale_);
  out.push_back(&shift_);
}

// ---------------------------------------------------------------------------
// ConvUnit

template <typename T>
ConvUnit<T>::ConvUnit(const std::string& name, std::size_t in_channels, std::size_t out_channels,
                      std::size_t kernel, std::size_t stride, T negative_slope)
    : conv_(name + ".conv", in_channels, out_channels, kernel, stride, false),
      norm_(name + ".bn", out_channels),
      slope_(negative_slope) {}

template <typename T>
Tensor<T> ConvUnit<T>::forward(const Tensor<T>& x) {
  pre_activation_ = norm_.forward(conv_.forward(x));
  Tensor<T> y = pre_activation_;
  for (T& v : y.data) v = v > T(0) ? v : slope_ * v;
  return y;
}

template <typename T>
Tensor<T> ConvUnit<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    if (!(pre_activation_.data[i] > T(0))) g.data[i] *= slope_;
  }
  return conv_.backward(norm_.backward(g));
}

template <typename T>
void ConvUnit<T>::collect(ParamList<T>& out) {
  conv_.collect(out);
  norm_.collect(out);
}

// ---------------------------------------------------------------------------
// MultiResBlock

std::array<std::size_t, 3> multires_split(std::size_t nominal_width) {
  const double w = static_cast<double>(nominal_width);
  const auto first = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(w / 6.0)));
  const auto second =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(w / 3.0)));
  const std::size_t used = first + second;
  const std::size_t third = nominal_width > used ? nominal_width - used : 1;
  return {first, second, third};
}

template <typename T>
MultiResBlock<T>::MultiResBlock(const std::string& name, std::size_t in_channels,
                                std::size_t nominal_width, T negative_slope) {
  const auto split = multires_split(nominal_width);
  width_ = split[0] + split[1] + split[2];
  first_ = ConvUnit<T>(name + ".conv_a", in_channels, split[0], 3, 1, negative_slope);
  second_ = ConvUnit<T>(name + ".conv_b", split[0], split[1], 3, 1, negative_slope);
  third_ = ConvUnit<T>(name + ".conv_c", split[1], split[2], 3, 1, negative_slope);
  shortcut_ = ConvUnit<T>(name + ".shortcut", in_channels, width_, 1, 1, negative_slope);
}

template <typename T>
void MultiResBlock<T>::init(Rng& rng) {
  first_.init(rng);
  second_.init(rng);
  third_.init(rng);
  shortcut_.init(rng);
}

template <typename T>
Tensor<T> MultiResBlock<T>::forward(const Tensor<T>& x) {
  const Tensor<T> a = first_.forward(x);
  const Tensor<T> b = second_.forward(a);
  const Tensor<T> c = third_.forward(b);
  Tensor<T> y = concat_channels(concat_channels(a, b), c);
  add_into(y, shortcut_.forward(x));
  return y;
}

template <typename T>
Tensor<T> MultiResBlock<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> dx = shortcut_.backward(grad_out);
  Tensor<T> dab;
  Tensor<T> dc;
  split_channels(grad_out, first_.out_channels() + second_.out_channels(), dab, dc);
  Tensor<T> da;
  Tensor<T> db;
  split_channels(dab, first_.out_channels(), da, db);
  add_into(db, third_.backward(dc));
  add_into(da, second_.backward(db));
  add_into(dx, first_.backward(da));
  return dx;
}

template <typename T>
void MultiResBlock<T>::collect(ParamList<T>& out) {
  first_.collect(out);
  second_.collect(out);
  third_.collect(out);
  shortcut_.collect(out);
}

// ---------------------------------------------------------------------------
// ResidualPath

template <typename T>
ResidualPath<T>::ResidualPath(const std::string& name, std::size_t channels, std::size_t length,
                              T negative_slope) {
  for (std::size_t i = 0; i < length; ++i) {
    const std::string unit = name + "." + std::to_string(i);
    conv_.emplace_back(unit + ".conv", channels, channels, 3, 1, negative_slope);
    shortcut_.emplace_back(unit + ".shortcut", channels, channels, 1, 1, negative_slope);
  }
}

template <typename T>
void ResidualPath<T>::init(Rng& rng) {
  for (std::size_t i = 0; i < conv_.size(); ++i) {
    conv_[i].init(rng);
    shortcut_[i].init(rng);
  }
}

template <typename T>
Tensor<T> ResidualPath<T>::forward(const Tensor<T>& x) {
  Tensor<T> cur = x;
  for (std::size_t i = 0; i < conv_.size(); ++i) {
    Tensor<T> y = conv_[i].forward(cur);
    add_into(y, shortcut_[i].forward(cur));
    cur = std::move(y);
  }
  return cur;
}

template <typename T>
Tensor<T> ResidualPath<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  for (std::size_t i = conv_.size(); i-- > 0;) {
    Tensor<T> dx = conv_[i].backward(g);
    add_into(dx, shortcut_[i].backward(g));
    g = std::move(dx);
  }
  return g;
}

template <typename T>
void ResidualPath<T>::collect(ParamList<T>& out) {
  for (std::size_t i = 0; i < conv_.size(); ++i) {
    conv_[i].collect(out);
    shortcut_[i].collect(out);
  }
}

#define DIPPAS_INSTANTIATE_LAYERS(T)                                                     \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                \
  template void split_channels(const Tensor<T>&, std::size_t, Tensor<T>&, Tensor<T>&);   \
  template Tensor<T> upsample_nearest2(const Tensor<T>&);                                \
  template Tensor<T> upsample_nearest2_backward(const Tensor<T>&);                       \
  template class Conv2d<T>;                                                              \
  template class BatchNorm2d<T>;                                                         \
  template class ConvUnit<T>;                                                            \
  template class MultiResBlock<T>;                                                       \
  template class ResidualPath<T>;

DIPPAS_INSTANTIATE_LAYERS(float)
DIPPAS_INSTANTIATE_LAYERS(double)

#undef DIPPAS_INSTANTIATE_LAYERS

}  // namespace dippas::nn
