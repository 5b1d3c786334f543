#pragma once

#include <cstddef>
#include <vector>

namespace dippas::nn {

// Single-sample feature map in planar channel-height-width order.
template <typename T>
struct Tensor {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(std::size_t c, std::size_t h, std::size_t w)
      : channels(c), height(h), width(w), data(c * h * w, T(0)) {}

  void resize(std::size_t c, std::size_t h, std::size_t w) {
    channels = c;
    height = h;
    width = w;
    data.assign(c * h * w, T(0));
  }

  std::size_t plane() const noexcept { return height * width; }
  std::size_t size() const noexcept { return data.size(); }
  T* channel(std::size_t c) noexcept { return data.data() + c * plane(); }
  const T* channel(std::size_t c) const noexcept { return data.data() + c * plane(); }
  T& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
  T at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }
};

// Channel-wise concatenation; both operands share spatial extent.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

// Splits a gradient of concat_channels(a, b) back into the two parts.
template <typename T>
void split_channels(const Tensor<T>& joined, std::size_t first_channels, Tensor<T>& a,
                    Tensor<T>& b);

// Nearest-neighbour x2 upsampling and its adjoint (2x2 sum pooling).
template <typename T>
Tensor<T> upsample_nearest2(const Tensor<T>& x);
template <typename T>
Tensor<T> upsample_nearest2_backward(const Tensor<T>& grad);

}  // namespace dippas::nn
