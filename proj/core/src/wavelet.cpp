#include "dippas/wavelet.hpp"

#include <array>
#include <string>

#include "dippas/errors.hpp"

namespace dippas::wavelet {
namespace {

constexpr std::array<double, kTaps> kLowpass = {
    0.2303778133088965008632911830440708500016,
    0.7148465705529156470899219552739926037076,
    0.6308807679298589078817163383006152202032,
    -0.0279837694168598542114137471800753854120,
    -0.1870348117190930840795706727890814195845,
    0.0308413818355607636272193625349590501703,
    0.0328830116668851997354075135492443886645,
    -0.0105974017850690321048832085240272291811,
};

constexpr std::array<double, kTaps> make_highpass() {
  std::array<double, kTaps> g{};
  for (std::size_t n = 0; n < kTaps; ++n) {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    g[n] = sign * kLowpass[kTaps - 1 - n];
  }
  return g;
}

constexpr std::array<double, kTaps> kHighpass = make_highpass();

void check_divisible(const Plane& plane, int levels) {
  if (levels < 0) throw DimensionError("negative wavelet level count");
  const std::size_t step = std::size_t{1} << levels;
  if (plane.height == 0 || plane.width == 0 || plane.height % step != 0 ||
      plane.width % step != 0) {
    throw DimensionError("wavelet plane " + std::to_string(plane.height) + "x" +
                         std::to_string(plane.width) + " is not divisible by " +
                         std::to_string(step));
  }
  if (plane.values.size() != plane.height * plane.width) {
    throw DimensionError("wavelet plane buffer size mismatch");
  }
}

}  // namespace

std::span<const double> lowpass() { return kLowpass; }
std::span<const double> highpass() { return kHighpass; }

void analyze(std::span<const double> signal, std::span<double> approx, std::span<double> detail) {
  const std::size_t n = signal.size();
  const std::size_t half = n / 2;
  for (std::size_t k = 0; k < half; ++k) {
    double a = 0.0;
    double d = 0.0;
    for (std::size_t t = 0; t < kTaps; ++t) {
      const double x = signal[(2 * k + t) % n];
      a += kLowpass[t] * x;
      d += kHighpass[t] * x;
    }
    approx[k] = a;
    detail[k] = d;
  }
}

void synthesize(std::span<const double> approx, std::span<const double> detail,
                std::span<double> signal) {
  const std::size_t n = signal.size();
  const std::size_t half = n / 2;
  for (double& v : signal) v = 0.0;
  for (std::size_t k = 0; k < half; ++k) {
    for (std::size_t t = 0; t < kTaps; ++t) {
      signal[(2 * k + t) % n] += kLowpass[t] * approx[k] + kHighpass[t] * detail[k];
    }
  }
}

void forward(Plane& plane, int levels) {
  check_divisible(plane, levels);
  std::vector<double> line;
  std::vector<double> out;
  for (int level = 0; level < levels; ++level) {
    const std::size_t h = plane.height >> level;
    const std::size_t w = plane.width >> level;

    line.resize(w);
    out.resize(w);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) line[x] = plane.at(y, x);
      analyze(line, std::span(out).first(w / 2), std::span(out).subspan(w / 2, w / 2));
      for (std::size_t x = 0; x < w; ++x) plane.at(y, x) = out[x];
    }

    line.resize(h);
    out.resize(h);
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t y = 0; y < h; ++y) line[y] = plane.at(y, x);
      analyze(line, std::span(out).first(h / 2), std::span(out).subspan(h / 2, h / 2));
      for (std::size_t y = 0; y < h; ++y) plane.at(y, x) = out[y];
    }
  }
}

void inverse(Plane& plane, int levels) {
  check_divisible(plane, levels);
  std::vector<double> line;
  std::vector<double> out;
  for (int level = levels - 1; level >= 0; --level) {
    const std::size_t h = plane.height >> level;
    const std::size_t w = plane.width >> level;

    line.resize(h);
    out.resize(h);
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t y = 0; y < h; ++y) line[y] = plane.at(y, x);
      synthesize(std::span(line).first(h / 2), std::span(line).subspan(h / 2, h / 2), out);
      for (std::size_t y = 0; y < h; ++y) plane.at(y, x) = out[y];
    }

    line.resize(w);
    out.resize(w);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) line[x] = plane.at(y, x);
      synthesize(std::span(line).first(w / 2), std::span(line).subspan(w / 2, w / 2), out);
      for (std::size_t x = 0; x < w; ++x) plane.at(y, x) = out[x];
    }
  }
}

namespace {

// Index into [0, n) under half-sample symmetric reflection.
std::size_t reflect(std::size_t i, std::size_t n) {
  const std::size_t period = 2 * n;
  i %= period;
  return i < n ? i : period - 1 - i;
}

}  // namespace

Plane mirror_pad(const Plane& plane, std::size_t height, std::size_t width) {
  Plane out(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t sy = reflect(y, plane.height);
    for (std::size_t x = 0; x < width; ++x) {
      out.at(y, x) = plane.at(sy, reflect(x, plane.width));
    }
  }
  return out;
}

}  // namespace dippas::wavelet
