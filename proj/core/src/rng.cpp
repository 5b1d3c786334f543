#include "dippas/rng.hpp"

#include <vector>

namespace dippas {

Rng make_rng(std::initializer_list<std::uint64_t> key) {
  std::vector<std::uint32_t> words;
  words.reserve(key.size() * 2);
  for (std::uint64_t k : key) {
    words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

void fill_gaussian(std::span<double> out, double mean, double stddev, Rng& rng) {
  if (stddev == 0.0) {
    for (double& v : out) v = mean;
    return;
  }
  std::normal_distribution<double> dist(mean, stddev);
  for (double& v : out) v = dist(rng);
}

void fill_uniform(std::span<double> out, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : out) v = dist(rng);
}

}  // namespace dippas
