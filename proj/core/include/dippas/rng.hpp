#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace dippas {

using Rng = std::mt19937_64;

// Independent, reproducible stream for a (seed, stream ids...) tuple.
Rng make_rng(std::initializer_list<std::uint64_t> key);

void fill_gaussian(std::span<double> out, double mean, double stddev, Rng& rng);
void fill_uniform(std::span<double> out, double lo, double hi, Rng& rng);

}  // namespace dippas
