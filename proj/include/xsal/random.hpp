#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace xsal {

// All sampling draws raw 64-bit words from std::mt19937_64, whose output
// sequence is fixed by the standard, and converts them with the helpers below
// rather than the implementation-defined <random> distributions. Results are
// therefore identical across standard libraries.
using Rng = std::mt19937_64;

// Independent stream for (seed, index): seeded through std::seed_seq.
Rng make_stream(std::uint64_t seed, std::uint64_t index);

// Uniform in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

// Uniform integer in [0, bound) by rejection; bound >= 1.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

// Fisher-Yates permutation of [0, n).
std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n);

}  // namespace xsal
