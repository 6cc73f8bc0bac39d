#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace opocmdp {

// All randomness flows through explicitly seeded streams. Draws are built
// directly on the raw 64-bit output so that results do not depend on the
// standard library's distribution internals.
using RngStream = std::mt19937_64;

// SplitMix64 step; used to derive independent stream seeds from a root seed.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream_id);

RngStream make_stream(std::uint64_t seed, std::uint64_t stream_id);

// Uniform draw in [0, 1) with 53-bit resolution.
double uniform01(RngStream& stream);

// Index draw from a nonnegative weight vector summing to ~1. Linear CDF scan;
// falls back to the last index when accumulated float error leaves u above
// the total mass.
int sample_categorical(RngStream& stream, std::span<const double> weights);

bool sample_bernoulli(RngStream& stream, double p);

// floor(u * n) for n >= 1.
int sample_index(RngStream& stream, int n);

}  // namespace opocmdp
