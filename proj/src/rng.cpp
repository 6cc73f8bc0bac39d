#include "rng.hpp"

#include <stdexcept>

namespace opocmdp {

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream_id) {
  // SplitMix64 (Steele, Lea, Flood 2014). Two rounds: one to mix the stream
  // id into the seed, one to whiten the result.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) + stream_id);
}

RngStream make_stream(std::uint64_t seed, std::uint64_t stream_id) {
  return RngStream(split_seed(seed, stream_id));
}

double uniform01(RngStream& stream) {
  return static_cast<double>(stream() >> 11) * 0x1.0p-53;
}

int sample_categorical(RngStream& stream, std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("sample_categorical: empty weight vector");
  const double u = uniform01(stream);
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

bool sample_bernoulli(RngStream& stream, double p) {
  return uniform01(stream) < p;
}

int sample_index(RngStream& stream, int n) {
  if (n < 1) throw std::invalid_argument("sample_index: n must be positive");
  int i = static_cast<int>(uniform01(stream) * n);
  return i < n ? i : n - 1;
}

}  // namespace opocmdp
