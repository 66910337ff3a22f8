#pragma once

#include <cmath>
#include <cstdint>

#include "qcdiff/linalg.hpp"

namespace qcdiff {

// Counter-style keyed generator: the stream is a pure function of
// (seed, key coords, stream tag), so weights never depend on enumeration
// order or on the region a site was found in.
class KeyedRng {
public:
  KeyedRng(std::uint64_t seed, const Coords& key, std::uint64_t stream) {
    state_ = mix(seed ^ 0x6a09e667f3bcc909ull);
    state_ = mix(state_ ^ mix(stream + 0x9e3779b97f4a7c15ull));
    for (auto c : key) state_ = mix(state_ ^ mix((std::uint64_t)c + 0xbf58476d1ce4e5b9ull));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  double next_uniform() { // [0, 1)
    return (double)(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_gaussian() { // Box-Muller; consumes two uniforms
    double u1 = ((double)(next_u64() >> 11) + 0.5) * 0x1.0p-53; // (0,1)
    double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

private:
  std::uint64_t state_;
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

} // namespace qcdiff
