#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "nyspec/kernel.hpp"

namespace nyspec {

/// Seeded random stream used by every sampler. Bounded draws are done here
/// rather than through <random> distributions so that sequences are identical
/// across standard library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  /// Uniform double in [0, 1).
  double uniform();

private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_string(std::string_view text);

/// Stable mix of a base seed with further keys.
template <class... Keys>
std::uint64_t derive_seed(std::uint64_t base, Keys... keys) {
  std::uint64_t h = splitmix64(base);
  ((h = splitmix64(h ^ static_cast<std::uint64_t>(keys))), ...);
  return h;
}

/// `count` distinct elements of `population`, uniformly, in draw order
/// (partial Fisher-Yates on a copy).
std::vector<PointId> sample_without_replacement(std::span<const PointId> population, std::size_t count,
                                                Rng& rng);

} // namespace nyspec
