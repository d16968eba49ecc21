#include "nyspec/rng.hpp"

#include <stdexcept>

namespace nyspec {

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0)
    throw std::invalid_argument("Rng::below: zero bound");
  // Rejection sampling on the top of the range to stay unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = engine_();
  while (x >= limit)
    x = engine_();
  return x % bound;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<PointId> sample_without_replacement(std::span<const PointId> population, std::size_t count,
                                                Rng& rng) {
  if (count > population.size())
    throw std::invalid_argument("sample_without_replacement: count exceeds population");
  std::vector<PointId> pool(population.begin(), population.end());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

} // namespace nyspec
