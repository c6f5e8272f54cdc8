#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rwtune {

namespace detail {

// SplitMix64 finalizer; used only to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a, stable across platforms (unlike std::hash).
constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Seeded stream of standard normal and open-interval uniform deviates.
///
/// Every chain, update and simulation replication owns its own stream.
/// Streams are derived from a master seed plus a name (or index), so the
/// draws an update sees do not depend on which other updates exist or in
/// what order they run.
class RandomSource {
 public:
  using engine_type = std::mt19937_64;

  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  static RandomSource derived(std::uint64_t master, std::string_view name) {
    return RandomSource(derive_seed(master, name));
  }
  static RandomSource derived(std::uint64_t master, std::uint64_t index) {
    return RandomSource(derive_seed(master, index));
  }

  static std::uint64_t derive_seed(std::uint64_t master, std::string_view name) {
    return detail::mix64(detail::mix64(master) ^ detail::fnv1a(name));
  }
  static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return detail::mix64(detail::mix64(master) + detail::mix64(~index));
  }

  RandomSource substream(std::string_view name) const { return derived(seed_, name); }

  double normal() { return normal_(engine_); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    for (;;) {
      const double u = std::generate_canonical<double, 64>(engine_);
      if (u > 0.0 && u < 1.0) return u;
    }
  }

  std::uint64_t seed() const { return seed_; }
  engine_type& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rwtune
