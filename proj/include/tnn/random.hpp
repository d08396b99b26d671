#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace tnn::rng {

/// Philox4x32-10 counter-based generator.
///
/// Every draw is a pure function of (seed, stream, index, sub): the 128-bit
/// counter is (index low word, index high word, sub, stream) and the 64-bit
/// seed is the key. Draws can therefore be addressed in any order, which
/// keeps parallel path generation identical to sequential generation.
using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

Counter philox4x32(Counter counter, Key key) noexcept;

/// Disjoint draw families sharing one seed.
enum class Stream : std::uint32_t {
  Generic = 0,
  Heston = 1,
  Basket = 2,
  Weights = 3,
  Shuffle = 4,
};

/// Two uniforms on the open interval (0, 1), 53-bit resolution each.
std::array<double, 2> uniform_pair(std::uint64_t seed, Stream stream, std::uint64_t index,
                                   std::uint32_t sub) noexcept;

/// Two independent standard normals via Box-Muller on uniform_pair.
std::array<double, 2> normal_pair(std::uint64_t seed, Stream stream, std::uint64_t index,
                                  std::uint32_t sub) noexcept;

/// First `count` draws of the generic normal stream: element k is component
/// k % 2 of normal_pair(seed, Generic, k / 2, 0).
std::vector<double> gaussian_stream(std::uint64_t seed, std::size_t count);

/// Sequential view over one stream, for consumers that just need "the next" draw.
class UniformSequence {
 public:
  UniformSequence(std::uint64_t seed, Stream stream, std::uint32_t sub = 0)
      : seed_(seed), stream_(stream), sub_(sub) {}

  double next() noexcept;
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  Stream stream_;
  std::uint32_t sub_;
  std::uint64_t index_ = 0;
  std::array<double, 2> buffer_{};
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; derives child seeds (per run, per iteration) from a parent seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept;

}  // namespace tnn::rng
