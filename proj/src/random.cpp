#include "tnn/random.hpp"

#include <cmath>
#include <numbers>

namespace tnn::rng {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform on (0, 1) from two words: 27 high bits of a, 26 of b.
inline double to_open_unit(std::uint32_t a, std::uint32_t b) noexcept {
  const std::uint64_t bits = (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

Counter make_counter(Stream stream, std::uint64_t index, std::uint32_t sub) noexcept {
  return {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), sub,
          static_cast<std::uint32_t>(stream)};
}

Key make_key(std::uint64_t seed) noexcept {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

}  // namespace

Counter philox4x32(Counter c, Key k) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

std::array<double, 2> uniform_pair(std::uint64_t seed, Stream stream, std::uint64_t index,
                                   std::uint32_t sub) noexcept {
  const Counter out = philox4x32(make_counter(stream, index, sub), make_key(seed));
  return {to_open_unit(out[0], out[1]), to_open_unit(out[2], out[3])};
}

std::array<double, 2> normal_pair(std::uint64_t seed, Stream stream, std::uint64_t index,
                                  std::uint32_t sub) noexcept {
  const auto [u1, u2] = uniform_pair(seed, stream, index, sub);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

std::vector<double> gaussian_stream(std::uint64_t seed, std::size_t count) {
  std::vector<double> out;
  out.reserve(count + 1);
  for (std::uint64_t k = 0; out.size() < count; ++k) {
    const auto z = normal_pair(seed, Stream::Generic, k, 0);
    out.push_back(z[0]);
    if (out.size() < count) out.push_back(z[1]);
  }
  return out;
}

double UniformSequence::next() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return buffer_[1];
  }
  buffer_ = uniform_pair(seed_, stream_, index_++, sub_);
  has_spare_ = true;
  return buffer_[0];
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace tnn::rng
