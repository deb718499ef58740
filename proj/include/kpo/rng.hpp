#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace kpo {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream key for task `index` under a master seed.
constexpr std::uint64_t derive_stream(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Counter-based standard normal pairs: the value depends only on
/// (stream, site, step), never on the order of evaluation.
class CounterNormal {
public:
  explicit constexpr CounterNormal(std::uint64_t stream) : stream_(stream) {}

  std::pair<double, double> operator()(std::uint64_t site, std::uint64_t step) const {
    const std::uint64_t key = splitmix64(splitmix64(stream_ ^ (site * 0xD1B54A32D192ED03ULL)) + step);
    const std::uint64_t b1 = splitmix64(key ^ 0xA0761D6478BD642FULL);
    const std::uint64_t b2 = splitmix64(key ^ 0xE7037ED1A0B428DBULL);
    // 53-bit uniforms; u1 in (0, 1] keeps the log finite.
    const double u1 = (static_cast<double>(b1 >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(b2 >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

private:
  std::uint64_t stream_;
};

}  // namespace kpo
