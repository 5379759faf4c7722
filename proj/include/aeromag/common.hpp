#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aeromag {

// Error categories aligned with the CLI exit codes: ConfigError -> 2,
// DataError -> 3, NumericalError -> 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a 64-bit content hash, used for artifact manifests and sub-seed
// derivation. Not cryptographic.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;
std::string hash_hex(std::uint64_t h);

// SplitMix64 finalizer. Fixed algorithm so streams are identical across
// platforms and runs.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stateless counter-based stream: value i of stream `seed` does not depend
// on evaluation order, so parallel fills reproduce the serial stream.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t counter) noexcept {
  return splitmix64(seed ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
}

// Uniform in [0, 1) from the top 53 bits.
constexpr double to_unit_double(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Standard normal deviate i of stream `seed` (Box-Muller on counter pairs).
double counter_gaussian(std::uint64_t seed, std::uint64_t index) noexcept;

// Named sub-seed so pipeline stages draw from independent streams.
std::uint64_t subseed(std::uint64_t seed, std::string_view stage) noexcept;

// Deterministic generator for non-counter uses (initialization, splits).
// mt19937_64 output is fully specified by the standard; only the raw bits
// are consumed, never std distributions.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double next_unit() { return to_unit_double(next_u64()); }
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }
  double next_gaussian();
  // Uniform integer in [0, n) by rejection; exact and platform-stable.
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

// Pairwise (fixed-tree) summation; result independent of the caller's
// parallel schedule as long as the input order is fixed.
double pairwise_sum(std::span<const double> values) noexcept;

double mean(std::span<const double> values);

}  // namespace aeromag
