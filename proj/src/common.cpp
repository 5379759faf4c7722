#include "aeromag/common.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace aeromag {

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  return fnv1a64(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

double counter_gaussian(std::uint64_t seed, std::uint64_t index) noexcept {
  // Two independent uniforms per deviate; u1 nudged away from zero so the
  // log stays finite.
  const double u1 = to_unit_double(counter_hash(seed, 2 * index));
  const double u2 = to_unit_double(counter_hash(seed, 2 * index + 1));
  const double r = std::sqrt(-2.0 * std::log(u1 + 0x1.0p-54));
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t subseed(std::uint64_t seed, std::string_view stage) noexcept {
  return splitmix64(seed ^ fnv1a64(stage));
}

double SeededRng::next_gaussian() {
  const double u1 = next_unit();
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1 + 0x1.0p-54));
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SeededRng::next_below(std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

double pairwise_sum(std::span<const double> values) noexcept {
  const std::size_t n = values.size();
  if (n <= 32) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double mean(std::span<const double> values) {
  if (values.empty()) throw DataError("mean of empty sequence");
  return pairwise_sum(values) / static_cast<double>(values.size());
}

}  // namespace aeromag
