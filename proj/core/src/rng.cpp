#include "mgrn/rng.hpp"

#include <cmath>
#include <numbers>

#include "mgrn/errors.hpp"

namespace mgrn {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
constexpr double kTwoPow53Inv = 0x1.0p-53;
}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(const char* data, std::size_t len) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t RngStream::uniform64() {
  ++position_;
  return mix64(seed_ + position_ * kGamma);
}

double RngStream::uniform01() {
  return static_cast<double>(uniform64() >> 11) * kTwoPow53Inv;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  detail::require(n > 0, "uniform_index: n must be positive");
  return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)) % n;
}

double RngStream::normal() {
  const double u1 = static_cast<double>((uniform64() >> 11) + 1) * kTwoPow53Inv;
  const double u2 = static_cast<double>(uniform64() >> 11) * kTwoPow53Inv;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

RngStream RngStream::derive(std::uint64_t tag) const {
  return RngStream(mix64(seed_ ^ mix64(tag)));
}

Vec normal_draws(RngStream& stream, std::size_t n) {
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = stream.normal();
  return out;
}

}  // namespace mgrn
