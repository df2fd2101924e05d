#include "ebcrl/rng.hpp"

#include <cmath>
#include <numbers>

namespace ebcrl {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

// FNV-1a over the stream name, then mixed.
std::uint64_t hash_name(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

std::uint64_t absorb(std::uint64_t state, std::uint64_t word) noexcept {
  return mix64(state ^ mix64(word + 0x632be59bd9b4e019ULL));
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return absorb(absorb(mix64(master), hash_name("run")), index);
}

CounterRng CounterRng::split(std::string_view name, std::uint64_t index) const {
  return CounterRng(absorb(absorb(mix64(seed_), hash_name(name)), index));
}

std::uint64_t CounterRng::bits(std::string_view stream,
                               std::initializer_list<std::uint64_t> counter) const {
  std::uint64_t h = absorb(mix64(seed_), hash_name(stream));
  for (std::uint64_t c : counter) h = absorb(h, c);
  // Length tag keeps (1,2) and (1,2,0) apart.
  return absorb(h, counter.size());
}

double CounterRng::uniform(std::string_view stream,
                           std::initializer_list<std::uint64_t> counter) const {
  const std::uint64_t b = bits(stream, counter) >> 11;
  return (static_cast<double>(b) + 0.5) * 0x1.0p-53;
}

double CounterRng::uniform(double lo, double hi, std::string_view stream,
                           std::initializer_list<std::uint64_t> counter) const {
  return lo + (hi - lo) * uniform(stream, counter);
}

double CounterRng::normal(std::string_view stream,
                          std::initializer_list<std::uint64_t> counter) const {
  std::uint64_t h = absorb(mix64(seed_), hash_name(stream));
  for (std::uint64_t c : counter) h = absorb(h, c);
  h = absorb(h, counter.size());
  const double u1 = (static_cast<double>(mix64(h ^ 0x1ULL) >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = (static_cast<double>(mix64(h ^ 0x2ULL) >> 11) + 0.5) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace ebcrl
