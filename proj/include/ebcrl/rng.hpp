#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace ebcrl {

/// Counter-based generator: every draw is a pure function of
/// (seed, stream name, integer counters), so results do not depend on
/// evaluation order or thread scheduling.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Child generator for an independent named sub-stream.
  CounterRng split(std::string_view name, std::uint64_t index = 0) const;

  /// 64 random bits at the given counter.
  std::uint64_t bits(std::string_view stream,
                     std::initializer_list<std::uint64_t> counter) const;

  /// Uniform on the open interval (0, 1).
  double uniform(std::string_view stream,
                 std::initializer_list<std::uint64_t> counter) const;

  double uniform(double lo, double hi, std::string_view stream,
                 std::initializer_list<std::uint64_t> counter) const;

  /// Standard normal via Box-Muller on two sub-counters.
  double normal(std::string_view stream,
                std::initializer_list<std::uint64_t> counter) const;

 private:
  std::uint64_t seed_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Child seed for run `index` of a benchmark driven by `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

}  // namespace ebcrl
