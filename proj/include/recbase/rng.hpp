#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace recbase {

// Portable seeded random stream.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard <random> distributions are implementation-defined,
// so all derived quantities (bounded integers, reals, normals, shuffles) are
// computed here from raw 64-bit draws. Identical seeds therefore produce
// identical streams with every conforming toolchain.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of randomness.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n); n must be positive. Unbiased (rejection).
  std::uint64_t below(std::uint64_t n);
  // Uniform integer in [lo, hi] inclusive.
  std::int64_t integer(std::int64_t lo, std::int64_t hi);
  // Standard normal via the Box-Muller transform.
  double normal();

  // Independent substream keyed by `stream`, derived by hashing
  // (seed, stream). Does not consume draws from this generator, so per-user
  // substreams are independent of processing order.
  SeededRng derive(std::uint64_t stream) const;

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

  // k distinct positions out of [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// SplitMix64 finalizer; used for substream derivation and config digests.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace recbase
