#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace ipdnet {

/// Seedable random source used for every stochastic draw in a run.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are not (their algorithms differ
/// between library vendors), so the conversions to doubles, coin flips and
/// bounded integers are done here by hand. That keeps a (config, seed) pair
/// bit-reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Engine state in the standard's textual representation.
  std::string state() const;
  void restore(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for the named sub-stream `stream` of a run seeded with `root`.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

}  // namespace ipdnet
