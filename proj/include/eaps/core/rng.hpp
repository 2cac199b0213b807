#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace eaps {

/// 64-bit FNV-1a; used to turn stream names into seeds.
std::uint64_t fnv1a64(std::string_view text);
/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// xoshiro256** generator. Every derived quantity (uniform reals, integers,
/// exponentials) is computed with explicit arithmetic so streams are
/// bit-identical across standard libraries and hosts.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();
  /// Uniform on [lo, hi). Throws std::invalid_argument unless lo < hi.
  double uniform(double lo, double hi);
  /// Uniform integer on the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double exponential(double mean);
  bool bernoulli(double p);
  double normal(double mean, double stddev);

 private:
  std::array<std::uint64_t, 4> s_{};
};

/// Root of all randomness in a run. One seed fans out to named, independent
/// streams ("traffic", "channel", ...), and `derive` produces keyed
/// sub-streams so that a draw tied to (stream, key) never depends on how
/// many draws other components made before it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Persistent stream; repeated calls with the same name continue it.
  RandomStream& stream(std::string_view name);

  /// Fresh stream determined only by (seed, name, key).
  RandomStream derive(std::string_view name, std::uint64_t key) const;

  /// Draw from the named persistent stream; lo must be < hi.
  double uniform(std::string_view name, double lo, double hi) { return stream(name).uniform(lo, hi); }

 private:
  std::uint64_t seed_;
  std::map<std::string, RandomStream, std::less<>> streams_;
};

}  // namespace eaps
