#pragma once

#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace ouheat {

/// xoshiro256** generator. Streams are derived from (seed, stream id) by
/// SplitMix64 hashing, so any stream can be created independently of the
/// others and in any order.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed = 0x9E3779B97F4A7C15ULL);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Independent stream `stream_id` of the generator family keyed by `seed`.
Xoshiro256 make_stream(std::uint64_t seed, std::uint64_t stream_id);

/// Stream ids are partitioned by purpose so that e.g. bridge paths and
/// simulated seasons never share noise under the same user seed.
enum class StreamDomain : std::uint64_t {
  Path = 1,
  Bridge = 2,
  Season = 3,
  SeverityBlock = 4,
  Prediction = 5,
  Replication = 6,
  Trajectory = 7,
  Mixing = 8,
};

constexpr std::uint64_t stream_id(StreamDomain domain, std::uint64_t index) {
  return (static_cast<std::uint64_t>(domain) << 56) ^ index;
}

/// Standard normal draws on top of a stream (ziggurat sampler from Boost).
class NormalSource {
 public:
  explicit NormalSource(Xoshiro256 engine) : engine_(engine) {}
  double operator()() { return dist_(engine_); }
  Xoshiro256& engine() { return engine_; }

 private:
  Xoshiro256 engine_;
  boost::random::normal_distribution<double> dist_;
};

}  // namespace ouheat
