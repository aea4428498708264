#include "ouheat/random.hpp"

namespace ouheat {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Xoshiro256::Xoshiro256(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& word : state_) word = splitmix64(sm);
}

Xoshiro256 make_stream(std::uint64_t seed, std::uint64_t stream_id) {
  std::uint64_t sm = seed;
  const std::uint64_t a = splitmix64(sm);
  std::uint64_t mix = a ^ (stream_id * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL);
  return Xoshiro256(splitmix64(mix));
}

}  // namespace ouheat
