#pragma once

#include <cmath>
#include <cstdint>

namespace qdc {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Well-known stream tags so that unrelated parts of a simulation never
// consume from the same substream.
enum class StreamId : std::uint64_t {
  kSource = 0x51,
  kDetector0 = 0x52,
  kDetector1 = 0x53,
  kDark0 = 0x54,
  kDark1 = 0x55,
  kBeamsplitter = 0x56,
  kPhase = 0x57,
  kProjection = 0x58,
};

// Counter-seeded xoshiro256** generator. A substream is fully determined
// by (master_seed, stream, index), so per-pulse substreams give results
// that are independent of how pulses are partitioned across workers.
class Substream {
 public:
  Substream(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t sm = master_seed ^ (stream * 0x94d049bb133111ebULL) ^
                       (index * 0xbf58476d1ce4e5b9ULL);
    for (auto& word : s_) word = splitmix64(sm);
  }
  Substream(std::uint64_t master_seed, StreamId stream, std::uint64_t index)
      : Substream(master_seed, static_cast<std::uint64_t>(stream), index) {}

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return uniform() < p; }

  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  // Marsaglia polar method; the cached spare keeps draws deterministic
  // for a given call sequence.
  double normal(double mean, double sigma) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + sigma * spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return mean + sigma * u * m;
  }

  // Categorical draw over `n` weights (need not be normalized).
  int categorical(const double* weights, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += weights[i];
    double u = uniform() * total;
    for (int i = 0; i < n; ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return n - 1;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qdc
