#pragma once

#include <cstdint>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmcgp {

inline uint64_t splitmix64(uint64_t& s) {
  uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stateless mix of a key tuple, used for counter-based randomization trees.
inline uint64_t hash_mix(uint64_t a, uint64_t b) {
  uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

// xoshiro256** with splitmix64 seeding; deterministic across platforms,
// unlike the std:: distributions.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) {
    uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  uint64_t next_u64() {
    auto rotl = [](uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    uint64_t* s = state_;
    uint64_t result = rotl(s[1] * 5, 7) * 9;
    uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }

  // uniform in [0,1) with 53 random bits
  double next_double() { return double(next_u64() >> 11) * 0x1p-53; }

  // uniform integer in [0, n)
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  uint64_t next_bits(int nbits) {
    return nbits >= 64 ? next_u64() : (next_u64() >> (64 - nbits));
  }

 private:
  uint64_t state_[4];
};

// Derive an independent stream from (seed, tag, index).
inline Rng rng_stream(uint64_t seed, uint64_t tag, uint64_t index = 0) {
  return Rng(hash_mix(hash_mix(seed, tag), index));
}

inline uint32_t bit_reverse32(uint32_t v) {
  v = ((v >> 1) & 0x55555555u) | ((v & 0x55555555u) << 1);
  v = ((v >> 2) & 0x33333333u) | ((v & 0x33333333u) << 2);
  v = ((v >> 4) & 0x0F0F0F0Fu) | ((v & 0x0F0F0F0Fu) << 4);
  v = ((v >> 8) & 0x00FF00FFu) | ((v & 0x00FF00FFu) << 8);
  return (v >> 16) | (v << 16);
}

inline uint64_t bit_reverse64(uint64_t v) {
  return (uint64_t(bit_reverse32(uint32_t(v))) << 32) | bit_reverse32(uint32_t(v >> 32));
}

// Reverse the low `nbits` bits of v.
inline uint64_t bit_reverse(uint64_t v, int nbits) {
  return bit_reverse64(v) >> (64 - nbits);
}

inline bool is_pow2(uint64_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Split [0, n) across a couple of worker threads when the range is large
// enough to pay for them; the partition is deterministic, and callers only
// write disjoint outputs (or reduce per-chunk partials in index order).
void parallel_chunks(size_t n, size_t min_per_thread,
                     const std::function<void(size_t, size_t, size_t)>& fn);

inline int log2_exact(uint64_t n) {
  if (!is_pow2(n)) throw std::invalid_argument("length must be a power of two");
  int m = 0;
  while ((uint64_t(1) << m) < n) ++m;
  return m;
}

}  // namespace qmcgp
