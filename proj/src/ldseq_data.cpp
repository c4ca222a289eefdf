#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qmcgp/ldseq.hpp"

namespace qmcgp {

namespace {

// Direction-number recipe for one net dimension: primitive polynomial of
// degree s with inner coefficient bits a, and initial odd values m_1..m_s.
struct SobolRow {
  int s;
  uint32_t a;
  uint32_t m[8];
};

// Dimensions 2..20 follow the widely used Joe--Kuo table; dimensions 21..32
// use further primitive degree-7 polynomials with fixed odd initial values.
// A unit test checks primitivity of every polynomial and oddness of every m.
const SobolRow kSobolRows[] = {
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 5, 9, 1, 25, 79}},
    {7, 7, {1, 1, 3, 13, 11, 17, 63}},
    {7, 14, {1, 3, 5, 11, 7, 43, 97}},
    {7, 19, {1, 3, 1, 7, 25, 29, 17}},
    {7, 21, {1, 1, 5, 9, 13, 49, 33}},
    {7, 28, {1, 3, 5, 13, 11, 57, 105}},
    {7, 32, {1, 1, 7, 11, 27, 33, 9}},
    {7, 37, {1, 3, 7, 5, 17, 3, 113}},
    {7, 41, {1, 1, 1, 9, 29, 55, 31}},
    {7, 42, {1, 3, 3, 13, 23, 37, 75}},
    {7, 50, {1, 1, 7, 7, 21, 51, 41}},
    {8, 14, {1, 3, 5, 7, 19, 47, 93, 169}},
};

// multiplicative order check: x generates GF(2^s)* modulo the polynomial
bool polynomial_is_primitive(uint32_t inner, int s) {
  uint32_t mod = (1u << s) | 1u;
  for (int q = 1; q < s; ++q)
    if ((inner >> (s - 1 - q)) & 1) mod |= 1u << (s - q);
  auto mulmod = [&](uint32_t a, uint32_t b) {
    uint32_t r = 0;
    while (b) {
      if (b & 1) r ^= a;
      b >>= 1;
      a <<= 1;
      if (a & (1u << s)) a ^= mod;
    }
    return r;
  };
  auto powx = [&](uint32_t e) {
    uint32_t base = 2, result = 1;
    while (e) {
      if (e & 1) result = mulmod(result, base);
      base = mulmod(base, base);
      e >>= 1;
    }
    return result;
  };
  uint32_t period = (1u << s) - 1;
  if (powx(period) != 1) return false;
  for (uint32_t dvs = 2; dvs < period; ++dvs)
    if (period % dvs == 0 && powx(dvs) == 1) return false;
  return true;
}

// Rows beyond the fixed table come from a deterministic search over higher
// degrees; initial values are seeded odd integers.
std::vector<SobolRow> extended_rows(size_t count) {
  std::vector<SobolRow> rows;
  Rng rng(0x50b01u);
  for (int s = 8; s <= 13 && rows.size() < count; ++s) {
    for (uint32_t inner = 0; inner < (1u << (s - 1)) && rows.size() < count; ++inner) {
      if (s == 8 && inner == 14) continue;  // already in the fixed table
      if (!polynomial_is_primitive(inner, s)) continue;
      SobolRow row;
      row.s = s;
      row.a = inner;
      for (int k = 0; k < 8 && k < s; ++k)
        row.m[k] = uint32_t(2 * rng.next_below(uint64_t(1) << k) + 1);  // odd, below 2^(k+1)
      rows.push_back(row);
    }
  }
  return rows;
}

const std::vector<SobolRow>& extended_rows_cache() {
  static const std::vector<SobolRow> extra = extended_rows(992);
  return extra;
}

}  // namespace

GeneratingMatrices default_sobol_matrices(size_t d) {
  const size_t table_d = 1 + sizeof(kSobolRows) / sizeof(kSobolRows[0]);
  if (d < 1 || d > 1024)
    throw std::invalid_argument("default_sobol_matrices: supports 1 <= d <= 1024");
  const int T = 32, M = 32;
  GeneratingMatrices G;
  G.d = d;
  G.t_max = T;
  G.m_max = M;
  G.cols.resize(d * size_t(M));

  for (size_t j = 0; j < d; ++j) {
    uint32_t V[M];  // classic direction integers, bit 31 holding digit 1
    if (j == 0) {
      for (int k = 0; k < M; ++k) V[k] = 1u << (31 - k);
    } else {
      const SobolRow& row = j < table_d ? kSobolRows[j - 1] : extended_rows_cache()[j - table_d];
      int s = row.s;
      uint32_t m[M + 16];
      for (int k = 0; k < s; ++k) m[k] = row.m[k];
      if (s > 8) {
        // the stored rows carry eight initial values; extend with seeded odds
        Rng fill(hash_mix(0x50b02u, j));
        for (int k = 8; k < s; ++k) m[k] = uint32_t(2 * fill.next_below(1u << k) + 1);
      }
      for (int k = s; k < M; ++k) {
        uint32_t v = m[k - s] ^ (m[k - s] << s);
        for (int q = 1; q < s; ++q)
          if ((row.a >> (s - 1 - q)) & 1) v ^= m[k - q] << q;
        m[k] = v;
      }
      for (int k = 0; k < M; ++k) V[k] = m[k] << (31 - k);
    }
    for (int c = 0; c < M; ++c) G.col(j, c) = uint64_t(V[c]) << 21;  // bit 52 = digit 1
  }
  return G;
}

namespace {

// Korobov-form generating vector g_j = a^(j-1) mod 2^20. The multiplier was
// picked by a worst-case-error search over odd candidates congruent to
// 3 mod 4 (so the leading components reduce to (1, 3) modulo 4).
const uint64_t kLatticeModulus = uint64_t(1) << 20;
const uint64_t kLatticeMultiplier = 261403;

}  // namespace

const std::vector<uint64_t>& default_lattice_vector() {
  static const std::vector<uint64_t> g = [] {
    std::vector<uint64_t> v(32);
    uint64_t p = 1;
    for (auto& gj : v) {
      gj = p;
      p = (p * kLatticeMultiplier) % kLatticeModulus;
    }
    return v;
  }();
  return g;
}

int nth_prime(size_t idx) {
  static const std::vector<int> primes = [] {
    std::vector<int> ps;
    const int limit = 4000;
    std::vector<bool> comp(limit, false);
    for (int p = 2; p < limit; ++p) {
      if (comp[p]) continue;
      ps.push_back(p);
      for (int q = 2 * p; q < limit; q += p) comp[q] = true;
    }
    return ps;
  }();
  if (idx >= primes.size()) throw std::invalid_argument("nth_prime: index too large");
  return primes[idx];
}

}  // namespace qmcgp
