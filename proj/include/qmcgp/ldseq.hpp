#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qmcgp/common.hpp"

namespace qmcgp {

enum class SeqKind { iid, lattice, dnet, halton };
enum class PointOrder { radical_inverse, linear, gray_code };
enum class NetRand { none, digital_shift, lms_plus_shift, nus, permute };
enum class HaltonRand { none, digital_shift, lms_permutation, nus };

struct Provenance {
  SeqKind kind = SeqKind::iid;
  PointOrder order = PointOrder::radical_inverse;
  int randomization = 0;  // cast of the per-family enum
  uint64_t seed = 0;
  size_t replications = 1;
};

struct PointSet {
  size_t n = 0, d = 0;
  std::vector<double> a;  // row-major n x d
  Provenance prov;

  PointSet() = default;
  PointSet(size_t n_, size_t d_) : n(n_), d(d_), a(n_ * d_, 0.0) {}
  double& at(size_t i, size_t j) { return a[i * d + j]; }
  double at(size_t i, size_t j) const { return a[i * d + j]; }
  const double* row(size_t i) const { return &a[i * d]; }
};

// ---------------------------------------------------------------------------
// van der Corput / radical inverse

double van_der_corput(uint64_t i, int base);

// ---------------------------------------------------------------------------
// Rank-1 lattices

struct LatticeConfig {
  std::vector<uint64_t> g;  // generating vector, all >= 1
  int base = 2;
  PointOrder order = PointOrder::radical_inverse;
  std::vector<double> shift;  // empty means zero shift; else in [0,1)^d

  size_t dim() const { return g.size(); }
  void validate() const;

  // Default generating vector (first d components), optionally with a
  // uniform random shift drawn from `seed`.
  static LatticeConfig make_default(size_t d);
  static LatticeConfig make_random_shift(size_t d, uint64_t seed);
};

PointSet lattice_points(const LatticeConfig& cfg, uint64_t n);
PointSet lattice_points(const LatticeConfig& cfg, uint64_t i_start, uint64_t i_end);

// ---------------------------------------------------------------------------
// Base-2 digital nets
//
// Generating matrices are stored column-wise as unsigned integers. The
// in-memory alignment puts matrix row r at bit (t_max-1-r), so a digit
// vector z converts to a coordinate as z * 2^-t_max. LDData files instead
// store row r at bit r (LSB = top row); the loaders convert.

struct GeneratingMatrices {
  size_t d = 0;
  int t_max = 0;  // rows (digits of output precision)
  int m_max = 0;  // columns (log2 of the maximal point count)
  std::vector<uint64_t> cols;  // d * m_max, internal alignment

  uint64_t col(size_t j, int k) const { return cols[j * m_max + k]; }
  uint64_t& col(size_t j, int k) { return cols[j * m_max + k]; }
  void validate() const;
};

// A linear matrix scramble: d lower-triangular bit matrices with unit
// diagonal, stored column-wise in the same internal alignment as
// GeneratingMatrices (t_out columns of t_out bits each).
struct LmsMatrices {
  size_t d = 0;
  int t = 0;
  std::vector<uint64_t> cols;  // d * t
  uint64_t col(size_t j, int k) const { return cols[j * t + k]; }
};

LmsMatrices random_lms(size_t d, int t, uint64_t seed);
// C~_j = S_j C_j over GF(2); the output has t_out = S.t rows.
GeneratingMatrices linear_matrix_scramble(const LmsMatrices& S, const GeneratingMatrices& C);
// Interlace alpha*d matrices into d matrices of alpha*t rows, truncated to
// at most t_max_out rows.
GeneratingMatrices interlace(const GeneratingMatrices& in, int alpha, int t_max_out = 53);

// Owen / nested uniform scrambling of one digit vector in base 2. The flip
// applied to digit t is a pure function of (dim, t, preceding input digits),
// generated lazily from `seed`; no permutation table is stored.
uint64_t nus_scramble_digits(uint64_t z, int t_max, size_t dim, uint64_t seed);

struct DigitalNetConfig {
  GeneratingMatrices matrices;    // after any LMS and interlacing
  PointOrder order = PointOrder::radical_inverse;
  NetRand rand = NetRand::none;
  std::vector<uint64_t> shift;    // digital shifts, internal alignment at t_max bits
  uint64_t seed = 0;              // seeds NUS (and records the randomization draw)

  // NUS for interlaced nets scrambles the alpha*d-dimensional net before
  // interlacing, so the pre-interlace matrices are kept alongside.
  GeneratingMatrices raw_matrices;
  int interlace_order = 1;

  size_t dim() const { return matrices.d; }
  void validate() const;

  // Build from explicit matrices plus a randomization recipe.
  static DigitalNetConfig make(GeneratingMatrices base, NetRand rand, uint64_t seed,
                               int alpha = 1, PointOrder order = PointOrder::radical_inverse,
                               int t_max_out = 53);
  // Same, starting from the default Sobol'-style matrices.
  static DigitalNetConfig make_default(size_t d, NetRand rand, uint64_t seed, int alpha = 1,
                                       PointOrder order = PointOrder::radical_inverse);
};

PointSet digital_net_points(const DigitalNetConfig& cfg, uint64_t i_start, uint64_t i_end);
inline PointSet digital_net_points(const DigitalNetConfig& cfg, uint64_t n) {
  return digital_net_points(cfg, 0, n);
}
// Raw digit vectors (internal alignment), before conversion to doubles.
std::vector<uint64_t> digital_net_digits(const DigitalNetConfig& cfg, uint64_t i_start,
                                         uint64_t i_end);

// ---------------------------------------------------------------------------
// Halton sequences

struct HaltonConfig {
  size_t d = 0;
  HaltonRand rand = HaltonRand::none;
  uint64_t seed = 0;

  std::vector<int> bases;   // first d primes
  std::vector<int> t_max;   // digits kept per dimension

  // optional explicit digit shifts (d rows of t_max[j] digits each) taking
  // precedence over seed-drawn ones for the digital_shift randomization
  std::vector<std::vector<int>> shift_digits;

  void validate() const;
  static HaltonConfig make(size_t d, HaltonRand rand = HaltonRand::none, uint64_t seed = 0);
};

PointSet halton_points(const HaltonConfig& cfg, uint64_t n);
PointSet halton_points(const HaltonConfig& cfg, uint64_t i_start, uint64_t i_end);

// ---------------------------------------------------------------------------
// IID baseline

PointSet iid_uniform(uint64_t seed, uint64_t n, size_t d);

// ---------------------------------------------------------------------------
// LDData-style files
//
// lattice file: line "# lattice d=<d>" then d integers, one per line.
// net file:     line "# dnet d=<d> m=<m> t=<t>" then d lines of m column
//               integers, bit k (LSB = 0) holding matrix row k.

std::vector<uint64_t> load_lattice_file(std::istream& in, const std::string& name = "<stream>");
std::vector<uint64_t> load_lattice_file(const std::string& path);
void save_lattice_file(std::ostream& out, const std::vector<uint64_t>& g);

GeneratingMatrices load_dnet_file(std::istream& in, const std::string& name = "<stream>");
GeneratingMatrices load_dnet_file(const std::string& path);
void save_dnet_file(std::ostream& out, const GeneratingMatrices& G);

// Built-in defaults (also shipped under data/ in file form).
const std::vector<uint64_t>& default_lattice_vector();  // d = 32, n up to 2^20
GeneratingMatrices default_sobol_matrices(size_t d);    // d <= 32, 32 x 32

int nth_prime(size_t idx);  // 0 -> 2, 1 -> 3, ...

}  // namespace qmcgp
