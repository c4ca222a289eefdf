#include "qmcgp/ldseq.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qmcgp {

namespace {

int bit_length(uint64_t v) {
  int n = 0;
  while (v) {
    ++n;
    v >>= 1;
  }
  return n;
}

int count_trailing_zeros(uint64_t v) {
  int n = 0;
  while (!(v & 1)) {
    ++n;
    v >>= 1;
  }
  return n;
}

uint64_t gray_code(uint64_t i) { return i ^ (i >> 1); }

double frac(double x) { return x - std::floor(x); }

}  // namespace

double van_der_corput(uint64_t i, int base) {
  if (base < 2) throw std::invalid_argument("van_der_corput: base must be >= 2");
  if (base == 2) {
    if (i == 0) return 0.0;
    int m = bit_length(i);
    return std::ldexp(double(bit_reverse(i, m)), -m);
  }
  double v = 0.0, scale = 1.0 / base;
  while (i) {
    v += double(i % base) * scale;
    i /= base;
    scale /= base;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Lattices

void LatticeConfig::validate() const {
  if (g.empty()) throw std::invalid_argument("lattice: empty generating vector");
  for (uint64_t gj : g)
    if (gj < 1) throw std::invalid_argument("lattice: generating vector entries must be >= 1");
  if (!shift.empty()) {
    if (shift.size() != g.size()) throw std::invalid_argument("lattice: shift dimension mismatch");
    for (double s : shift)
      if (s < 0.0 || s >= 1.0) throw std::invalid_argument("lattice: shift must lie in [0,1)");
  }
  if (base < 2) throw std::invalid_argument("lattice: base must be a prime >= 2");
}

LatticeConfig LatticeConfig::make_default(size_t d) {
  const auto& g = default_lattice_vector();
  if (d > g.size()) throw std::invalid_argument("lattice: default vector has 32 dimensions");
  LatticeConfig cfg;
  cfg.g.assign(g.begin(), g.begin() + d);
  return cfg;
}

LatticeConfig LatticeConfig::make_random_shift(size_t d, uint64_t seed) {
  LatticeConfig cfg = make_default(d);
  Rng rng = rng_stream(seed, /*tag=*/0x5a5a);
  cfg.shift.resize(d);
  for (auto& s : cfg.shift) s = rng.next_double();
  return cfg;
}

PointSet lattice_points(const LatticeConfig& cfg, uint64_t n) {
  return lattice_points(cfg, 0, n);
}

PointSet lattice_points(const LatticeConfig& cfg, uint64_t i_start, uint64_t i_end) {
  cfg.validate();
  if (i_end < i_start) throw std::invalid_argument("lattice: bad index range");
  size_t d = cfg.dim();
  uint64_t n = i_end - i_start;
  PointSet ps(n, d);
  ps.prov.kind = SeqKind::lattice;
  ps.prov.order = cfg.order;
  ps.prov.randomization = cfg.shift.empty() ? 0 : 1;

  if (cfg.order == PointOrder::gray_code)
    throw std::invalid_argument("lattice: gray_code order is a digital-net ordering");

  if (cfg.order == PointOrder::linear) {
    if (i_start != 0) throw std::invalid_argument("lattice: linear order requires i_start = 0");
    // n must be a power of the base
    uint64_t p = 1;
    while (p < n) p *= cfg.base;
    if (p != n) throw std::invalid_argument("lattice: linear order requires n = b^m");
    for (uint64_t i = 0; i < n; ++i)
      for (size_t j = 0; j < d; ++j) {
        double v = frac(double(i) * double(cfg.g[j] % n) / double(n));
        if (!cfg.shift.empty()) v = frac(v + cfg.shift[j]);
        ps.at(i, j) = v;
      }
    return ps;
  }

  // radical inverse order: x_i = (v(i) g + shift) mod 1, computed in exact
  // integer arithmetic with denominator base^(digits of i)
  for (uint64_t i = i_start; i < i_end; ++i) {
    uint64_t row = i - i_start;
    if (cfg.base == 2) {
      int m = std::max(bit_length(i), 1);
      uint64_t k = bit_reverse(i, m);
      uint64_t mask = (m >= 64) ? ~uint64_t(0) : ((uint64_t(1) << m) - 1);
      for (size_t j = 0; j < d; ++j) {
        uint64_t num = (k * cfg.g[j]) & mask;  // product mod 2^m
        double v = std::ldexp(double(num), -m);
        if (!cfg.shift.empty()) v = frac(v + cfg.shift[j]);
        ps.at(row, j) = v;
      }
    } else {
      // general prime base via 128-bit intermediate
      uint64_t den = 1, rev = 0, ii = i;
      while (ii) {
        rev = rev * cfg.base + (ii % cfg.base);
        den *= cfg.base;
        ii /= cfg.base;
      }
      if (den == 1) den = cfg.base;  // i = 0
      for (size_t j = 0; j < d; ++j) {
        unsigned __int128 num = (unsigned __int128)rev * cfg.g[j] % den;
        double v = double((uint64_t)num) / double(den);
        if (!cfg.shift.empty()) v = frac(v + cfg.shift[j]);
        ps.at(row, j) = v;
      }
    }
  }
  return ps;
}

// ---------------------------------------------------------------------------
// Digital nets

void GeneratingMatrices::validate() const {
  if (d == 0 || m_max <= 0) throw std::invalid_argument("dnet: empty generating matrices");
  if (t_max < 1 || t_max > 53)
    throw std::invalid_argument("dnet: t_max must lie in [1, 53] for double output");
  if (cols.size() != d * size_t(m_max)) throw std::invalid_argument("dnet: bad matrix storage");
}

LmsMatrices random_lms(size_t d, int t, uint64_t seed) {
  if (t < 1 || t > 53) throw std::invalid_argument("random_lms: t out of range");
  LmsMatrices S;
  S.d = d;
  S.t = t;
  S.cols.resize(d * t);
  Rng rng = rng_stream(seed, /*tag=*/0x11a5);
  for (size_t j = 0; j < d; ++j) {
    for (int k = 0; k < t; ++k) {
      // unit diagonal at row k; random entries in rows (k, t)
      uint64_t diag = uint64_t(1) << (52 - k);
      int nbelow = t - 1 - k;
      uint64_t below = nbelow > 0 ? (rng.next_bits(nbelow) << (53 - t)) : 0;
      S.cols[j * t + k] = diag | below;
    }
  }
  return S;
}

GeneratingMatrices linear_matrix_scramble(const LmsMatrices& S, const GeneratingMatrices& C) {
  if (S.d != C.d) throw std::invalid_argument("linear_matrix_scramble: dimension mismatch");
  if (S.t < C.t_max)
    throw std::invalid_argument("linear_matrix_scramble: scramble has fewer rows than matrices");
  GeneratingMatrices out;
  out.d = C.d;
  out.t_max = S.t;
  out.m_max = C.m_max;
  out.cols.resize(C.cols.size());
  for (size_t j = 0; j < C.d; ++j) {
    for (int c = 0; c < C.m_max; ++c) {
      uint64_t v = C.col(j, c), res = 0;
      for (int k = 0; k < C.t_max; ++k)
        if (v & (uint64_t(1) << (52 - k))) res ^= S.col(j, k);
      out.col(j, c) = res;
    }
  }
  return out;
}

GeneratingMatrices interlace(const GeneratingMatrices& in, int alpha, int t_max_out) {
  if (alpha < 1) throw std::invalid_argument("interlace: alpha must be >= 1");
  if (alpha == 1) return in;
  if (in.d % alpha != 0)
    throw std::invalid_argument("interlace: need alpha*d input matrices");
  GeneratingMatrices out;
  out.d = in.d / alpha;
  out.t_max = std::min(alpha * in.t_max, t_max_out);
  out.m_max = in.m_max;
  out.cols.assign(out.d * size_t(in.m_max), 0);
  for (size_t j = 0; j < out.d; ++j) {
    for (int c = 0; c < in.m_max; ++c) {
      uint64_t v = 0;
      for (int t = 0; t < out.t_max; ++t) {
        size_t jhat = alpha * j + size_t(t % alpha);
        int that = t / alpha;
        if (in.col(jhat, c) & (uint64_t(1) << (52 - that))) v |= uint64_t(1) << (52 - t);
      }
      out.col(j, c) = v;
    }
  }
  return out;
}

uint64_t nus_scramble_digits(uint64_t z, int t_max, size_t dim, uint64_t seed) {
  uint64_t out = 0;
  uint64_t key = hash_mix(seed, 0x0e5u ^ uint64_t(dim));
  for (int t = 0; t < t_max; ++t) {
    uint64_t prefix = (t == 0) ? 0 : (z >> (53 - t));  // first t input digits
    uint64_t flip = hash_mix(key, hash_mix(uint64_t(t), prefix)) & 1;
    uint64_t digit = (z >> (52 - t)) & 1;
    out |= (digit ^ flip) << (52 - t);
  }
  return out;
}

void DigitalNetConfig::validate() const {
  matrices.validate();
  if (!shift.empty() && shift.size() != matrices.d)
    throw std::invalid_argument("dnet: shift dimension mismatch");
  if (rand == NetRand::nus && interlace_order > 1) raw_matrices.validate();
}

DigitalNetConfig DigitalNetConfig::make(GeneratingMatrices base, NetRand rand, uint64_t seed,
                                        int alpha, PointOrder order, int t_max_out) {
  base.validate();
  if (alpha < 1 || alpha > 8) throw std::invalid_argument("dnet: interlace order must lie in [1, 8]");
  if (base.d % alpha != 0)
    throw std::invalid_argument("dnet: interlacing needs alpha*d generating matrices");
  DigitalNetConfig cfg;
  cfg.order = order;
  cfg.rand = rand;
  cfg.seed = seed;
  cfg.interlace_order = alpha;
  size_t d = base.d / size_t(alpha);

  switch (rand) {
    case NetRand::none:
      cfg.matrices = interlace(base, alpha, t_max_out);
      break;
    case NetRand::digital_shift:
    case NetRand::permute:
      // base-2 digital permutations are per-digit flips, i.e. a digital shift
      cfg.matrices = interlace(base, alpha, t_max_out);
      break;
    case NetRand::lms_plus_shift: {
      // scramble the pre-interlace matrices, extending precision when alpha = 1
      int t_lms = (alpha == 1) ? t_max_out : base.t_max;
      LmsMatrices S = random_lms(base.d, t_lms, hash_mix(seed, 0x15));
      GeneratingMatrices scrambled = linear_matrix_scramble(S, base);
      cfg.matrices = interlace(scrambled, alpha, t_max_out);
      break;
    }
    case NetRand::nus:
      cfg.raw_matrices = base;
      cfg.matrices = interlace(base, alpha, t_max_out);
      break;
  }

  if (rand == NetRand::digital_shift || rand == NetRand::lms_plus_shift ||
      rand == NetRand::permute) {
    // randomization extends the digit precision to t_max_out
    cfg.matrices.t_max = std::min(t_max_out, 53);
    Rng rng = rng_stream(seed, /*tag=*/0xd5);
    cfg.shift.resize(d);
    for (auto& s : cfg.shift)
      s = rng.next_bits(cfg.matrices.t_max) << (53 - cfg.matrices.t_max);
  } else if (rand == NetRand::nus) {
    cfg.matrices.t_max = std::min(t_max_out, 53);
  }
  return cfg;
}

DigitalNetConfig DigitalNetConfig::make_default(size_t d, NetRand rand, uint64_t seed, int alpha,
                                                PointOrder order) {
  return make(default_sobol_matrices(d * size_t(alpha)), rand, seed, alpha, order);
}

std::vector<uint64_t> digital_net_digits(const DigitalNetConfig& cfg, uint64_t i_start,
                                         uint64_t i_end) {
  cfg.validate();
  if (i_end < i_start) throw std::invalid_argument("dnet: bad index range");
  const GeneratingMatrices& G = cfg.matrices;
  if (i_end > (uint64_t(1) << G.m_max))
    throw std::invalid_argument("dnet: index range exceeds 2^m_max");
  size_t d = G.d;
  uint64_t n = i_end - i_start;
  std::vector<uint64_t> z(n * d, 0);

  bool gray = cfg.order == PointOrder::gray_code;
  bool nus = cfg.rand == NetRand::nus;

  auto raw_digits = [&](uint64_t idx, const GeneratingMatrices& M, size_t j) {
    uint64_t v = 0, ii = idx;
    int k = 0;
    while (ii) {
      if (ii & 1) v ^= M.col(j, k);
      ii >>= 1;
      ++k;
    }
    return v;
  };

  const int alpha = cfg.interlace_order;
  for (uint64_t r = 0; r < n; ++r) {
    uint64_t idx = gray ? gray_code(i_start + r) : (i_start + r);
    if (!nus) {
      for (size_t j = 0; j < d; ++j) {
        uint64_t v = raw_digits(idx, G, j);
        if (!cfg.shift.empty()) v ^= cfg.shift[j];
        z[r * d + j] = v;
      }
    } else if (alpha == 1) {
      for (size_t j = 0; j < d; ++j)
        z[r * d + j] = nus_scramble_digits(raw_digits(idx, G, j), G.t_max, j, cfg.seed);
    } else {
      // higher-order NUS: scramble the alpha*d-dimensional net, then
      // interlace the scrambled digits point by point
      const GeneratingMatrices& R = cfg.raw_matrices;
      for (size_t j = 0; j < d; ++j) {
        uint64_t v = 0;
        uint64_t sub[8];
        for (int q = 0; q < alpha; ++q) {
          size_t jq = size_t(alpha) * j + size_t(q);
          sub[q] = nus_scramble_digits(raw_digits(idx, R, jq), 53, jq, cfg.seed);
        }
        for (int t = 0; t < G.t_max; ++t) {
          uint64_t digit = (sub[t % alpha] >> (52 - t / alpha)) & 1;
          v |= digit << (52 - t);
        }
        z[r * d + j] = v;
      }
    }
  }
  return z;
}

PointSet digital_net_points(const DigitalNetConfig& cfg, uint64_t i_start, uint64_t i_end) {
  auto z = digital_net_digits(cfg, i_start, i_end);
  size_t d = cfg.dim();
  PointSet ps(i_end - i_start, d);
  ps.prov.kind = SeqKind::dnet;
  ps.prov.order = cfg.order;
  ps.prov.randomization = int(cfg.rand);
  ps.prov.seed = cfg.seed;
  for (size_t i = 0; i < ps.n; ++i)
    for (size_t j = 0; j < d; ++j) ps.at(i, j) = std::ldexp(double(z[i * d + j]), -53);
  return ps;
}

// ---------------------------------------------------------------------------
// Halton

void HaltonConfig::validate() const {
  if (d == 0) throw std::invalid_argument("halton: dimension must be >= 1");
  if (bases.size() != d || t_max.size() != d)
    throw std::invalid_argument("halton: config not initialized; use HaltonConfig::make");
  for (size_t j = 1; j < d; ++j)
    if (bases[j] <= bases[j - 1])
      throw std::invalid_argument("halton: bases must be strictly increasing primes");
}

HaltonConfig HaltonConfig::make(size_t d, HaltonRand rand, uint64_t seed) {
  HaltonConfig cfg;
  cfg.d = d;
  cfg.rand = rand;
  cfg.seed = seed;
  cfg.bases.resize(d);
  cfg.t_max.resize(d);
  for (size_t j = 0; j < d; ++j) {
    cfg.bases[j] = nth_prime(j);
    cfg.t_max[j] = int(std::ceil(53.0 * std::log(2.0) / std::log(double(cfg.bases[j]))));
  }
  return cfg;
}

namespace {

// realized per-dimension Halton randomization state, derived lazily from seed
struct HaltonDimState {
  int base = 2;
  int t = 0;
  std::vector<int> shift;                 // digital shift digits
  std::vector<int> lms;                   // t x t lower-triangular, row-major
  std::vector<std::vector<int>> perms;    // per digit position, permutation of {0..b-1}
};

std::vector<int> random_permutation(int b, Rng& rng) {
  std::vector<int> p(b);
  for (int i = 0; i < b; ++i) p[i] = i;
  for (int i = b - 1; i > 0; --i) std::swap(p[i], p[rng.next_below(uint64_t(i) + 1)]);
  return p;
}

HaltonDimState make_halton_dim(const HaltonConfig& cfg, size_t j) {
  HaltonDimState st;
  st.base = cfg.bases[j];
  st.t = cfg.t_max[j];
  Rng rng = rng_stream(cfg.seed, 0x4a17, j);
  switch (cfg.rand) {
    case HaltonRand::none:
      break;
    case HaltonRand::digital_shift:
      if (!cfg.shift_digits.empty()) {
        st.shift = cfg.shift_digits[j];
        st.shift.resize(st.t, 0);
      } else {
        st.shift.resize(st.t);
        for (auto& s : st.shift) s = int(rng.next_below(uint64_t(st.base)));
      }
      break;
    case HaltonRand::lms_permutation: {
      st.lms.assign(size_t(st.t) * st.t, 0);
      for (int r = 0; r < st.t; ++r) {
        st.lms[size_t(r) * st.t + r] = 1 + int(rng.next_below(uint64_t(st.base) - 1));
        for (int c = 0; c < r; ++c)
          st.lms[size_t(r) * st.t + c] = int(rng.next_below(uint64_t(st.base)));
      }
      st.perms.resize(st.t);
      for (auto& p : st.perms) p = random_permutation(st.base, rng);
      break;
    }
    case HaltonRand::nus:
      break;  // permutations derived per node below
  }
  return st;
}

}  // namespace

PointSet halton_points(const HaltonConfig& cfg, uint64_t n) { return halton_points(cfg, 0, n); }

PointSet halton_points(const HaltonConfig& cfg, uint64_t i_start, uint64_t i_end) {
  cfg.validate();
  size_t d = cfg.d;
  uint64_t n = i_end - i_start;
  PointSet ps(n, d);
  ps.prov.kind = SeqKind::halton;
  ps.prov.randomization = int(cfg.rand);
  ps.prov.seed = cfg.seed;

  std::vector<HaltonDimState> states;
  states.reserve(d);
  for (size_t j = 0; j < d; ++j) states.push_back(make_halton_dim(cfg, j));

  std::vector<int> digits, out;
  for (uint64_t i = i_start; i < i_end; ++i) {
    for (size_t j = 0; j < d; ++j) {
      const auto& st = states[j];
      int b = st.base, t = st.t;
      digits.assign(t, 0);
      uint64_t ii = i;
      for (int k = 0; k < t && ii; ++k) {
        digits[k] = int(ii % b);
        ii /= b;
      }
      out = digits;
      switch (cfg.rand) {
        case HaltonRand::none:
          break;
        case HaltonRand::digital_shift:
          for (int k = 0; k < t; ++k) out[k] = (digits[k] + st.shift[k]) % b;
          break;
        case HaltonRand::lms_permutation:
          for (int r = 0; r < t; ++r) {
            int acc = 0;
            for (int c = 0; c <= r; ++c) acc += st.lms[size_t(r) * t + c] * digits[c];
            out[r] = st.perms[r][acc % b];
          }
          break;
        case HaltonRand::nus: {
          uint64_t prefix_hash = hash_mix(cfg.seed, 0x9a1d ^ uint64_t(j));
          for (int k = 0; k < t; ++k) {
            Rng node(hash_mix(prefix_hash, uint64_t(k)));
            out[k] = random_permutation(b, node)[digits[k]];
            prefix_hash = hash_mix(prefix_hash, uint64_t(digits[k]) + 1);
          }
          break;
        }
      }
      double v = 0.0;
      for (int k = t - 1; k >= 0; --k) v = (v + out[k]) / b;
      ps.at(i - i_start, j) = v;
    }
  }
  return ps;
}

// ---------------------------------------------------------------------------
// IID

PointSet iid_uniform(uint64_t seed, uint64_t n, size_t d) {
  PointSet ps(n, d);
  ps.prov.kind = SeqKind::iid;
  ps.prov.seed = seed;
  Rng rng = rng_stream(seed, 0x11d);
  for (auto& v : ps.a) v = rng.next_double();
  return ps;
}

// ---------------------------------------------------------------------------
// LDData files

namespace {

[[noreturn]] void file_error(const std::string& name, int line, const std::string& msg) {
  throw std::runtime_error(name + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

std::vector<uint64_t> load_lattice_file(std::istream& in, const std::string& name) {
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) file_error(name, 1, "empty file");
  ++lineno;
  size_t d = 0;
  if (std::sscanf(line.c_str(), "# lattice d=%zu", &d) != 1)
    file_error(name, lineno, "expected header '# lattice d=<d>'");
  std::vector<uint64_t> g;
  g.reserve(d);
  while (g.size() < d) {
    if (!std::getline(in, line)) file_error(name, lineno + 1, "unexpected end of file");
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    uint64_t v;
    if (!(ss >> v)) file_error(name, lineno, "expected an integer");
    if (v < 1) file_error(name, lineno, "generating vector entries must be >= 1");
    g.push_back(v);
  }
  return g;
}

std::vector<uint64_t> load_lattice_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  return load_lattice_file(in, path);
}

void save_lattice_file(std::ostream& out, const std::vector<uint64_t>& g) {
  out << "# lattice d=" << g.size() << "\n";
  for (uint64_t v : g) out << v << "\n";
}

GeneratingMatrices load_dnet_file(std::istream& in, const std::string& name) {
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) file_error(name, 1, "empty file");
  ++lineno;
  size_t d = 0;
  int m = 0, t = 0;
  if (std::sscanf(line.c_str(), "# dnet d=%zu m=%d t=%d", &d, &m, &t) != 3)
    file_error(name, lineno, "expected header '# dnet d=<d> m=<m> t=<t>'");
  if (t < 1 || t > 53) file_error(name, lineno, "t must lie in [1, 53]");
  GeneratingMatrices G;
  G.d = d;
  G.m_max = m;
  G.t_max = t;
  G.cols.resize(d * size_t(m));
  for (size_t j = 0; j < d; ++j) {
    if (!std::getline(in, line)) file_error(name, lineno + 1, "unexpected end of file");
    ++lineno;
    std::istringstream ss(line);
    for (int c = 0; c < m; ++c) {
      uint64_t v;
      if (!(ss >> v)) file_error(name, lineno, "expected " + std::to_string(m) + " integers");
      if (t < 64 && v >> t) file_error(name, lineno, "column value exceeds t bits");
      // file: bit k = row k; internal: bit (52-k) = row k
      G.col(j, c) = bit_reverse(v, t) << (53 - t);
    }
  }
  return G;
}

GeneratingMatrices load_dnet_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  return load_dnet_file(in, path);
}

void save_dnet_file(std::ostream& out, const GeneratingMatrices& G) {
  out << "# dnet d=" << G.d << " m=" << G.m_max << " t=" << G.t_max << "\n";
  for (size_t j = 0; j < G.d; ++j) {
    for (int c = 0; c < G.m_max; ++c) {
      uint64_t v = bit_reverse(G.col(j, c) >> (53 - G.t_max), G.t_max);
      out << v << (c + 1 == G.m_max ? "\n" : " ");
    }
  }
}

}  // namespace qmcgp
