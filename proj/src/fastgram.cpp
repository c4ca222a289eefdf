#include "qmcgp/fastgram.hpp"

#include <cmath>
#include <stdexcept>

#include "qmcgp/fastxform.hpp"
#include "qmcgp/linalg.hpp"

namespace qmcgp {

bool matched_pairing(const Provenance& prov, const KernelSpec& spec, TransformKind* kind) {
  if (prov.kind == SeqKind::lattice && prov.order == PointOrder::radical_inverse &&
      spec.is_si()) {
    if (kind) *kind = TransformKind::fftbr_pair;
    return true;
  }
  if (prov.kind == SeqKind::dnet && prov.order == PointOrder::radical_inverse && spec.is_dsi()) {
    NetRand r = NetRand(prov.randomization);
    if (r == NetRand::nus) return false;  // scrambling breaks the RSBT structure
    if (kind) *kind = TransformKind::fwht;
    return true;
  }
  return false;
}

std::vector<cdouble> gram_forward(TransformKind kind, const std::vector<double>& y) {
  std::vector<cdouble> t(y.begin(), y.end());
  if (kind == TransformKind::fwht)
    fwht(t);
  else
    fftbr(t);
  return t;
}

std::vector<double> gram_inverse_real(TransformKind kind, std::vector<cdouble> y) {
  if (kind == TransformKind::fwht)
    fwht(y);
  else
    ifftbr(y);
  std::vector<double> out(y.size());
  for (size_t i = 0; i < y.size(); ++i) out[i] = y[i].real();
  return out;
}

StructuredGram build_spectrum(const PointSet& pts, const KernelSpec& spec, double nugget) {
  spec.validate();
  TransformKind kind;
  if (!matched_pairing(pts.prov, spec, &kind))
    throw std::invalid_argument("build_spectrum: point set and kernel are not a fast pairing");
  if (!is_pow2(pts.n)) throw std::invalid_argument("build_spectrum: n must be a power of two");
  if (nugget < 0.0) throw std::invalid_argument("build_spectrum: nugget must be nonnegative");

  // first Gram column, nugget on the self entry
  std::vector<double> col(pts.n);
  const double* x0 = pts.row(0);
  parallel_chunks(pts.n, 8192, [&](size_t, size_t b, size_t e) {
    for (size_t i = b; i < e; ++i) col[i] = kernel_eval(spec, pts.row(i), x0);
  });
  col[0] += nugget;

  StructuredGram G;
  G.transform = kind;
  G.n = pts.n;
  G.nugget = nugget;
  double s = std::sqrt(double(pts.n));
  if (kind == TransformKind::fwht) {
    fwht(col);  // real arithmetic throughout on the Hadamard path
    G.lam.assign(pts.n, 0.0);
    for (size_t i = 0; i < pts.n; ++i) G.lam[i] = s * col[i];
  } else {
    G.lam = gram_forward(kind, col);
    for (auto& l : G.lam) l *= s;
  }
  return G;
}

std::vector<double> gram_matvec(const StructuredGram& G, const std::vector<double>& y) {
  if (y.size() != G.n) throw std::invalid_argument("gram_matvec: size mismatch");
  if (G.transform == TransformKind::fwht) {
    std::vector<double> t = y;
    fwht(t);
    for (size_t i = 0; i < G.n; ++i) t[i] *= G.lam[i].real();
    fwht(t);
    return t;
  }
  auto t = gram_forward(G.transform, y);
  for (size_t i = 0; i < G.n; ++i) t[i] *= G.lam[i];
  return gram_inverse_real(G.transform, std::move(t));
}

std::vector<double> gram_solve(const StructuredGram& G, const std::vector<double>& y) {
  if (y.size() != G.n) throw std::invalid_argument("gram_solve: size mismatch");
  if (G.transform == TransformKind::fwht) {
    std::vector<double> t = y;
    fwht(t);
    for (size_t i = 0; i < G.n; ++i) {
      if (G.lam[i].real() <= 0.0)
        throw std::runtime_error("gram_solve: nonpositive eigenvalue; Gram not SPD");
      t[i] /= G.lam[i].real();
    }
    fwht(t);
    return t;
  }
  auto t = gram_forward(G.transform, y);
  for (size_t i = 0; i < G.n; ++i) {
    if (G.lam[i].real() <= 0.0)
      throw std::runtime_error("gram_solve: nonpositive eigenvalue; Gram not SPD");
    t[i] /= G.lam[i];
  }
  return gram_inverse_real(G.transform, std::move(t));
}

double gram_logdet(const StructuredGram& G) {
  double s = 0.0;
  for (const auto& l : G.lam) {
    if (l.real() <= 0.0)
      throw std::runtime_error("gram_logdet: nonpositive eigenvalue; Gram not SPD");
    s += std::log(std::abs(l));
  }
  return s;
}

double gram_trace_inv(const StructuredGram& G) {
  double s = 0.0;
  for (const auto& l : G.lam) s += (1.0 / l).real();
  return s;
}

// ---------------------------------------------------------------------------
// Block spectra

std::vector<cdouble> block_apply(const BlockLambda& lam, const std::vector<cdouble>& y) {
  size_t L = lam.levels();
  std::vector<size_t> off(L + 1, 0);
  for (size_t l = 0; l < L; ++l) off[l + 1] = off[l] + lam.n[l];
  if (y.size() != off[L]) throw std::invalid_argument("block_apply: size mismatch");
  std::vector<cdouble> out(off[L], 0.0);
  for (size_t l = 0; l < L; ++l) {
    for (size_t lp = 0; lp < L; ++lp) {
      size_t a = std::min(l, lp), b = std::max(l, lp);
      const auto& blk = lam.block(a, b);  // length n[a] >= n[b]
      size_t nb = lam.n[b];
      // Lambda_{l,lp} stacks (n_l / n_lp ... ) diagonals of size min(n_l, n_lp)
      if (l <= lp) {
        // tall block: n[l] x n[lp], n[l] >= n[lp]; stacked diagonals of size n[lp]
        for (size_t r = 0; r < lam.n[l]; ++r) out[off[l] + r] += blk[r] * y[off[lp] + (r % nb)];
      } else {
        // wide block: conj-transpose of the stored tall block
        for (size_t r = 0; r < lam.n[lp]; ++r)
          out[off[l] + (r % lam.n[l])] += std::conj(blk[r]) * y[off[lp] + r];
      }
    }
  }
  return out;
}

namespace {

// reshape a grid to a finer granularity g_new dividing g_old
DiagGrid grid_reshape(const DiagGrid& A, size_t g_new) {
  if (A.g == g_new) return A;
  size_t k = A.g / g_new;
  DiagGrid R;
  R.B = A.B * k;
  R.g = g_new;
  R.cell.assign(R.B * R.B, {});
  for (size_t i = 0; i < A.B; ++i)
    for (size_t j = 0; j < A.B; ++j) {
      const auto& c = A.at(i, j);
      if (c.empty()) continue;
      for (size_t r = 0; r < k; ++r) {
        auto& dst = R.at(i * k + r, j * k + r);
        dst.assign(c.begin() + r * g_new, c.begin() + (r + 1) * g_new);
      }
    }
  return R;
}

void cell_axpy(std::vector<cdouble>& dst, const std::vector<cdouble>& a,
               const std::vector<cdouble>& b, bool conj_b, size_t g) {
  if (dst.empty()) dst.assign(g, 0.0);
  for (size_t i = 0; i < g; ++i) dst[i] += a[i] * (conj_b ? std::conj(b[i]) : b[i]);
}

}  // namespace

std::pair<DiagGrid, double> block_inverse_det(const BlockLambda& lam) {
  size_t L = lam.levels();
  if (L == 0) throw std::invalid_argument("block_inverse_det: empty input");
  for (size_t l = 0; l + 1 < L; ++l)
    if (lam.n[l] < lam.n[l + 1])
      throw std::invalid_argument("block_inverse_det: level sizes must be non-increasing");

  double logdet = 0.0;
  DiagGrid A;
  A.B = 1;
  A.g = lam.n[0];
  A.cell.resize(1);
  {
    const auto& l11 = lam.block(0, 0);
    auto& c = A.cell[0];
    c.resize(A.g);
    for (size_t i = 0; i < A.g; ++i) {
      if (l11[i].real() <= 0.0)
        throw std::runtime_error("block_inverse_det: nonpositive eigenvalue on level 1");
      c[i] = 1.0 / l11[i];
      logdet += std::log(std::abs(l11[i]));
    }
  }

  for (size_t l = 1; l < L; ++l) {
    size_t g = lam.n[l];
    A = grid_reshape(A, g);
    size_t B = A.B;  // rows of the running inverse, granularity g

    // column of new blocks Lambda_{:l,l} as grid cells of length g
    std::vector<std::vector<cdouble>> Bcol(B);
    {
      size_t row = 0;
      for (size_t lp = 0; lp < l; ++lp) {
        const auto& blk = lam.block(lp, l);  // length n[lp]
        size_t cells = lam.n[lp] / g;
        for (size_t r = 0; r < cells; ++r)
          Bcol[row++].assign(blk.begin() + r * g, blk.begin() + (r + 1) * g);
      }
    }

    // E = A * Bcol
    std::vector<std::vector<cdouble>> E(B);
    for (size_t i = 0; i < B; ++i)
      for (size_t j = 0; j < B; ++j) {
        const auto& c = A.at(i, j);
        if (c.empty() || Bcol[j].empty()) continue;
        cell_axpy(E[i], c, Bcol[j], false, g);
      }

    // F = conj(B)^T E, the diagonal Schur correction
    std::vector<cdouble> F(g, 0.0);
    for (size_t i = 0; i < B; ++i) {
      if (Bcol[i].empty() || E[i].empty()) continue;
      for (size_t r = 0; r < g; ++r) F[r] += std::conj(Bcol[i][r]) * E[i][r];
    }

    const auto& Dll = lam.block(l, l);
    std::vector<cdouble> S(g), G(g);
    for (size_t r = 0; r < g; ++r) {
      S[r] = Dll[r] - F[r];
      if (S[r].real() <= 0.0)
        throw std::runtime_error("block_inverse_det: nonpositive Schur entry");
      logdet += std::log(std::abs(S[r]));
      G[r] = 1.0 / S[r];
    }

    // H = E * G, J = H conj(E)^T, new A = [[A + J, -H], [-conj(H)^T, G]]
    std::vector<std::vector<cdouble>> H(B);
    for (size_t i = 0; i < B; ++i) {
      if (E[i].empty()) continue;
      H[i].resize(g);
      for (size_t r = 0; r < g; ++r) H[i][r] = E[i][r] * G[r];
    }
    DiagGrid next;
    next.B = B + 1;
    next.g = g;
    next.cell.assign(next.B * next.B, {});
    for (size_t i = 0; i < B; ++i)
      for (size_t j = 0; j < B; ++j) {
        auto& dst = next.at(i, j);
        if (!A.at(i, j).empty()) dst = A.at(i, j);
        if (!H[i].empty() && !E[j].empty()) cell_axpy(dst, H[i], E[j], true, g);
      }
    for (size_t i = 0; i < B; ++i) {
      if (H[i].empty()) continue;
      auto& right = next.at(i, B);
      right.resize(g);
      for (size_t r = 0; r < g; ++r) right[r] = -H[i][r];
      auto& bottom = next.at(B, i);
      bottom.resize(g);
      for (size_t r = 0; r < g; ++r) bottom[r] = -std::conj(H[i][r]);
    }
    next.at(B, B) = G;
    A = std::move(next);
  }
  return {std::move(A), logdet};
}

std::vector<cdouble> grid_apply(const DiagGrid& G, const std::vector<size_t>& n,
                                const std::vector<cdouble>& y) {
  size_t N = 0;
  for (size_t nl : n) N += nl;
  if (y.size() != N || N != G.B * G.g) throw std::invalid_argument("grid_apply: size mismatch");
  std::vector<cdouble> out(N, 0.0);
  for (size_t i = 0; i < G.B; ++i)
    for (size_t j = 0; j < G.B; ++j) {
      const auto& c = G.at(i, j);
      if (c.empty()) continue;
      for (size_t r = 0; r < G.g; ++r) out[i * G.g + r] += c[r] * y[j * G.g + r];
    }
  return out;
}

DiagGrid grid_matmul(const DiagGrid& A, const DiagGrid& B) {
  if (A.B != B.B || A.g != B.g) throw std::invalid_argument("grid_matmul: shape mismatch");
  DiagGrid C;
  C.B = A.B;
  C.g = A.g;
  C.cell.assign(C.B * C.B, {});
  for (size_t i = 0; i < A.B; ++i)
    for (size_t k = 0; k < A.B; ++k) {
      const auto& a = A.at(i, k);
      if (a.empty()) continue;
      for (size_t j = 0; j < A.B; ++j) {
        const auto& b = B.at(k, j);
        if (b.empty()) continue;
        cell_axpy(C.at(i, j), a, b, false, C.g);
      }
    }
  return C;
}

// ---------------------------------------------------------------------------
// Discrepancy

double kernel_discrepancy(const PointSet& pts, const std::vector<double>& w,
                          const KernelSpec& spec) {
  if (w.size() != pts.n) throw std::invalid_argument("kernel_discrepancy: weight size mismatch");
  double c0 = kernel_integral_xx(spec);
  double c1 = 0.0;
  for (size_t i = 0; i < pts.n; ++i) c1 += w[i] * kernel_integral_x(spec, pts.row(i));
  double c2 = 0.0;
  if (matched_pairing(pts.prov, spec, nullptr) && is_pow2(pts.n)) {
    StructuredGram G = build_spectrum(pts, spec, 0.0);
    auto Kw = gram_matvec(G, w);
    for (size_t i = 0; i < pts.n; ++i) c2 += w[i] * Kw[i];
  } else {
    for (size_t i = 0; i < pts.n; ++i)
      for (size_t k = 0; k < pts.n; ++k) c2 += w[i] * w[k] * kernel_eval(spec, pts.row(i), pts.row(k));
  }
  return c0 - 2.0 * c1 + c2;
}

std::vector<double> optimal_weights(const PointSet& pts, const KernelSpec& spec) {
  std::vector<double> kvec(pts.n);
  for (size_t i = 0; i < pts.n; ++i) kvec[i] = kernel_integral_x(spec, pts.row(i));
  if (matched_pairing(pts.prov, spec, nullptr) && is_pow2(pts.n)) {
    StructuredGram G = build_spectrum(pts, spec, 0.0);
    return gram_solve(G, kvec);
  }
  Mat K(pts.n, pts.n);
  for (size_t i = 0; i < pts.n; ++i)
    for (size_t k = 0; k < pts.n; ++k) K(i, k) = kernel_eval(spec, pts.row(i), pts.row(k));
  return chol_solve(cholesky(std::move(K)), kvec);
}

}  // namespace qmcgp
