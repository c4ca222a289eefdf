#pragma once

#include <complex>
#include <vector>

#include "qmcgp/kernels.hpp"
#include "qmcgp/ldseq.hpp"

namespace qmcgp {

using cdouble = std::complex<double>;

enum class TransformKind { fftbr_pair, fwht };

// Decide whether a point set and kernel admit the structured fast path.
// Lattices in radical inverse order pair with SI kernels (circulant Gram,
// FFTBR); base-2 digitally shifted / LMS nets in radical inverse order pair
// with DSI kernels (recursive symmetric block Toeplitz Gram, FWHT).
bool matched_pairing(const Provenance& prov, const KernelSpec& spec, TransformKind* kind = nullptr);

// A 2^m x 2^m Gram matrix represented by its eigenvalue spectrum in the
// matching fast-transform basis.
struct StructuredGram {
  TransformKind transform = TransformKind::fwht;
  size_t n = 0;
  std::vector<cdouble> lam;  // spectrum; real for the fwht path
  double nugget = 0.0;       // already folded into lam

  bool real_path() const { return transform == TransformKind::fwht; }
};

StructuredGram build_spectrum(const PointSet& pts, const KernelSpec& spec, double nugget);

std::vector<double> gram_matvec(const StructuredGram& G, const std::vector<double>& y);
std::vector<double> gram_solve(const StructuredGram& G, const std::vector<double>& y);
double gram_logdet(const StructuredGram& G);
double gram_trace_inv(const StructuredGram& G);

// Forward (analysis) and inverse (synthesis) transform of the pairing.
std::vector<cdouble> gram_forward(TransformKind kind, const std::vector<double>& y);
std::vector<double> gram_inverse_real(TransformKind kind, std::vector<cdouble> y);

// ---------------------------------------------------------------------------
// Multitask block spectra
//
// For levels with sizes n_1 >= ... >= n_L (powers of two) and a product
// multitask kernel R(l,l') Q(x,x'), the joint Gram matrix block (l,l') is
// V_l Lambda_{ll'} conj(V_{l'}) where Lambda_{ll'} stacks n_max(l,l')
// eigenvalues. BlockLambda stores the stacked entries for l <= l'.

struct BlockLambda {
  TransformKind transform = TransformKind::fwht;
  std::vector<size_t> n;                        // non-increasing level sizes
  std::vector<std::vector<cdouble>> blocks;     // index pair_index(l, lp), l <= lp

  size_t levels() const { return n.size(); }
  size_t pair_index(size_t l, size_t lp) const {  // l <= lp
    size_t L = n.size();
    return l * L - l * (l + 1) / 2 + lp;
  }
  const std::vector<cdouble>& block(size_t l, size_t lp) const {
    return blocks[pair_index(l, lp)];
  }
};

// Grid of diagonal sub-blocks at a common granularity g; the working
// representation for the inverse of a BlockLambda.
struct DiagGrid {
  size_t B = 0, g = 0;
  std::vector<std::vector<cdouble>> cell;  // B*B entries, each empty or length g

  const std::vector<cdouble>& at(size_t i, size_t j) const { return cell[i * B + j]; }
  std::vector<cdouble>& at(size_t i, size_t j) { return cell[i * B + j]; }
};

// Schur-complement sweep over levels: returns Lambda^{-1} as a DiagGrid at
// granularity n_L together with log|Lambda|. Throws on a nonpositive Schur
// entry (non-SPD input).
std::pair<DiagGrid, double> block_inverse_det(const BlockLambda& lam);

// Apply a BlockLambda (or a DiagGrid) to a stacked transformed vector.
std::vector<cdouble> block_apply(const BlockLambda& lam, const std::vector<cdouble>& y);
std::vector<cdouble> grid_apply(const DiagGrid& G, const std::vector<size_t>& n,
                                const std::vector<cdouble>& y);
DiagGrid grid_matmul(const DiagGrid& A, const DiagGrid& B);

// ---------------------------------------------------------------------------
// Discrepancy

// Squared kernel discrepancy of a weighted rule: intint K - 2 sum_i w_i
// int K(., x_i) + sum_{i,i'} w_i w_{i'} K(x_i, x_{i'}). Uses the structured
// matvec when the pairing matches, otherwise the dense quadratic form.
double kernel_discrepancy(const PointSet& pts, const std::vector<double>& w,
                          const KernelSpec& spec);

// Weights minimizing the discrepancy: w* = K^{-1} k with k_i = int K(., x_i).
std::vector<double> optimal_weights(const PointSet& pts, const KernelSpec& spec);

}  // namespace qmcgp
