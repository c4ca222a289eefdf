#include <algorithm>
#include <chrono>
#include <cmath>
#include <initializer_list>

#include "doctest.h"
#include "qmcgp/fastgram.hpp"
#include "support/test_util.hpp"

using namespace qmcgp;

namespace {

Rng rng(777);

PointSet lattice_set(size_t d, size_t n, uint64_t seed) {
  return lattice_points(LatticeConfig::make_random_shift(d, seed), n);
}

PointSet net_set(size_t d, size_t n, uint64_t seed, NetRand r = NetRand::digital_shift) {
  return digital_net_points(DigitalNetConfig::make_default(d, r, seed), 0, n);
}

// dense reconstruction of V Lambda conj(V) for the matched transform
Mat reconstruct(const StructuredGram& G) {
  size_t n = G.n;
  Mat out(n, n);
  if (G.transform == TransformKind::fwht) {
    auto H = testutil::dense_hadamard(n);
    for (size_t i = 0; i < n; ++i)
      for (size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (size_t q = 0; q < n; ++q) s += H[i][q] * G.lam[q].real() * H[q][k];
        out(i, k) = s;
      }
  } else {
    // K = V Lambda conj(V) with conj(V) the DFTBR matrix M and V = M^H
    auto M = testutil::dense_dftbr(n);
    for (size_t i = 0; i < n; ++i)
      for (size_t k = 0; k < n; ++k) {
        std::complex<double> s = 0.0;
        for (size_t q = 0; q < n; ++q) s += std::conj(M[q][i]) * G.lam[q] * M[q][k];
        CHECK(std::fabs(s.imag()) < 1e-9);
        out(i, k) = s.real();
      }
  }
  return out;
}

}  // namespace

TEST_CASE("single point spectrum") {
  auto pts = net_set(2, 1, 3);
  KernelSpec spec = KernelSpec::dsi(KernelFamily::dsi_omega, 2, 2);
  auto G = build_spectrum(pts, spec, 0.25);
  CHECK(G.n == 1);
  CHECK(G.lam[0].real() ==
        doctest::Approx(kernel_eval(spec, pts.row(0), pts.row(0)) + 0.25));
}

TEST_CASE("lattice + SI spectrum matches dense eigenvalues and reconstruction") {
  LatticeConfig cfg;
  cfg.g = {1, 3};
  cfg.shift = {0.0, 0.0};
  auto pts = lattice_points(cfg, 8);
  KernelSpec spec = KernelSpec::si(2, 1, 1.0, 1.0);
  auto G = build_spectrum(pts, spec, 0.0);

  Mat K = testutil::dense_gram(pts, spec, 0.0);
  std::vector<double> evals;
  Mat V;
  jacobi_eigh(K, evals, V);
  std::vector<double> lam(G.n);
  for (size_t i = 0; i < G.n; ++i) {
    CHECK(std::fabs(G.lam[i].imag()) < 1e-9);
    lam[i] = G.lam[i].real();
  }
  std::sort(lam.begin(), lam.end());
  for (size_t i = 0; i < G.n; ++i) CHECK(lam[i] == doctest::Approx(evals[i]).epsilon(1e-8));

  Mat R = reconstruct(G);
  for (size_t i = 0; i < 8; ++i)
    for (size_t k = 0; k < 8; ++k) CHECK(std::fabs(R(i, k) - K(i, k)) < 1e-8);
}

TEST_CASE("net + DSI spectrum reconstructs the dense Gram") {
  auto pts = net_set(2, 8, 4);
  KernelSpec spec = KernelSpec::dsi(KernelFamily::dsi_omega, 2, 2, 1.0, 0.7);
  auto G = build_spectrum(pts, spec, 0.0);
  Mat K = testutil::dense_gram(pts, spec, 0.0);
  Mat R = reconstruct(G);
  for (size_t i = 0; i < 8; ++i)
    for (size_t k = 0; k < 8; ++k) CHECK(std::fabs(R(i, k) - K(i, k)) < 1e-8);
}

TEST_CASE("reconstruction across fuzzed matched pairings") {
  for (int trial = 0; trial < 8; ++trial) {
    size_t d = 1 + trial % 4;
    size_t n = size_t(1) << (2 + trial % 4);
    bool lat = trial % 2 == 0;
    PointSet pts = lat ? lattice_set(d, n, 100 + trial)
                       : net_set(d, n, 100 + trial,
                                 trial % 4 < 2 ? NetRand::digital_shift : NetRand::lms_plus_shift);
    KernelSpec spec = lat ? KernelSpec::si(d, 1 + trial % 2, 1.0 + 0.2 * trial, 0.8)
                          : KernelSpec::dsi(KernelFamily::dsi_omega, d, 2 + trial % 3,
                                            1.0 + 0.2 * trial, 0.8);
    auto G = build_spectrum(pts, spec, 1e-6);
    Mat K = testutil::dense_gram(pts, spec, 1e-6);
    Mat R = reconstruct(G);
    double err = 0.0;
    for (size_t i = 0; i < n; ++i)
      for (size_t k = 0; k < n; ++k) err = std::max(err, std::fabs(R(i, k) - K(i, k)));
    CHECK(err < 1e-8);
  }
}

TEST_CASE("matvec, solve, logdet, trace against dense Cholesky") {
  for (int trial = 0; trial < 10; ++trial) {
    size_t d = 1 + trial % 3, n = size_t(1) << (3 + trial % 3);
    bool lat = trial % 2 == 1;
    PointSet pts = lat ? lattice_set(d, n, 50 + trial) : net_set(d, n, 50 + trial);
    KernelSpec spec =
        lat ? KernelSpec::si(d, 1) : KernelSpec::dsi(KernelFamily::dsi_kdddot, d, 1.5);
    double xi = 1e-4;
    auto G = build_spectrum(pts, spec, xi);
    Mat K = testutil::dense_gram(pts, spec, xi);
    auto L = cholesky(K);

    std::vector<double> y(n);
    for (auto& v : y) v = 2.0 * rng.next_double() - 1.0;

    auto Ky = gram_matvec(G, y);
    auto Ky_dense = matvec(K, y);
    for (size_t i = 0; i < n; ++i)
      CHECK(Ky[i] == doctest::Approx(Ky_dense[i]).epsilon(1e-8));

    auto s = gram_solve(G, y);
    auto s_dense = chol_solve(L, y);
    for (size_t i = 0; i < n; ++i)
      CHECK(s[i] == doctest::Approx(s_dense[i]).epsilon(1e-7));

    CHECK(gram_logdet(G) == doctest::Approx(chol_logdet(L)).epsilon(1e-8));

    Mat inv = chol_inverse(L);
    double tr = 0.0;
    for (size_t i = 0; i < n; ++i) tr += inv(i, i);
    CHECK(gram_trace_inv(G) == doctest::Approx(tr).epsilon(1e-8));

    // round trip
    auto rt = gram_solve(G, gram_matvec(G, y));
    for (size_t i = 0; i < n; ++i) CHECK(rt[i] == doctest::Approx(y[i]).epsilon(1e-8));
  }
}

TEST_CASE("identity spectrum acts as the identity") {
  StructuredGram G;
  G.transform = TransformKind::fwht;
  G.n = 8;
  G.lam.assign(8, 1.0);
  std::vector<double> y(8);
  for (auto& v : y) v = rng.next_double();
  auto out = gram_matvec(G, y);
  for (size_t i = 0; i < 8; ++i) CHECK(out[i] == doctest::Approx(y[i]));
  CHECK(gram_logdet(G) == doctest::Approx(0.0));
}

TEST_CASE("unmatched pairings are rejected") {
  auto pts = net_set(2, 8, 9, NetRand::nus);
  KernelSpec spec = KernelSpec::dsi(KernelFamily::dsi_omega, 2, 2);
  CHECK_THROWS(build_spectrum(pts, spec, 0.0));  // scrambling breaks structure

  auto lat = lattice_set(2, 8, 9);
  CHECK_THROWS(build_spectrum(lat, spec, 0.0));  // DSI kernel on a lattice

  auto net = net_set(2, 8, 9);
  CHECK_THROWS(build_spectrum(net, KernelSpec::si(2, 1), 0.0));  // SI kernel on a net
}

TEST_CASE("block lambda: scalar and 2x2 hand checks") {
  // L = 1 reduces to elementwise reciprocal and a log sum
  BlockLambda lam;
  lam.transform = TransformKind::fwht;
  lam.n = {4};
  lam.blocks = {{2.0, 4.0, 5.0, 8.0}};
  auto [grid, logdet] = block_inverse_det(lam);
  CHECK(grid.B == 1);
  for (size_t i = 0; i < 4; ++i)
    CHECK(grid.at(0, 0)[i].real() == doctest::Approx(1.0 / lam.blocks[0][i].real()));
  CHECK(logdet ==
        doctest::Approx(std::log(2.0) + std::log(4.0) + std::log(5.0) + std::log(8.0)));

  // L = 2 with n1 = n2 = 1: [[a, b], [b, d]]
  BlockLambda two;
  two.transform = TransformKind::fwht;
  two.n = {1, 1};
  double a = 3.0, b = 1.2, dd = 2.0;
  two.blocks = {{a}, {b}, {dd}};
  auto [g2, ld2] = block_inverse_det(two);
  double schur = dd - b * b / a;
  CHECK(ld2 == doctest::Approx(std::log(a * schur)));
  CHECK(g2.at(0, 0)[0].real() == doctest::Approx(1.0 / a + b * b / (a * a * schur)));
  CHECK(g2.at(0, 1)[0].real() == doctest::Approx(-b / (a * schur)));
  CHECK(g2.at(1, 1)[0].real() == doctest::Approx(1.0 / schur));
}

namespace {

// assemble a BlockLambda densely (block (l, lp) = stacked diagonals)
Mat assemble_block_lambda(const BlockLambda& lam) {
  size_t L = lam.n.size(), N = 0;
  std::vector<size_t> off(L + 1, 0);
  for (size_t l = 0; l < L; ++l) off[l + 1] = off[l] + lam.n[l];
  N = off[L];
  Mat A(N, N);
  for (size_t l = 0; l < L; ++l)
    for (size_t lp = l; lp < L; ++lp) {
      const auto& blk = lam.block(l, lp);
      for (size_t r = 0; r < lam.n[l]; ++r) {
        size_t c = r % lam.n[lp];
        A(off[l] + r, off[lp] + c) = blk[r].real();
        A(off[lp] + c, off[l] + r) = blk[r].real();
      }
    }
  return A;
}

Mat grid_to_dense(const DiagGrid& G) {
  size_t N = G.B * G.g;
  Mat A(N, N);
  for (size_t i = 0; i < G.B; ++i)
    for (size_t j = 0; j < G.B; ++j) {
      const auto& c = G.at(i, j);
      if (c.empty()) continue;
      for (size_t r = 0; r < G.g; ++r) A(i * G.g + r, j * G.g + r) = c[r].real();
    }
  return A;
}

BlockLambda random_spd_block_lambda(const std::vector<size_t>& sizes, uint64_t seed) {
  // generated from an actual matched pairing so it is SPD by construction
  size_t L = sizes.size();
  BlockLambda lam;
  lam.transform = TransformKind::fwht;
  lam.n = sizes;
  lam.blocks.resize(L * (L + 1) / 2);
  size_t d = 2;
  KernelSpec spec = KernelSpec::dsi(KernelFamily::dsi_omega, d, 2, 1.0, 0.9);
  std::vector<PointSet> pts(L);
  auto base = default_sobol_matrices(d);
  for (size_t l = 0; l < L; ++l) {
    auto cfg = DigitalNetConfig::make(base, NetRand::digital_shift, hash_mix(seed, l));
    pts[l] = digital_net_points(cfg, 0, sizes[l]);
  }
  Mat R(L, L);
  Rng lr(seed);
  for (size_t l = 0; l < L; ++l)
    for (size_t lp = 0; lp <= l; ++lp) {
      double v = (l == lp) ? 1.0 + lr.next_double() : 0.3 * (lr.next_double() - 0.5);
      R(l, lp) = R(lp, l) = v;
    }
  for (size_t l = 0; l < L; ++l)
    for (size_t lp = l; lp < L; ++lp) {
      std::vector<double> col(sizes[l]);
      for (size_t i = 0; i < sizes[l]; ++i)
        col[i] = R(l, lp) * kernel_eval(spec, pts[l].row(i), pts[lp].row(0));
      if (l == lp) col[0] += 0.05;
      auto t = gram_forward(TransformKind::fwht, col);
      double s = std::sqrt(double(sizes[lp]));
      for (auto& v : t) v *= s;
      lam.blocks[lam.pair_index(l, lp)] = std::move(t);
    }
  return lam;
}

}  // namespace

TEST_CASE("block inverse and determinant on the (8,4,2) pattern and fuzzed sizes") {
  std::vector<std::vector<size_t>> shapes = {{8, 4, 2}, {4, 4}, {16, 8, 4, 2}, {8, 8, 2}, {2}};
  for (size_t t = 0; t < shapes.size(); ++t) {
    auto lam = random_spd_block_lambda(shapes[t], 900 + t);
    auto [grid, logdet] = block_inverse_det(lam);
    Mat A = assemble_block_lambda(lam);
    Mat Inv = grid_to_dense(grid);
    Mat P = matmul(A, Inv);
    for (size_t i = 0; i < P.rows; ++i)
      for (size_t j = 0; j < P.cols; ++j)
        CHECK(std::fabs(P(i, j) - (i == j ? 1.0 : 0.0)) < 1e-8);
    auto L = cholesky(A);
    CHECK(logdet == doctest::Approx(chol_logdet(L)).epsilon(1e-8));
  }
}

TEST_CASE("block apply matches dense assembly") {
  auto lam = random_spd_block_lambda({8, 4, 2}, 77);
  Mat A = assemble_block_lambda(lam);
  size_t N = 14;
  std::vector<cdouble> y(N);
  std::vector<double> yr(N);
  for (size_t i = 0; i < N; ++i) {
    yr[i] = 2.0 * rng.next_double() - 1.0;
    y[i] = yr[i];
  }
  auto out = block_apply(lam, y);
  auto want = matvec(A, yr);
  for (size_t i = 0; i < N; ++i) CHECK(out[i].real() == doctest::Approx(want[i]).epsilon(1e-10));
}

TEST_CASE("nonpositive Schur entries are reported") {
  BlockLambda bad;
  bad.transform = TransformKind::fwht;
  bad.n = {1, 1};
  bad.blocks = {{1.0}, {2.0}, {1.0}};  // schur = 1 - 4 < 0
  CHECK_THROWS(block_inverse_det(bad));
}

TEST_CASE("kernel discrepancy identities and optimal weights") {
  auto pts = net_set(2, 16, 21);
  KernelSpec spec = KernelSpec::dsi(KernelFamily::dsi_omega, 2, 2, 1.3, 0.8);

  // single point, unit weight: K(x0,x0) - gamma
  PointSet one(1, 2);
  one.prov = pts.prov;
  one.at(0, 0) = pts.at(0, 0);
  one.at(0, 1) = pts.at(0, 1);
  double disc1 = kernel_discrepancy(one, {1.0}, spec);
  CHECK(disc1 == doctest::Approx(kernel_eval(spec, one.row(0), one.row(0)) - 1.3));

  // equal weights: gamma-integral identity reduces the discrepancy to the
  // Gram average minus gamma
  std::vector<double> w(pts.n, 1.0 / double(pts.n));
  double disc = kernel_discrepancy(pts, w, spec);
  Mat K = testutil::dense_gram(pts, spec, 0.0);
  double avg = 0.0;
  for (size_t i = 0; i < pts.n; ++i)
    for (size_t k = 0; k < pts.n; ++k) avg += K(i, k);
  avg /= double(pts.n) * double(pts.n);
  CHECK(disc == doctest::Approx(avg - 1.3).epsilon(1e-10));

  // optimal weights minimize: perturbations increase the discrepancy
  auto wopt = optimal_weights(pts, spec);
  double dopt = kernel_discrepancy(pts, wopt, spec);
  CHECK(dopt <= disc + 1e-12);
  Rng prng(3);
  for (int t = 0; t < 5; ++t) {
    auto wp = wopt;
    for (auto& v : wp) v += 0.01 * (prng.next_double() - 0.5);
    CHECK(kernel_discrepancy(pts, wp, spec) >= dopt - 1e-12);
  }

  // dense fallback for an unmatched pairing (SE kernel) stays finite and PSD
  KernelSpec se = KernelSpec::radial(KernelFamily::squared_exponential, 2, 0.0, 1.0, 0.6);
  double disc_se = kernel_discrepancy(pts, w, se);
  CHECK(std::isfinite(disc_se));
  CHECK(disc_se >= -1e-10);
  auto wse = optimal_weights(pts, se);
  CHECK(kernel_discrepancy(pts, wse, se) <= disc_se + 1e-12);
}

TEST_CASE("randomized lattice discrepancy decreases with n in the median") {
  KernelSpec spec = KernelSpec::si(2, 1, 1.0, 1.0);
  std::vector<double> prev_median(1, 1e300);
  std::vector<uint64_t> ns = {16, 64, 256, 1024};
  double last = 1e300;
  for (uint64_t n : ns) {
    std::vector<double> discs;
    for (uint64_t s = 0; s < 20; ++s) {
      auto pts = lattice_set(2, n, 1000 + s);
      std::vector<double> w(n, 1.0 / double(n));
      discs.push_back(kernel_discrepancy(pts, w, spec));
    }
    double med = testutil::median(discs);
    CHECK(med < last);
    last = med;
  }
}

TEST_CASE("build and solve stay in the n log n regime") {
  KernelSpec spec = KernelSpec::dsi(KernelFamily::dsi_omega, 4, 2, 1.0, 0.8);
  auto run = [&](uint64_t n) {
    auto cfg = DigitalNetConfig::make_default(4, NetRand::digital_shift, 5);
    auto pts = digital_net_points(cfg, 0, n);
    std::vector<double> y(n);
    for (auto& v : y) v = rng.next_double();
    auto t0 = std::chrono::steady_clock::now();
    auto G = build_spectrum(pts, spec, 1e-8);
    auto s = gram_solve(G, y);
    auto t1 = std::chrono::steady_clock::now();
    CHECK(s.size() == n);
    return std::chrono::duration<double>(t1 - t0).count();
  };
  // warm up, then best of three at each size
  run(uint64_t(1) << 13);
  run(uint64_t(1) << 16);
  double t_small = std::min({run(uint64_t(1) << 13), run(uint64_t(1) << 13), run(uint64_t(1) << 13)});
  double t_big = std::min({run(uint64_t(1) << 16), run(uint64_t(1) << 16), run(uint64_t(1) << 16)});
  CHECK(t_big < 8.0 * t_small);
}
