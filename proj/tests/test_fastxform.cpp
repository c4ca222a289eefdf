#include <cmath>
#include <complex>

#include "doctest.h"
#include "qmcgp/common.hpp"
#include "qmcgp/fastxform.hpp"
#include "support/test_util.hpp"

using namespace qmcgp;

namespace {
Rng rng(12345);

std::vector<double> random_vec(size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * rng.next_double() - 1.0;
  return v;
}
}  // namespace

TEST_CASE("fwht small cases") {
  std::vector<double> y = {1.0, 1.0};
  fwht(y);
  CHECK(y[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(y[1] == doctest::Approx(0.0).epsilon(1e-14));

  std::vector<double> e = {1.0, 0.0, 0.0, 0.0};
  fwht(e);
  for (double v : e) CHECK(v == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("fwht is an involution") {
  for (size_t n : {4u, 64u, 1024u}) {
    auto y = random_vec(n);
    auto z = y;
    fwht(z);
    fwht(z);
    for (size_t i = 0; i < n; ++i) CHECK(std::fabs(z[i] - y[i]) < 1e-12);
  }
}

TEST_CASE("fwht matches the dense scaled Hadamard matrix") {
  for (size_t n : {2u, 8u, 64u}) {
    auto y = random_vec(n);
    auto H = testutil::dense_hadamard(n);
    std::vector<double> want(n, 0.0);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) want[i] += H[i][j] * y[j];
    auto got = y;
    fwht(got);
    for (size_t i = 0; i < n; ++i) CHECK(std::fabs(got[i] - want[i]) < 1e-12);
  }
}

TEST_CASE("fftbr maps constants to sqrt(n) e0") {
  for (size_t n : {2u, 16u, 256u}) {
    std::vector<cdouble> y(n, 3.25);
    fftbr(y);
    CHECK(std::abs(y[0] - 3.25 * std::sqrt(double(n))) < 1e-10);
    for (size_t i = 1; i < n; ++i) CHECK(std::abs(y[i]) < 1e-10);
  }
}

TEST_CASE("ifftbr inverts fftbr") {
  for (size_t n : {2u, 32u, 1024u}) {
    std::vector<cdouble> y(n);
    for (auto& v : y) v = cdouble(2.0 * rng.next_double() - 1.0, 2.0 * rng.next_double() - 1.0);
    auto z = y;
    fftbr(z);
    ifftbr(z);
    for (size_t i = 0; i < n; ++i) CHECK(std::abs(z[i] - y[i]) < 1e-12);
  }
}

TEST_CASE("fftbr matches the dense bit-reversed DFT matrix") {
  for (size_t n : {2u, 8u, 64u}) {
    std::vector<cdouble> y(n);
    for (auto& v : y) v = cdouble(2.0 * rng.next_double() - 1.0, 2.0 * rng.next_double() - 1.0);
    auto M = testutil::dense_dftbr(n);
    auto want = testutil::dense_apply(M, y);
    auto got = y;
    fftbr(got);
    for (size_t i = 0; i < n; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-10);
  }
}

TEST_CASE("unitarity of both transforms") {
  for (size_t n : {16u, 4096u}) {
    auto y = random_vec(n);
    double norm0 = 0.0;
    for (double v : y) norm0 += v * v;

    auto w = y;
    fwht(w);
    double norm1 = 0.0;
    for (double v : w) norm1 += v * v;
    CHECK(std::fabs(std::sqrt(norm1) - std::sqrt(norm0)) < 1e-12);

    std::vector<cdouble> z(y.begin(), y.end());
    fftbr(z);
    double norm2 = 0.0;
    for (auto v : z) norm2 += std::norm(v);
    CHECK(std::fabs(std::sqrt(norm2) - std::sqrt(norm0)) < 1e-12);
  }
}

TEST_CASE("doubling recursion reproduces the length-2n transform") {
  // [V_{m+1}] y = combine(V_m y_top, V_m y_bot) with the stage weights
  size_t n = 32;
  auto y = random_vec(2 * n);
  std::vector<cdouble> z(y.begin(), y.end());
  fftbr(z);

  std::vector<cdouble> top(y.begin(), y.begin() + n), bot(y.begin() + n, y.end());
  fftbr(top);
  fftbr(bot);
  for (size_t i = 0; i < n; ++i) {
    double ang = -M_PI * double(i) / double(n);
    cdouble w = cdouble(std::cos(ang), std::sin(ang));
    cdouble hi = (top[i] + w * bot[i]) / std::sqrt(2.0);
    cdouble lo = (top[i] - w * bot[i]) / std::sqrt(2.0);
    CHECK(std::abs(z[i] - hi) < 1e-12);
    CHECK(std::abs(z[i + n] - lo) < 1e-12);
  }

  std::vector<double> yw = random_vec(2 * n);
  auto zw = yw;
  fwht(zw);
  std::vector<double> wt(yw.begin(), yw.begin() + n), wb(yw.begin() + n, yw.end());
  fwht(wt);
  fwht(wb);
  for (size_t i = 0; i < n; ++i) {
    CHECK(std::fabs(zw[i] - (wt[i] + wb[i]) / std::sqrt(2.0)) < 1e-12);
    CHECK(std::fabs(zw[i + n] - (wt[i] - wb[i]) / std::sqrt(2.0)) < 1e-12);
  }
}

TEST_CASE("batched application equals independent applications") {
  size_t n = 64, R = 5;
  std::vector<double> data(n * R);
  for (auto& v : data) v = rng.next_double();
  auto copy = data;
  fwht_batch(data.data(), n, R);
  for (size_t r = 0; r < R; ++r) {
    std::vector<double> one(copy.begin() + r * n, copy.begin() + (r + 1) * n);
    fwht(one);
    for (size_t i = 0; i < n; ++i) CHECK(data[r * n + i] == doctest::Approx(one[i]));
  }
}

TEST_CASE("non-power-of-two lengths are rejected") {
  std::vector<double> y(6, 1.0);
  CHECK_THROWS(fwht(y));
  std::vector<cdouble> z(12, 1.0);
  CHECK_THROWS(fftbr(z));
}
