#include "qmcgp/fastxform.hpp"

#include <cmath>

#include "qmcgp/common.hpp"

namespace qmcgp {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

// butterflies without the per-stage normalization; callers apply the
// accumulated 2^(-m/2) once at the end
template <typename T>
void fwht_raw(T* a, size_t n) {
  for (size_t len = 1; len < n; len <<= 1) {
    for (size_t i = 0; i < n; i += 2 * len) {
      for (size_t j = i; j < i + len; ++j) {
        T u = a[j], v = a[j + len];
        a[j] = u + v;
        a[j + len] = u - v;
      }
    }
  }
}

template <typename T>
void fwht_scale(T* a, size_t n) {
  int m = log2_exact(n);
  double s = std::ldexp(1.0, -(m / 2));
  if (m % 2) s *= kInvSqrt2;
  for (size_t i = 0; i < n; ++i) a[i] *= s;
}

// All butterfly stages except the last act within each half independently,
// so large transforms run the halves concurrently and finish with the one
// cross-half stage.
template <typename T>
void fwht_one(T* a, size_t n) {
  const size_t kParallelCutoff = size_t(1) << 15;
  if (n < kParallelCutoff) {
    fwht_raw(a, n);
    fwht_scale(a, n);
    return;
  }
  parallel_chunks(2, 1, [&](size_t, size_t b, size_t e) {
    for (size_t h = b; h < e; ++h) fwht_raw(a + h * (n / 2), n / 2);
  });
  for (size_t j = 0; j < n / 2; ++j) {
    T u = a[j], v = a[j + n / 2];
    a[j] = u + v;
    a[j + n / 2] = u - v;
  }
  fwht_scale(a, n);
}

// Twiddles for one stage of length `len`: w_j = exp(-2 pi i j / len).
void stage_twiddles(size_t len, std::vector<cdouble>& w) {
  w.resize(len / 2);
  for (size_t j = 0; j < len / 2; ++j) {
    double ang = -2.0 * M_PI * double(j) / double(len);
    w[j] = cdouble(std::cos(ang), std::sin(ang));
  }
}

void fftbr_one(cdouble* a, size_t n, std::vector<cdouble>& w) {
  for (size_t len = 2; len <= n; len <<= 1) {
    stage_twiddles(len, w);
    for (size_t i = 0; i < n; i += len) {
      for (size_t j = 0; j < len / 2; ++j) {
        cdouble u = a[i + j];
        cdouble v = a[i + j + len / 2] * w[j];
        a[i + j] = (u + v) * kInvSqrt2;
        a[i + j + len / 2] = (u - v) * kInvSqrt2;
      }
    }
  }
}

void ifftbr_one(cdouble* a, size_t n, std::vector<cdouble>& w) {
  for (size_t len = n; len >= 2; len >>= 1) {
    stage_twiddles(len, w);
    for (size_t i = 0; i < n; i += len) {
      for (size_t j = 0; j < len / 2; ++j) {
        cdouble p = a[i + j], q = a[i + j + len / 2];
        a[i + j] = (p + q) * kInvSqrt2;
        a[i + j + len / 2] = std::conj(w[j]) * (p - q) * kInvSqrt2;
      }
    }
  }
}

}  // namespace

void fwht(std::vector<double>& y) {
  log2_exact(y.size());
  fwht_one(y.data(), y.size());
}

void fwht(std::vector<cdouble>& y) {
  log2_exact(y.size());
  fwht_one(y.data(), y.size());
}

void fftbr(std::vector<cdouble>& y) {
  log2_exact(y.size());
  std::vector<cdouble> w;
  fftbr_one(y.data(), y.size(), w);
}

void ifftbr(std::vector<cdouble>& y) {
  log2_exact(y.size());
  std::vector<cdouble> w;
  ifftbr_one(y.data(), y.size(), w);
}

void fwht_batch(double* data, size_t n, size_t count) {
  log2_exact(n);
  for (size_t r = 0; r < count; ++r) fwht_one(data + r * n, n);
}

void fftbr_batch(cdouble* data, size_t n, size_t count) {
  log2_exact(n);
  std::vector<cdouble> w;
  for (size_t r = 0; r < count; ++r) fftbr_one(data + r * n, n, w);
}

void ifftbr_batch(cdouble* data, size_t n, size_t count) {
  log2_exact(n);
  std::vector<cdouble> w;
  for (size_t r = 0; r < count; ++r) ifftbr_one(data + r * n, n, w);
}

}  // namespace qmcgp
