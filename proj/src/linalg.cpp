#include "qmcgp/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace qmcgp {

Mat matmul(const Mat& A, const Mat& B) {
  if (A.cols != B.rows) throw std::invalid_argument("matmul: shape mismatch");
  Mat C(A.rows, B.cols);
  for (size_t i = 0; i < A.rows; ++i)
    for (size_t k = 0; k < A.cols; ++k) {
      double aik = A(i, k);
      if (aik == 0.0) continue;
      for (size_t j = 0; j < B.cols; ++j) C(i, j) += aik * B(k, j);
    }
  return C;
}

std::vector<double> matvec(const Mat& A, const std::vector<double>& x) {
  if (A.cols != x.size()) throw std::invalid_argument("matvec: shape mismatch");
  std::vector<double> y(A.rows, 0.0);
  for (size_t i = 0; i < A.rows; ++i) {
    double s = 0.0;
    const double* row = &A.a[i * A.cols];
    for (size_t j = 0; j < A.cols; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

Mat transpose(const Mat& A) {
  Mat T(A.cols, A.rows);
  for (size_t i = 0; i < A.rows; ++i)
    for (size_t j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
  return T;
}

Mat cholesky(Mat A) {
  if (A.rows != A.cols) throw std::invalid_argument("cholesky: not square");
  size_t n = A.rows;
  for (size_t j = 0; j < n; ++j) {
    double d = A(j, j);
    for (size_t k = 0; k < j; ++k) d -= A(j, k) * A(j, k);
    if (d <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
    double s = std::sqrt(d);
    A(j, j) = s;
    for (size_t i = j + 1; i < n; ++i) {
      double v = A(i, j);
      const double* ri = &A.a[i * n];
      const double* rj = &A.a[j * n];
      for (size_t k = 0; k < j; ++k) v -= ri[k] * rj[k];
      A(i, j) = v / s;
    }
  }
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) A(i, j) = 0.0;
  return A;
}

std::vector<double> chol_solve(const Mat& L, std::vector<double> b) {
  size_t n = L.rows;
  if (b.size() != n) throw std::invalid_argument("chol_solve: shape mismatch");
  for (size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (size_t k = 0; k < i; ++k) v -= L(i, k) * b[k];
    b[i] = v / L(i, i);
  }
  for (size_t ii = n; ii-- > 0;) {
    double v = b[ii];
    for (size_t k = ii + 1; k < n; ++k) v -= L(k, ii) * b[k];
    b[ii] = v / L(ii, ii);
  }
  return b;
}

double chol_logdet(const Mat& L) {
  double s = 0.0;
  for (size_t i = 0; i < L.rows; ++i) s += std::log(L(i, i));
  return 2.0 * s;
}

Mat chol_inverse(const Mat& L) {
  size_t n = L.rows;
  Mat inv(n, n);
  std::vector<double> e(n, 0.0);
  for (size_t j = 0; j < n; ++j) {
    e.assign(n, 0.0);
    e[j] = 1.0;
    auto col = chol_solve(L, e);
    for (size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

void jacobi_eigh(const Mat& A_in, std::vector<double>& evals, Mat& V) {
  if (A_in.rows != A_in.cols) throw std::invalid_argument("jacobi_eigh: not square");
  size_t n = A_in.rows;
  Mat A = A_in;
  V = Mat(n, n);
  for (size_t i = 0; i < n; ++i) V(i, i) = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (size_t p = 0; p < n; ++p)
      for (size_t q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
    if (off < 1e-30 * (n * n)) break;
    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        double apq = A(p, q);
        if (std::fabs(apq) < 1e-300) continue;
        double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (size_t k = 0; k < n; ++k) {
          double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (size_t k = 0; k < n; ++k) {
          double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (size_t k = 0; k < n; ++k) {
          double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  evals.resize(n);
  for (size_t i = 0; i < n; ++i) evals[i] = A(i, i);
  // sort ascending, permuting eigenvector columns alongside
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (evals[idx[j]] < evals[idx[i]]) std::swap(idx[i], idx[j]);
  std::vector<double> ev(n);
  Mat W(n, n);
  for (size_t j = 0; j < n; ++j) {
    ev[j] = evals[idx[j]];
    for (size_t i = 0; i < n; ++i) W(i, j) = V(i, idx[j]);
  }
  evals = ev;
  V = W;
}

std::vector<double> tridiag_solve(std::vector<double> sub, std::vector<double> diag,
                                  std::vector<double> super, std::vector<double> rhs) {
  size_t n = diag.size();
  if (sub.size() + 1 != n || super.size() + 1 != n || rhs.size() != n)
    throw std::invalid_argument("tridiag_solve: shape mismatch");
  for (size_t i = 1; i < n; ++i) {
    double w = sub[i - 1] / diag[i - 1];
    diag[i] -= w * super[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (size_t ii = n - 1; ii-- > 0;) rhs[ii] = (rhs[ii] - super[ii] * rhs[ii + 1]) / diag[ii];
  return rhs;
}

std::vector<double> solve_dense(Mat A, std::vector<double> b) {
  size_t n = A.rows;
  if (A.cols != n || b.size() != n) throw std::invalid_argument("solve_dense: shape mismatch");
  std::vector<size_t> piv(n);
  for (size_t i = 0; i < n; ++i) piv[i] = i;
  for (size_t k = 0; k < n; ++k) {
    size_t p = k;
    for (size_t i = k + 1; i < n; ++i)
      if (std::fabs(A(i, k)) > std::fabs(A(p, k))) p = i;
    if (A(p, k) == 0.0) throw std::runtime_error("solve_dense: singular matrix");
    if (p != k) {
      for (size_t j = 0; j < n; ++j) std::swap(A(p, j), A(k, j));
      std::swap(b[p], b[k]);
    }
    for (size_t i = k + 1; i < n; ++i) {
      double w = A(i, k) / A(k, k);
      if (w == 0.0) continue;
      for (size_t j = k; j < n; ++j) A(i, j) -= w * A(k, j);
      b[i] -= w * b[k];
    }
  }
  for (size_t ii = n; ii-- > 0;) {
    double v = b[ii];
    for (size_t j = ii + 1; j < n; ++j) v -= A(ii, j) * b[j];
    b[ii] = v / A(ii, ii);
  }
  return b;
}

}  // namespace qmcgp
