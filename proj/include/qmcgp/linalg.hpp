#pragma once

#include <cstddef>
#include <vector>

namespace qmcgp {

// Row-major dense matrix, just enough linear algebra for the dense GP path,
// measure transforms, and the PDE test problems.
struct Mat {
  size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(size_t i, size_t j) { return a[i * cols + j]; }
  double operator()(size_t i, size_t j) const { return a[i * cols + j]; }
};

Mat matmul(const Mat& A, const Mat& B);
std::vector<double> matvec(const Mat& A, const std::vector<double>& x);
Mat transpose(const Mat& A);

// In-place lower Cholesky of an SPD matrix. Throws on a non-positive pivot.
Mat cholesky(Mat A);
std::vector<double> chol_solve(const Mat& L, std::vector<double> b);
double chol_logdet(const Mat& L);
// Inverse from a Cholesky factor (for trace and GCV on the dense path).
Mat chol_inverse(const Mat& L);

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
// Returns eigenvalues ascending; V columns are the eigenvectors.
void jacobi_eigh(const Mat& A, std::vector<double>& evals, Mat& V);

// Solve a tridiagonal system with the Thomas algorithm.
// diag has n entries, sub/super have n-1.
std::vector<double> tridiag_solve(std::vector<double> sub, std::vector<double> diag,
                                  std::vector<double> super, std::vector<double> rhs);

std::vector<double> solve_dense(Mat A, std::vector<double> b);  // partial-pivot LU

}  // namespace qmcgp
