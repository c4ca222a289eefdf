#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "qmcgp/ldseq.hpp"
#include "qmcgp/linalg.hpp"

namespace qmcgp {

// ---------------------------------------------------------------------------
// Variable transformations from the unit cube

struct MeasureTransform {
  enum class Kind { uniform, gaussian, brownian } kind = Kind::uniform;
  enum class Decomposition { cholesky, pca } decomp = Decomposition::cholesky;

  std::vector<double> lower, upper;  // uniform
  std::vector<double> mean;          // gaussian / brownian
  Mat factor;                        // L with L L^T = covariance

  size_t dim() const;

  static MeasureTransform uniform(std::vector<double> lower, std::vector<double> upper);
  static MeasureTransform gaussian(std::vector<double> mean, const Mat& covariance,
                                   Decomposition decomp = Decomposition::cholesky);
  // Brownian motion observed at increasing times, covariance
  // sigma2 * min(t_j, t_k), mean B0 + drift * t.
  static MeasureTransform brownian(const std::vector<double>& times, double b0, double drift,
                                   double sigma2, Decomposition decomp = Decomposition::cholesky);
};

// Apply the transform row-wise; Gaussian kinds reject coordinates at 0 or 1.
Mat transform_points(const PointSet& pts, const MeasureTransform& t);
void transform_row(const MeasureTransform& t, const double* x, double* out);

// Analytic PCA factor of the standard Brownian covariance min(j,k)/d at
// equispaced times (j/d); columns ordered by decreasing eigenvalue.
Mat brownian_pca_factor_equispaced(size_t d);

// Baker (tent) fold used to periodize integrands for lattice rules.
inline double baker_fold(double x) { return 1.0 - 2.0 * std::fabs(x - 0.5); }

// ---------------------------------------------------------------------------
// Scalar bounds

struct Interval {
  double lo = 0.0, hi = 0.0;
};

// CLT bounds mu_hat +- C z_{alpha/2} sigma_hat / sqrt(n) from raw moments.
Interval clt_bounds(uint64_t n, double mean, double unbiased_variance, double alpha,
                    double inflation);

// Replicated Student-t bounds from R >= 2 randomization means.
Interval student_t_bounds(const std::vector<double>& replicate_means, double alpha,
                          double inflation);

// Interval arithmetic on elementary operations; division by an interval
// containing zero yields (-inf, inf).
Interval iv_add(Interval a, Interval b);
Interval iv_sub(Interval a, Interval b);
Interval iv_mul(Interval a, Interval b);
Interval iv_div(Interval a, Interval b);
Interval iv_min(Interval a, Interval b);
Interval iv_max(Interval a, Interval b);

// ---------------------------------------------------------------------------
// Error metrics and the optimal estimate / stopping rule

struct ErrorMetric {
  enum class Mode { abs_or_rel, abs_and_rel } mode = Mode::abs_or_rel;
  double eps_abs = 0.0, eps_rel = 0.0;

  double operator()(double s) const {
    double r = std::fabs(s) * eps_rel;
    return mode == Mode::abs_or_rel ? std::max(eps_abs, r) : std::min(eps_abs, r);
  }
  bool satisfiable() const {
    if (mode == Mode::abs_or_rel) return eps_abs > 0.0 || eps_rel > 0.0;
    return eps_abs > 0.0 && eps_rel > 0.0;
  }
};

// s_hat = (s- + s+ + h(s-) - h(s+)) / 2; stop iff s+ - s- <= h(s-) + h(s+).
std::pair<double, bool> optimal_estimate_and_stop(double s_lo, double s_hi,
                                                  const std::function<double(double)>& h);

// Boole-style split of QOI uncertainties into mean uncertainties through the
// dependency map; every mean index must belong to exactly one QOI.
std::vector<double> split_uncertainty(
    const std::vector<double>& alpha_s,
    const std::function<void(const std::vector<uint8_t>&, std::vector<uint8_t>&)>& dependency,
    size_t d_mu);

// ---------------------------------------------------------------------------
// Adaptive (Quasi-)Monte Carlo for array quantities of interest

enum class BoundMethod { clt_iid, student_t_replicated };

struct ArrayQoiProblem {
  size_t dim = 0;   // sampling dimension
  size_t d_mu = 0;  // number of expectations
  size_t d_s = 0;   // number of QOIs
  // Evaluate the integrand at one cube point, writing out[k] wherever
  // active[k] != 0. Inactive outputs must not be touched.
  std::function<void(const double* x, const uint8_t* active, double* out)> integrand;
  // Propagate mean bounds to QOI bounds (the C-/C+ pair).
  std::function<void(const std::vector<Interval>& mu, std::vector<Interval>& s)> propagate;
  // Map QOI stop flags to mean stop flags (the dependency D).
  std::function<void(const std::vector<uint8_t>& s_flags, std::vector<uint8_t>& mu_flags)>
      dependency;
  std::vector<ErrorMetric> tolerance;  // per QOI
  std::vector<double> alpha_s;         // per QOI uncertainty budget

  // Identity wiring for d_s == d_mu problems.
  static ArrayQoiProblem identity(size_t dim, size_t d,
                                  std::function<void(const double*, const uint8_t*, double*)> f,
                                  ErrorMetric tol, double alpha);
};

struct ArrayQoiOptions {
  BoundMethod method = BoundMethod::student_t_replicated;
  size_t replications = 8;
  double inflation = 1.2;
  int m1 = 8;                       // initial sample count 2^m1
  uint64_t n_max = uint64_t(1) << 22;  // per-replicate cap
  uint64_t seed = 7;
  SeqKind sequence = SeqKind::dnet;  // dnet or lattice for the replicated method
};

struct ArrayQoiTraceRow {
  uint64_t n = 0;
  std::vector<Interval> s_bounds;
  std::vector<uint8_t> s_flags;
};

struct ArrayQoiResult {
  std::vector<double> s_hat;
  std::vector<Interval> s_bounds;
  std::vector<Interval> mu_bounds;
  std::vector<uint8_t> s_flags;
  uint64_t n = 0;  // points per replicate (or total for IID)
  bool converged = false;
  std::vector<uint64_t> evaluations;  // per mean output, for economics checks
  std::vector<ArrayQoiTraceRow> trace;
};

ArrayQoiResult adaptive_array_qoi(const ArrayQoiProblem& prob, const ArrayQoiOptions& opt);

// Propagators and dependency for closed/total sensitivity indices of
// `subsets.size()` input subsets; mean shape (2, 3, c) flattened row-major,
// QOI shape (2, c). Implements the clipped ratio bounds.
struct SensitivityLayout {
  size_t c = 0;
  size_t mu_index(size_t i, size_t k, size_t j) const { return (i * 3 + k) * c + j; }
  size_t s_index(size_t i, size_t j) const { return i * c + j; }
  void propagate(const std::vector<Interval>& mu, std::vector<Interval>& s) const;
  void dependency(const std::vector<uint8_t>& s_flags, std::vector<uint8_t>& mu_flags) const;
};

// Full sensitivity-index problem for an objective on [0,1]^nu: samples live
// in [0,1]^{2 nu} and the integrand emits the (2, 3, c) mean array.
ArrayQoiProblem sensitivity_indices_problem(size_t nu,
                                            std::function<double(const double*)> objective,
                                            const std::vector<std::vector<int>>& subsets,
                                            ErrorMetric tol, double alpha);

}  // namespace qmcgp
