#pragma once

#include <iosfwd>
#include <vector>

#include "qmcgp/fastgram.hpp"
#include "qmcgp/kernels.hpp"
#include "qmcgp/ldseq.hpp"
#include "qmcgp/linalg.hpp"

namespace qmcgp {

// Extensible point source tied to one model; generates any index range of
// the underlying randomized sequence deterministically.
struct SequenceHandle {
  enum class Kind { lattice, dnet } kind = Kind::dnet;
  LatticeConfig lattice;
  DigitalNetConfig dnet;

  PointSet points(uint64_t i0, uint64_t i1) const;
  size_t dim() const { return kind == Kind::lattice ? lattice.dim() : dnet.dim(); }
  uint64_t max_points() const;

  static SequenceHandle make_lattice(LatticeConfig cfg);
  static SequenceHandle make_dnet(DigitalNetConfig cfg);
};

enum class GPBackend { fast, dense };
enum class GPLoss { nmll, gcv };

struct FitResult {
  int iterations = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

struct CubatureResult {
  double mean = 0.0;
  double variance = 0.0;
};

// Gaussian-process regression on the first n points of a matched sequence /
// kernel pairing. The fast backend works entirely through the Gram spectrum;
// the dense backend is the O(n^3) reference sharing the same interface.
class FastGP {
 public:
  FastGP(SequenceHandle seq, KernelSpec spec, double nugget = 1e-8,
         GPBackend backend = GPBackend::fast);

  void set_data(const std::vector<double>& y);      // n must be 2^m (fast path)
  void extend_data(const std::vector<double>& y2);  // append, keeping cached points

  size_t n() const { return y_.size(); }
  size_t dim() const { return seq_.dim(); }
  GPBackend backend() const { return backend_; }
  const KernelSpec& kernel() const { return spec_; }
  double nugget() const { return nugget_; }
  double tau() const { return tau_; }
  void set_tau(double tau) { tau_ = tau; }
  const PointSet& points() const { return pts_; }
  const std::vector<double>& observations() const { return y_; }
  const SequenceHandle& sequence() const { return seq_; }

  void set_hyperparameters(const KernelSpec& spec);  // invalidates caches

  double nmll();
  double gcv();
  double loss(GPLoss loss);
  double optimal_tau(GPLoss loss);

  // Sign-based adaptive-step search in log hyperparameter space with
  // monotone acceptance; tau is refreshed in closed form every step.
  FitResult fit(GPLoss loss, int max_iters, bool shared_lengthscale = false);

  std::pair<double, double> posterior(const double* x);

  // Posterior distribution of the integral; requires a unit-integral
  // (SI/DSI product) kernel. With the NMLL-optimal tau the mean reduces to
  // the plain sample average.
  CubatureResult bayes_cubature();

  // Posterior cubature variance forecast at n_hat >= n points of the same
  // sequence: exact at powers of two, log-log interpolated between them.
  double projected_variance(uint64_t n_hat);

  void save(std::ostream& out) const;
  static FastGP load(std::istream& in);

 private:
  void ensure_factorization();
  void invalidate();
  std::vector<double> gradient(GPLoss loss);  // fast backend, analytic
  double kbar_sum(uint64_t n2) const;         // sum_{i<n2} K(x_i, x_0) / gamma

  SequenceHandle seq_;
  KernelSpec spec_;
  double nugget_;
  GPBackend backend_;
  double tau_ = 0.0;

  PointSet pts_;
  std::vector<double> y_;

  // fast-path caches; kuni_/kcomp_ depend only on the points (univariate
  // kernel components carry no tunable hyperparameters), so they survive
  // hyperparameter updates
  bool fresh_ = false;
  StructuredGram gram_;
  std::vector<cdouble> ytilde_;
  std::vector<double> kcol_;   // noiseless first Gram column
  std::vector<double> kuni_;   // per-dimension factors of the first column
  std::vector<double> kcomp_;  // adaptive-sum component values, 4 per factor
  uint64_t data_version_ = 0, factor_version_ = ~uint64_t(0), ytilde_version_ = ~uint64_t(0);
  // dense-path caches
  Mat chol_;

  // projected-variance cache: kbar_pow2_[q] = sum over first 2^q points,
  // valid for the hyperparameter version that built it
  std::vector<double> kbar_pow2_;
  uint64_t hyper_version_ = 0, kbar_version_ = ~uint64_t(0);
};

// ---------------------------------------------------------------------------
// Multitask GP with kernel R(l,l') Q(x,x'), R = G G^T + diag(t), over
// per-level sequences sharing the generating structure. Level sizes must be
// non-increasing powers of two.
class MultitaskGP {
 public:
  MultitaskGP(std::vector<SequenceHandle> seqs, KernelSpec q_spec, Mat task_rank,
              std::vector<double> task_diag, std::vector<double> nuggets,
              GPBackend backend = GPBackend::fast);

  void set_data(size_t level, const std::vector<double>& y);
  size_t levels() const { return seqs_.size(); }
  size_t n(size_t level) const { return y_[level].size(); }
  const std::vector<double>& tau() const { return tau_; }
  void set_tau(std::vector<double> tau);
  Mat task_covariance() const;  // R

  double nmll();
  double gcv();
  std::vector<double> optimal_tau(GPLoss loss);

  std::pair<double, double> posterior(size_t level, const double* x);

  struct MTCubature {
    std::vector<double> rho;        // posterior integral means per level
    Mat sigma;                      // posterior covariance of the integrals
    std::vector<double> weights;    // MSE-optimal combination weights
    double optimal_mse = 0.0;
  };
  MTCubature bayes_cubature(const std::vector<double>& chi);

  FitResult fit(GPLoss loss, int max_iters);  // finite-difference steps

 private:
  void ensure_factorization();
  void invalidate() { fresh_ = false; }
  std::vector<cdouble> transformed_residual() const;
  double quad_form(const DiagGrid& G, const std::vector<cdouble>& r) const;
  Mat corner_matrix(const DiagGrid& G) const;  // Pi or P

  std::vector<SequenceHandle> seqs_;
  KernelSpec qspec_;
  Mat gmat_;                  // L x s
  std::vector<double> tdiag_;
  std::vector<double> nuggets_;
  GPBackend backend_;

  std::vector<PointSet> pts_;
  std::vector<std::vector<double>> y_;
  std::vector<double> tau_;

  bool fresh_ = false;
  TransformKind tkind_ = TransformKind::fwht;
  BlockLambda lambda_;
  DiagGrid gamma_grid_;   // Lambda^{-1}
  DiagGrid upsilon_grid_; // Lambda^{-2} (built on demand)
  bool have_upsilon_ = false;
  double logdet_ = 0.0;
  Mat dense_chol_;        // dense path
};

}  // namespace qmcgp
