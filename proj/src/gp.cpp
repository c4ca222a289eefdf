#include "qmcgp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "qmcgp/fastxform.hpp"

namespace qmcgp {

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// SequenceHandle

PointSet SequenceHandle::points(uint64_t i0, uint64_t i1) const {
  if (kind == Kind::lattice) return lattice_points(lattice, i0, i1);
  return digital_net_points(dnet, i0, i1);
}

uint64_t SequenceHandle::max_points() const {
  if (kind == Kind::lattice) return uint64_t(1) << 53;
  return uint64_t(1) << dnet.matrices.m_max;
}

SequenceHandle SequenceHandle::make_lattice(LatticeConfig cfg) {
  cfg.validate();
  if (cfg.order != PointOrder::radical_inverse)
    throw std::invalid_argument("gp: lattice sequences must be in radical inverse order");
  SequenceHandle h;
  h.kind = Kind::lattice;
  h.lattice = std::move(cfg);
  return h;
}

SequenceHandle SequenceHandle::make_dnet(DigitalNetConfig cfg) {
  cfg.validate();
  if (cfg.order != PointOrder::radical_inverse)
    throw std::invalid_argument("gp: digital nets must be in radical inverse order");
  SequenceHandle h;
  h.kind = Kind::dnet;
  h.dnet = std::move(cfg);
  return h;
}

// ---------------------------------------------------------------------------
// FastGP

FastGP::FastGP(SequenceHandle seq, KernelSpec spec, double nugget, GPBackend backend)
    : seq_(std::move(seq)), spec_(std::move(spec)), nugget_(nugget), backend_(backend) {
  spec_.validate();
  if (nugget_ <= 0.0) nugget_ = 1e-8;  // noiseless floor
  if (spec_.d != seq_.dim()) throw std::invalid_argument("gp: kernel/sequence dimension mismatch");
  if (backend_ == GPBackend::fast) {
    PointSet probe = seq_.points(0, 1);
    if (!matched_pairing(probe.prov, spec_, nullptr))
      throw std::invalid_argument("gp: fast backend needs a matched point/kernel pairing");
  }
}

void FastGP::set_data(const std::vector<double>& y) {
  if (y.empty()) throw std::invalid_argument("gp: empty observations");
  if (backend_ == GPBackend::fast && !is_pow2(y.size()))
    throw std::invalid_argument("gp: fast backend needs n = 2^m observations");
  y_ = y;
  pts_ = seq_.points(0, y.size());
  ++data_version_;
  invalidate();
}

void FastGP::extend_data(const std::vector<double>& y2) {
  if (y_.empty()) {
    set_data(y2);
    return;
  }
  size_t n0 = y_.size();
  PointSet more = seq_.points(n0, n0 + y2.size());
  y_.insert(y_.end(), y2.begin(), y2.end());
  pts_.a.insert(pts_.a.end(), more.a.begin(), more.a.end());
  pts_.n += more.n;
  if (backend_ == GPBackend::fast && !is_pow2(y_.size()))
    throw std::invalid_argument("gp: fast backend needs n = 2^m observations");
  ++data_version_;
  invalidate();
}

void FastGP::set_hyperparameters(const KernelSpec& spec) {
  spec.validate();
  if (spec.d != seq_.dim()) throw std::invalid_argument("gp: kernel dimension mismatch");
  spec_ = spec;
  ++hyper_version_;
  invalidate();
}

void FastGP::invalidate() { fresh_ = false; }

void FastGP::ensure_factorization() {
  if (fresh_) return;
  if (y_.empty()) throw std::runtime_error("gp: no observations set");
  if (backend_ == GPBackend::fast) {
    size_t n = y_.size(), d = spec_.d;
    bool product = spec_.weights == WeightStructure::product &&
                   (spec_.is_si() || spec_.is_dsi());
    bool adaptive = spec_.family == KernelFamily::dsi_adaptive_sum;
    // univariate component values depend only on the points (gamma/eta/a
    // enter through the product wrapper), so refresh them on data changes only
    if (product && factor_version_ != data_version_) {
      const double* x0 = pts_.row(0);
      kuni_.resize(n * d);
      if (adaptive) kcomp_.resize(n * d * 4);
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d; ++j) {
          if (adaptive) {
            uint64_t z = to_digits53(pts_.at(i, j)) ^ to_digits53(x0[j]);
            int beta = first_one_digit(z);
            double t1 = beta ? std::ldexp(1.0, -beta) : 0.0;
            double* comp = &kcomp_[(i * d + j) * 4];
            comp[0] = 6.0 * (1.0 - 0.5 * t1);
            comp[1] = dsi_omega_delta(2, z);
            comp[2] = dsi_omega_delta(3, z);
            comp[3] = dsi_omega_delta(4, z);
          } else {
            kuni_[i * d + j] = kernel_univariate(spec_, j, pts_.at(i, j), x0[j]);
          }
        }
      factor_version_ = data_version_;
    }
    kcol_.resize(n);
    std::vector<double> col(n);
    if (product) {
      parallel_chunks(n, 8192, [&](size_t, size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) {
          double prod = spec_.gamma;
          for (size_t j = 0; j < d; ++j) {
            double k1;
            if (adaptive) {
              const double* comp = &kcomp_[(i * d + j) * 4];
              k1 = spec_.a[0] * comp[0] + spec_.a[1] * comp[1] + spec_.a[2] * comp[2] +
                   spec_.a[3] * comp[3];
              kuni_[i * d + j] = k1;
            } else {
              k1 = kuni_[i * d + j];
            }
            prod *= 1.0 + spec_.eta[j] * k1;
          }
          kcol_[i] = prod;
          col[i] = prod;
        }
      });
    } else {
      const double* x0 = pts_.row(0);
      for (size_t i = 0; i < n; ++i) {
        kcol_[i] = kernel_eval(spec_, pts_.row(i), x0);
        col[i] = kcol_[i];
      }
    }
    col[0] += nugget_;
    TransformKind kind;
    if (!matched_pairing(pts_.prov, spec_, &kind))
      throw std::invalid_argument("gp: point set and kernel are not a fast pairing");
    gram_.transform = kind;
    gram_.n = n;
    gram_.nugget = nugget_;
    double s = std::sqrt(double(n));
    if (kind == TransformKind::fwht) {
      fwht(col);  // the Hadamard pairing stays in real arithmetic
      gram_.lam.assign(n, 0.0);
      for (size_t i = 0; i < n; ++i) gram_.lam[i] = s * col[i];
    } else {
      gram_.lam = gram_forward(kind, col);
      for (auto& l : gram_.lam) l *= s;
    }
    if (ytilde_version_ != data_version_) {
      ytilde_ = gram_forward(gram_.transform, y_);
      ytilde_version_ = data_version_;
    }
  } else {
    size_t n = y_.size();
    Mat K(n, n);
    for (size_t i = 0; i < n; ++i) {
      for (size_t k = 0; k <= i; ++k) {
        double v = kernel_eval(spec_, pts_.row(i), pts_.row(k));
        K(i, k) = v;
        K(k, i) = v;
      }
      K(i, i) += nugget_;
    }
    chol_ = cholesky(std::move(K));
  }
  fresh_ = true;
}

double FastGP::nmll() {
  ensure_factorization();
  size_t n = y_.size();
  if (backend_ == GPBackend::fast) {
    double quad = 0.0, ld = 0.0;
    double rn = std::sqrt(double(n));
    for (size_t i = 0; i < n; ++i) {
      cdouble r = ytilde_[i];
      if (i == 0) r -= tau_ * rn;
      double lam = gram_.lam[i].real();
      if (lam <= 0.0) return kInf;
      quad += std::norm(r) / lam;
      ld += std::log(lam);
    }
    return quad + ld;
  }
  std::vector<double> r(n);
  for (size_t i = 0; i < n; ++i) r[i] = y_[i] - tau_;
  auto a = chol_solve(chol_, r);
  double quad = 0.0;
  for (size_t i = 0; i < n; ++i) quad += r[i] * a[i];
  return quad + chol_logdet(chol_);
}

double FastGP::gcv() {
  ensure_factorization();
  size_t n = y_.size();
  if (backend_ == GPBackend::fast) {
    double num = 0.0, tr = 0.0;
    double rn = std::sqrt(double(n));
    for (size_t i = 0; i < n; ++i) {
      cdouble r = ytilde_[i];
      if (i == 0) r -= tau_ * rn;
      double lam = gram_.lam[i].real();
      if (lam <= 0.0) return kInf;
      num += std::norm(r) / (lam * lam);
      tr += 1.0 / lam;
    }
    return num / (tr * tr);
  }
  std::vector<double> r(n);
  for (size_t i = 0; i < n; ++i) r[i] = y_[i] - tau_;
  auto a = chol_solve(chol_, r);
  double num = 0.0;
  for (size_t i = 0; i < n; ++i) num += a[i] * a[i];
  Mat inv = chol_inverse(chol_);
  double tr = 0.0;
  for (size_t i = 0; i < n; ++i) tr += inv(i, i);
  return num / (tr * tr);
}

double FastGP::loss(GPLoss loss) { return loss == GPLoss::nmll ? nmll() : gcv(); }

double FastGP::optimal_tau(GPLoss loss) {
  ensure_factorization();
  size_t n = y_.size();
  if (backend_ == GPBackend::fast) {
    // the all-ones vector is an eigenvector, so both losses share the optimum
    (void)loss;
    return ytilde_[0].real() / std::sqrt(double(n));
  }
  std::vector<double> ones(n, 1.0);
  auto k1 = chol_solve(chol_, ones);
  auto ky = chol_solve(chol_, y_);
  if (loss == GPLoss::gcv) {
    k1 = chol_solve(chol_, k1);
    ky = chol_solve(chol_, ky);
  }
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < n; ++i) {
    num += ky[i];
    den += k1[i];
  }
  return num / den;
}

std::pair<double, double> FastGP::posterior(const double* x) {
  ensure_factorization();
  size_t n = y_.size();
  std::vector<double> kvec(n);
  for (size_t i = 0; i < n; ++i) kvec[i] = kernel_eval(spec_, x, pts_.row(i));
  double kxx = kernel_eval(spec_, x, x);
  std::vector<double> r(n);
  for (size_t i = 0; i < n; ++i) r[i] = y_[i] - tau_;
  std::vector<double> a, b;
  if (backend_ == GPBackend::fast) {
    a = gram_solve(gram_, r);
    b = gram_solve(gram_, kvec);
  } else {
    a = chol_solve(chol_, r);
    b = chol_solve(chol_, kvec);
  }
  double mean = tau_, var = kxx;
  for (size_t i = 0; i < n; ++i) {
    mean += kvec[i] * a[i];
    var -= kvec[i] * b[i];
  }
  return {mean, var};
}

CubatureResult FastGP::bayes_cubature() {
  if (!(spec_.is_si() || spec_.is_dsi()))
    throw std::invalid_argument("bayes_cubature: kernel lacks closed-form integrals");
  if (spec_.has_derivatives())
    throw std::invalid_argument("bayes_cubature: derivative kernels not supported");
  ensure_factorization();
  size_t n = y_.size();
  // int K(., x) dx is a constant for DSI/SI product kernels; gamma for the
  // zero-integral families, gamma * prod(1 + 5 a_1 eta_j) for the adaptive sum
  std::vector<double> zeros(spec_.d, 0.0);
  double gamma = kernel_integral_x(spec_, zeros.data());
  double s_r, s_1;  // 1^T Ktilde^{-1} (y - tau), 1^T Ktilde^{-1} 1
  if (backend_ == GPBackend::fast) {
    double rn = std::sqrt(double(n));
    double lam0 = gram_.lam[0].real();
    s_r = rn * (ytilde_[0].real() - tau_ * rn) / lam0;
    s_1 = double(n) / lam0;
  } else {
    std::vector<double> r(n), ones(n, 1.0);
    for (size_t i = 0; i < n; ++i) r[i] = y_[i] - tau_;
    auto a = chol_solve(chol_, r);
    auto b = chol_solve(chol_, ones);
    s_r = s_1 = 0.0;
    for (size_t i = 0; i < n; ++i) {
      s_r += a[i];
      s_1 += b[i];
    }
  }
  CubatureResult res;
  res.mean = tau_ + gamma * s_r;
  res.variance = gamma - gamma * gamma * s_1;
  return res;
}

double FastGP::kbar_sum(uint64_t n2) const {
  // sum_{i < n2} K(x_i, x_0) / gamma over the extensible sequence
  PointSet pts = (n2 <= pts_.n) ? PointSet() : seq_.points(pts_.n, n2);
  std::vector<double> x0(pts_.row(0), pts_.row(0) + pts_.d);
  double s = 0.0;
  for (uint64_t i = 0; i < std::min<uint64_t>(n2, pts_.n); ++i)
    s += kernel_eval(spec_, pts_.row(i), x0.data());
  for (uint64_t i = pts_.n; i < n2; ++i) s += kernel_eval(spec_, pts.row(i - pts_.n), x0.data());
  return s / spec_.gamma;
}

double FastGP::projected_variance(uint64_t n_hat) {
  if (y_.empty()) throw std::runtime_error("gp: no observations set");
  if (n_hat < y_.size()) throw std::invalid_argument("projected_variance: n_hat < current n");
  if (kbar_version_ != hyper_version_) {
    kbar_pow2_.clear();
    kbar_version_ = hyper_version_;
  }
  std::vector<double> zeros(spec_.d, 0.0);
  double c_int = kernel_integral_x(spec_, zeros.data()) / spec_.gamma;
  auto vhat_pow2 = [&](int q) {
    while (int(kbar_pow2_.size()) <= q) {
      int qq = int(kbar_pow2_.size());
      kbar_pow2_.push_back(kbar_sum(uint64_t(1) << qq));
    }
    double nq = double(uint64_t(1) << q);
    double mean_k = (kbar_pow2_[q] + nugget_ / spec_.gamma) / nq;
    return spec_.gamma * c_int * (1.0 - c_int / mean_k);
  };
  double l2 = std::log2(double(n_hat));
  int p = int(std::floor(l2));
  if ((uint64_t(1) << p) == n_hat) return vhat_pow2(p);
  double vp = vhat_pow2(p), vp1 = vhat_pow2(p + 1);
  // log-log linear interpolation between the surrounding powers of two
  double ln = (p + 1) * std::log(vp) - p * std::log(vp1) + l2 * std::log(vp1 / vp);
  return std::exp(ln);
}

std::vector<double> FastGP::gradient(GPLoss loss) {
  ensure_factorization();
  size_t n = y_.size(), d = spec_.d;
  bool adaptive = spec_.family == KernelFamily::dsi_adaptive_sum;
  size_t nparam = 1 + d + (adaptive ? 4 : 0);

  // assemble the eigenvalue-space weight of the loss derivative, pull it
  // back through one adjoint transform, then dot with each derivative column
  double rn = std::sqrt(double(n));
  std::vector<double> w(n);
  {
    std::vector<double> rnorm(n), lam(n);
    for (size_t i = 0; i < n; ++i) {
      cdouble r = ytilde_[i];
      if (i == 0) r -= tau_ * rn;
      rnorm[i] = std::norm(r);
      lam[i] = gram_.lam[i].real();
    }
    if (loss == GPLoss::nmll) {
      for (size_t i = 0; i < n; ++i) w[i] = 1.0 / lam[i] - rnorm[i] / (lam[i] * lam[i]);
    } else {
      double trsum = 0.0, qsum = 0.0;
      for (size_t i = 0; i < n; ++i) {
        trsum += 1.0 / lam[i];
        qsum += rnorm[i] / (lam[i] * lam[i]);
      }
      for (size_t i = 0; i < n; ++i)
        w[i] = (-2.0 * rnorm[i] / (lam[i] * lam[i] * lam[i]) +
                2.0 * qsum / (trsum * lam[i] * lam[i])) /
               (trsum * trsum);
    }
  }
  // d(loss)/dcol = sqrt(n) Re(V-bar^T w); for the Hadamard pairing the
  // transform is its own adjoint, for the Fourier pairing Re(ifftbr(w))
  std::vector<double> u;
  if (gram_.transform == TransformKind::fwht) {
    u = w;
    fwht(u);
  } else {
    std::vector<cdouble> wc(w.begin(), w.end());
    ifftbr(wc);
    u.resize(n);
    for (size_t i = 0; i < n; ++i) u[i] = wc[i].real();
  }
  // fused accumulation of u . dK/dlog(theta_p) from the cached factors,
  // never materializing the derivative columns; chunk partials are summed
  // in index order so the result is deterministic
  std::vector<std::vector<double>> partial(4, std::vector<double>(nparam, 0.0));
  parallel_chunks(n, 8192, [&](size_t w, size_t b, size_t e) {
    std::vector<double> acc(nparam, 0.0);
    for (size_t i = b; i < e; ++i) {
      double uk = u[i] * kcol_[i];
      acc[0] += uk;  // d/dlog gamma
      for (size_t j = 0; j < d; ++j) {
        double ek = spec_.eta[j] * kuni_[i * d + j];
        double per = uk / (1.0 + ek);
        acc[1 + j] += per * ek;
        if (adaptive) {
          const double* comp = &kcomp_[(i * d + j) * 4];
          double fac = per * spec_.eta[j];
          acc[1 + d + 0] += fac * spec_.a[0] * comp[0];
          acc[1 + d + 1] += fac * spec_.a[1] * comp[1];
          acc[1 + d + 2] += fac * spec_.a[2] * comp[2];
          acc[1 + d + 3] += fac * spec_.a[3] * comp[3];
        }
      }
    }
    partial[w] = std::move(acc);
  });
  std::vector<double> grad(nparam, 0.0);
  for (const auto& acc : partial)
    for (size_t p = 0; p < nparam && p < acc.size(); ++p) grad[p] += acc[p];
  for (auto& g : grad) g *= rn;
  return grad;
}

FitResult FastGP::fit(GPLoss loss_kind, int max_iters, bool shared_lengthscale) {
  if (y_.empty()) throw std::runtime_error("gp: no observations set");
  size_t d = spec_.d;
  bool adaptive = spec_.family == KernelFamily::dsi_adaptive_sum;
  size_t nparam = 1 + d + (adaptive ? 4 : 0);

  auto get_params = [&]() {
    std::vector<double> p(nparam);
    p[0] = std::log(spec_.gamma);
    for (size_t j = 0; j < d; ++j) p[1 + j] = std::log(std::max(spec_.eta[j], 1e-12));
    if (adaptive)
      for (int m = 0; m < 4; ++m) p[1 + d + m] = std::log(std::max(spec_.a[m], 1e-12));
    return p;
  };
  auto apply_params = [&](const std::vector<double>& p) {
    KernelSpec s = spec_;
    s.gamma = std::exp(p[0]);
    for (size_t j = 0; j < d; ++j) s.eta[j] = std::exp(p[1 + j]);
    if (adaptive)
      for (int m = 0; m < 4; ++m) s.a[m] = std::exp(p[1 + d + m]);
    set_hyperparameters(s);
  };
  auto fd_gradient = [&](const std::vector<double>& p0, double f0) {
    std::vector<double> g(nparam, 0.0);
    const double h = 1e-5;
    for (size_t q = 0; q < nparam; ++q) {
      auto p = p0;
      p[q] += h;
      apply_params(p);
      tau_ = optimal_tau(loss_kind);
      g[q] = (loss(loss_kind) - f0) / h;
    }
    apply_params(p0);
    return g;
  };
  auto reduce_shared = [&](std::vector<double>& g) {
    if (!shared_lengthscale) return;
    double s = 0.0;
    for (size_t j = 0; j < d; ++j) s += g[1 + j];
    for (size_t j = 0; j < d; ++j) g[1 + j] = s;
  };

  std::vector<double> p = get_params();
  tau_ = optimal_tau(loss_kind);
  double cur = loss(loss_kind);
  FitResult result;
  result.initial_loss = cur;
  result.final_loss = cur;
  if (max_iters <= 0) return result;

  std::vector<double> grad = backend_ == GPBackend::fast ? gradient(loss_kind)
                                                         : fd_gradient(p, cur);
  reduce_shared(grad);
  std::vector<double> step(nparam, 0.1);

  for (int it = 0; it < max_iters; ++it) {
    std::vector<double> pnew = p;
    for (size_t q = 0; q < nparam; ++q)
      pnew[q] -= (grad[q] > 0 ? 1.0 : (grad[q] < 0 ? -1.0 : 0.0)) * step[q];
    apply_params(pnew);
    tau_ = optimal_tau(loss_kind);
    double cand = loss(loss_kind);
    ++result.iterations;
    if (cand <= cur && std::isfinite(cand)) {
      std::vector<double> gnew =
          backend_ == GPBackend::fast ? gradient(loss_kind) : fd_gradient(pnew, cand);
      reduce_shared(gnew);
      for (size_t q = 0; q < nparam; ++q) {
        if (gnew[q] * grad[q] > 0)
          step[q] = std::min(step[q] * 1.2, 1.0);
        else
          step[q] = std::max(step[q] * 0.5, 1e-8);
      }
      p = pnew;
      grad = gnew;
      cur = cand;
    } else {
      apply_params(p);
      tau_ = optimal_tau(loss_kind);
      for (auto& s : step) s *= 0.5;
    }
    double mx = 0.0;
    for (double s : step) mx = std::max(mx, s);
    if (mx < 1e-7) break;
  }
  result.final_loss = cur;
  return result;
}

void FastGP::save(std::ostream& out) const {
  out.precision(17);
  out << "qmcgp-gp 1\n";
  if (seq_.kind == SequenceHandle::Kind::lattice) {
    out << "seq lattice " << seq_.lattice.g.size() << " " << seq_.lattice.base << "\n";
    for (auto g : seq_.lattice.g) out << g << " ";
    out << "\n" << (seq_.lattice.shift.empty() ? 0 : 1) << "\n";
    for (auto s : seq_.lattice.shift) out << s << " ";
    out << "\n";
  } else {
    const auto& cfg = seq_.dnet;
    if (cfg.rand == NetRand::nus)
      throw std::invalid_argument("gp save: scrambled-tree sequences are not serializable");
    out << "seq dnet " << int(cfg.rand) << " " << cfg.seed << " " << cfg.interlace_order << "\n";
    save_dnet_file(out, cfg.matrices);
    out << cfg.shift.size() << "\n";
    for (auto s : cfg.shift) out << s << " ";
    out << "\n";
  }
  out << "kernel " << int(spec_.family) << " " << spec_.d << " " << spec_.gamma << "\n";
  for (auto v : spec_.alpha) out << v << " ";
  out << "\n";
  for (auto v : spec_.eta) out << v << " ";
  out << "\n";
  for (auto v : spec_.a) out << v << " ";
  out << "\n";
  out << "state " << nugget_ << " " << tau_ << " " << y_.size() << "\n";
  for (auto v : y_) out << v << " ";
  out << "\n";
}

FastGP FastGP::load(std::istream& in) {
  std::string magic;
  int version;
  in >> magic >> version;
  if (magic != "qmcgp-gp" || version != 1) throw std::runtime_error("gp load: bad header");
  std::string tok, kind;
  in >> tok >> kind;
  SequenceHandle seq;
  if (kind == "lattice") {
    size_t d;
    LatticeConfig cfg;
    in >> d >> cfg.base;
    cfg.g.resize(d);
    for (auto& g : cfg.g) in >> g;
    int has_shift;
    in >> has_shift;
    if (has_shift) {
      cfg.shift.resize(d);
      for (auto& s : cfg.shift) in >> s;
    }
    seq = SequenceHandle::make_lattice(cfg);
  } else if (kind == "dnet") {
    DigitalNetConfig cfg;
    int rand;
    in >> rand >> cfg.seed >> cfg.interlace_order;
    cfg.rand = NetRand(rand);
    in.ignore(1, '\n');
    cfg.matrices = load_dnet_file(in, "<model>");
    size_t ns;
    in >> ns;
    cfg.shift.resize(ns);
    for (auto& s : cfg.shift) in >> s;
    seq = SequenceHandle::make_dnet(cfg);
  } else {
    throw std::runtime_error("gp load: unknown sequence kind");
  }
  int family;
  size_t d;
  double gamma;
  in >> tok >> family >> d >> gamma;
  KernelSpec spec;
  spec.family = KernelFamily(family);
  spec.d = d;
  spec.gamma = gamma;
  spec.alpha.resize(d);
  spec.eta.resize(d);
  for (auto& v : spec.alpha) in >> v;
  for (auto& v : spec.eta) in >> v;
  for (auto& v : spec.a) in >> v;
  double nugget, tau;
  size_t n;
  in >> tok >> nugget >> tau >> n;
  std::vector<double> y(n);
  for (auto& v : y) in >> v;
  if (!in) throw std::runtime_error("gp load: truncated model file");
  FastGP gp(std::move(seq), std::move(spec), nugget, GPBackend::fast);
  gp.set_data(y);
  gp.set_tau(tau);
  return gp;
}

// ---------------------------------------------------------------------------
// MultitaskGP

MultitaskGP::MultitaskGP(std::vector<SequenceHandle> seqs, KernelSpec q_spec, Mat task_rank,
                         std::vector<double> task_diag, std::vector<double> nuggets,
                         GPBackend backend)
    : seqs_(std::move(seqs)),
      qspec_(std::move(q_spec)),
      gmat_(std::move(task_rank)),
      tdiag_(std::move(task_diag)),
      nuggets_(std::move(nuggets)),
      backend_(backend) {
  size_t L = seqs_.size();
  if (L == 0) throw std::invalid_argument("mtgp: need at least one level");
  qspec_.validate();
  if (gmat_.rows != L || tdiag_.size() != L || nuggets_.size() != L)
    throw std::invalid_argument("mtgp: task parameter sizes must match level count");
  for (double t : tdiag_)
    if (t <= 0.0) throw std::invalid_argument("mtgp: task diagonal must be positive");
  pts_.resize(L);
  y_.resize(L);
  tau_.assign(L, 0.0);
  if (backend_ == GPBackend::fast) {
    PointSet probe = seqs_[0].points(0, 1);
    if (!matched_pairing(probe.prov, qspec_, &tkind_))
      throw std::invalid_argument("mtgp: fast backend needs a matched point/kernel pairing");
  }
}

Mat MultitaskGP::task_covariance() const {
  size_t L = seqs_.size();
  Mat R(L, L);
  for (size_t l = 0; l < L; ++l)
    for (size_t lp = 0; lp < L; ++lp) {
      double v = (l == lp) ? tdiag_[l] : 0.0;
      for (size_t s = 0; s < gmat_.cols; ++s) v += gmat_(l, s) * gmat_(lp, s);
      R(l, lp) = v;
    }
  return R;
}

void MultitaskGP::set_data(size_t level, const std::vector<double>& y) {
  if (level >= seqs_.size()) throw std::invalid_argument("mtgp: bad level");
  if (backend_ == GPBackend::fast && !is_pow2(y.size()))
    throw std::invalid_argument("mtgp: fast backend needs n = 2^m per level");
  y_[level] = y;
  pts_[level] = seqs_[level].points(0, y.size());
  invalidate();
}

void MultitaskGP::set_tau(std::vector<double> tau) {
  if (tau.size() != seqs_.size()) throw std::invalid_argument("mtgp: tau size mismatch");
  tau_ = std::move(tau);
}

void MultitaskGP::ensure_factorization() {
  if (fresh_) return;
  size_t L = seqs_.size();
  for (size_t l = 0; l < L; ++l)
    if (y_[l].empty()) throw std::runtime_error("mtgp: level missing observations");
  for (size_t l = 0; l + 1 < L; ++l)
    if (y_[l].size() < y_[l + 1].size())
      throw std::invalid_argument("mtgp: level sizes must be non-increasing");
  Mat R = task_covariance();

  if (backend_ == GPBackend::fast) {
    lambda_ = BlockLambda();
    lambda_.transform = tkind_;
    lambda_.n.resize(L);
    for (size_t l = 0; l < L; ++l) lambda_.n[l] = y_[l].size();
    lambda_.blocks.assign(L * (L + 1) / 2, {});
    for (size_t l = 0; l < L; ++l) {
      for (size_t lp = l; lp < L; ++lp) {
        size_t nl = lambda_.n[l];
        std::vector<double> col(nl);
        const double* x0 = pts_[lp].row(0);
        for (size_t i = 0; i < nl; ++i)
          col[i] = R(l, lp) * kernel_eval(qspec_, pts_[l].row(i), x0);
        if (l == lp) col[0] += nuggets_[l];
        auto t = gram_forward(tkind_, col);
        double s = std::sqrt(double(lambda_.n[lp]));
        for (auto& v : t) v *= s;
        lambda_.blocks[lambda_.pair_index(l, lp)] = std::move(t);
      }
    }
    auto [grid, logdet] = block_inverse_det(lambda_);
    gamma_grid_ = std::move(grid);
    logdet_ = logdet;
    have_upsilon_ = false;
  } else {
    size_t N = 0;
    std::vector<size_t> off(L + 1, 0);
    for (size_t l = 0; l < L; ++l) off[l + 1] = off[l] + y_[l].size();
    N = off[L];
    Mat K(N, N);
    for (size_t l = 0; l < L; ++l)
      for (size_t lp = 0; lp < L; ++lp)
        for (size_t i = 0; i < y_[l].size(); ++i)
          for (size_t k = 0; k < y_[lp].size(); ++k)
            K(off[l] + i, off[lp] + k) =
                R(l, lp) * kernel_eval(qspec_, pts_[l].row(i), pts_[lp].row(k));
    for (size_t l = 0; l < L; ++l)
      for (size_t i = 0; i < y_[l].size(); ++i) K(off[l] + i, off[l] + i) += nuggets_[l];
    dense_chol_ = cholesky(std::move(K));
  }
  fresh_ = true;
}

std::vector<cdouble> MultitaskGP::transformed_residual() const {
  size_t L = seqs_.size();
  std::vector<cdouble> out;
  for (size_t l = 0; l < L; ++l) {
    std::vector<double> r(y_[l].size());
    for (size_t i = 0; i < r.size(); ++i) r[i] = y_[l][i] - tau_[l];
    auto t = gram_forward(tkind_, r);
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

double MultitaskGP::quad_form(const DiagGrid& G, const std::vector<cdouble>& r) const {
  auto w = grid_apply(G, lambda_.n, r);
  double s = 0.0;
  for (size_t i = 0; i < r.size(); ++i) s += (std::conj(r[i]) * w[i]).real();
  return s;
}

double MultitaskGP::nmll() {
  ensure_factorization();
  if (backend_ == GPBackend::fast) return quad_form(gamma_grid_, transformed_residual()) + logdet_;
  size_t L = seqs_.size(), N = dense_chol_.rows;
  std::vector<double> r;
  r.reserve(N);
  for (size_t l = 0; l < L; ++l)
    for (double v : y_[l]) r.push_back(v - tau_[l]);
  auto a = chol_solve(dense_chol_, r);
  double quad = 0.0;
  for (size_t i = 0; i < N; ++i) quad += r[i] * a[i];
  return quad + chol_logdet(dense_chol_);
}

double MultitaskGP::gcv() {
  ensure_factorization();
  if (backend_ == GPBackend::fast) {
    if (!have_upsilon_) {
      upsilon_grid_ = grid_matmul(gamma_grid_, gamma_grid_);
      have_upsilon_ = true;
    }
    double tr = 0.0;
    for (size_t i = 0; i < gamma_grid_.B; ++i) {
      const auto& c = gamma_grid_.at(i, i);
      for (const auto& v : c) tr += v.real();
    }
    return quad_form(upsilon_grid_, transformed_residual()) / (tr * tr);
  }
  size_t L = seqs_.size(), N = dense_chol_.rows;
  std::vector<double> r;
  r.reserve(N);
  for (size_t l = 0; l < L; ++l)
    for (double v : y_[l]) r.push_back(v - tau_[l]);
  auto a = chol_solve(dense_chol_, r);
  double num = 0.0;
  for (size_t i = 0; i < N; ++i) num += a[i] * a[i];
  Mat inv = chol_inverse(dense_chol_);
  double tr = 0.0;
  for (size_t i = 0; i < N; ++i) tr += inv(i, i);
  return num / (tr * tr);
}

Mat MultitaskGP::corner_matrix(const DiagGrid& G) const {
  size_t L = seqs_.size();
  Mat M(L, L);
  std::vector<size_t> cell_off(L, 0);
  for (size_t l = 1; l < L; ++l) cell_off[l] = cell_off[l - 1] + lambda_.n[l - 1] / G.g;
  for (size_t l = 0; l < L; ++l)
    for (size_t lp = 0; lp < L; ++lp) {
      const auto& c = G.at(cell_off[l], cell_off[lp]);
      double v = c.empty() ? 0.0 : c[0].real();
      M(l, lp) = std::sqrt(double(lambda_.n[l]) * double(lambda_.n[lp])) * v;
    }
  return M;
}

std::vector<double> MultitaskGP::optimal_tau(GPLoss loss) {
  ensure_factorization();
  size_t L = seqs_.size();
  if (backend_ == GPBackend::fast) {
    std::vector<cdouble> yt;
    for (size_t l = 0; l < L; ++l) {
      auto t = gram_forward(tkind_, y_[l]);
      yt.insert(yt.end(), t.begin(), t.end());
    }
    if (loss == GPLoss::gcv && !have_upsilon_) {
      upsilon_grid_ = grid_matmul(gamma_grid_, gamma_grid_);
      have_upsilon_ = true;
    }
    const DiagGrid& G = loss == GPLoss::nmll ? gamma_grid_ : upsilon_grid_;
    auto w = grid_apply(G, lambda_.n, yt);
    Mat M = corner_matrix(G);
    std::vector<double> rhs(L);
    std::vector<size_t> off(L, 0);
    for (size_t l = 1; l < L; ++l) off[l] = off[l - 1] + lambda_.n[l - 1];
    for (size_t l = 0; l < L; ++l) rhs[l] = std::sqrt(double(lambda_.n[l])) * w[off[l]].real();
    return solve_dense(M, rhs);
  }
  // dense path: solve the L x L system with entries 1^T A_{l,lp} 1
  std::vector<size_t> off(L + 1, 0);
  for (size_t l = 0; l < L; ++l) off[l + 1] = off[l] + y_[l].size();
  size_t N = off[L];
  Mat X(N, L);
  std::vector<double> col(N);
  for (size_t l = 0; l < L; ++l) {
    col.assign(N, 0.0);
    for (size_t i = off[l]; i < off[l + 1]; ++i) col[i] = 1.0;
    auto s = chol_solve(dense_chol_, col);
    if (loss == GPLoss::gcv) s = chol_solve(dense_chol_, s);
    for (size_t i = 0; i < N; ++i) X(i, l) = s[i];
  }
  Mat M(L, L);
  std::vector<double> rhs(L, 0.0);
  std::vector<double> ystack;
  ystack.reserve(N);
  for (size_t l = 0; l < L; ++l) ystack.insert(ystack.end(), y_[l].begin(), y_[l].end());
  for (size_t l = 0; l < L; ++l) {
    for (size_t lp = 0; lp < L; ++lp) {
      double v = 0.0;
      for (size_t i = off[l]; i < off[l + 1]; ++i) v += X(i, lp);
      M(l, lp) = v;
    }
    for (size_t i = 0; i < N; ++i) rhs[l] += X(i, l) * ystack[i];
  }
  return solve_dense(M, rhs);
}

std::pair<double, double> MultitaskGP::posterior(size_t level, const double* x) {
  ensure_factorization();
  size_t L = seqs_.size();
  Mat R = task_covariance();
  std::vector<size_t> off(L + 1, 0);
  for (size_t l = 0; l < L; ++l) off[l + 1] = off[l] + y_[l].size();
  size_t N = off[L];
  std::vector<double> kvec(N), r(N);
  for (size_t lp = 0; lp < L; ++lp)
    for (size_t i = 0; i < y_[lp].size(); ++i) {
      kvec[off[lp] + i] = R(level, lp) * kernel_eval(qspec_, x, pts_[lp].row(i));
      r[off[lp] + i] = y_[lp][i] - tau_[lp];
    }
  double kxx = R(level, level) * kernel_eval(qspec_, x, x);
  std::vector<double> a(N), b(N);
  if (backend_ == GPBackend::fast) {
    auto solve_via_grid = [&](const std::vector<double>& v) {
      std::vector<cdouble> t;
      for (size_t l = 0; l < L; ++l) {
        std::vector<double> seg(v.begin() + off[l], v.begin() + off[l + 1]);
        auto tt = gram_forward(tkind_, seg);
        t.insert(t.end(), tt.begin(), tt.end());
      }
      auto w = grid_apply(gamma_grid_, lambda_.n, t);
      std::vector<double> res(N);
      for (size_t l = 0; l < L; ++l) {
        std::vector<cdouble> seg(w.begin() + off[l], w.begin() + off[l + 1]);
        auto back = gram_inverse_real(tkind_, std::move(seg));
        std::copy(back.begin(), back.end(), res.begin() + off[l]);
      }
      return res;
    };
    a = solve_via_grid(r);
    b = solve_via_grid(kvec);
  } else {
    a = chol_solve(dense_chol_, r);
    b = chol_solve(dense_chol_, kvec);
  }
  double mean = tau_[level], var = kxx;
  for (size_t i = 0; i < N; ++i) {
    mean += kvec[i] * a[i];
    var -= kvec[i] * b[i];
  }
  return {mean, var};
}

MultitaskGP::MTCubature MultitaskGP::bayes_cubature(const std::vector<double>& chi) {
  if (!(qspec_.is_si() || qspec_.is_dsi()))
    throw std::invalid_argument("mtgp cubature: kernel lacks closed-form integrals");
  ensure_factorization();
  size_t L = seqs_.size();
  if (chi.size() != L) throw std::invalid_argument("mtgp cubature: chi size mismatch");
  Mat R = task_covariance();
  std::vector<double> zeros(qspec_.d, 0.0);
  double gamma = kernel_integral_x(qspec_, zeros.data());

  std::vector<size_t> off(L + 1, 0);
  for (size_t l = 0; l < L; ++l) off[l + 1] = off[l] + y_[l].size();
  size_t N = off[L];

  // ones_sums[lp] = 1^T [Ktilde^{-1} (y - M)]_lp ; Pi = T^T A T scaled
  std::vector<double> ones_sums(L, 0.0);
  Mat Pi(L, L);
  if (backend_ == GPBackend::fast) {
    auto w = grid_apply(gamma_grid_, lambda_.n, transformed_residual());
    for (size_t l = 0; l < L; ++l)
      ones_sums[l] = std::sqrt(double(lambda_.n[l])) * w[off[l]].real();
    Pi = corner_matrix(gamma_grid_);
  } else {
    std::vector<double> r(N);
    for (size_t l = 0; l < L; ++l)
      for (size_t i = 0; i < y_[l].size(); ++i) r[off[l] + i] = y_[l][i] - tau_[l];
    auto a = chol_solve(dense_chol_, r);
    for (size_t l = 0; l < L; ++l)
      for (size_t i = off[l]; i < off[l + 1]; ++i) ones_sums[l] += a[i];
    std::vector<double> col(N);
    for (size_t l = 0; l < L; ++l) {
      col.assign(N, 0.0);
      for (size_t i = off[l]; i < off[l + 1]; ++i) col[i] = 1.0;
      auto s = chol_solve(dense_chol_, col);
      for (size_t lp = 0; lp < L; ++lp) {
        double v = 0.0;
        for (size_t i = off[lp]; i < off[lp + 1]; ++i) v += s[i];
        Pi(lp, l) = v;
      }
    }
  }

  MTCubature res;
  res.rho.assign(L, 0.0);
  for (size_t l = 0; l < L; ++l) {
    double v = tau_[l];
    for (size_t lp = 0; lp < L; ++lp) v += gamma * R(lp, l) * ones_sums[lp];
    res.rho[l] = v;
  }
  // Sigma = gamma R - gamma^2 R Pi R
  Mat RP = matmul(R, Pi);
  Mat RPR = matmul(RP, R);
  res.sigma = Mat(L, L);
  for (size_t l = 0; l < L; ++l)
    for (size_t lp = 0; lp < L; ++lp)
      res.sigma(l, lp) = gamma * R(l, lp) - gamma * gamma * RPR(l, lp);

  // optimal weights (rho^T chi)(Sigma + rho rho^T)^{-1} rho
  Mat Srr = res.sigma;
  for (size_t l = 0; l < L; ++l)
    for (size_t lp = 0; lp < L; ++lp) Srr(l, lp) += res.rho[l] * res.rho[lp];
  double rtc = 0.0;
  for (size_t l = 0; l < L; ++l) rtc += res.rho[l] * chi[l];
  auto sol = solve_dense(Srr, res.rho);
  res.weights.assign(L, 0.0);
  double rtw = 0.0;
  for (size_t l = 0; l < L; ++l) {
    res.weights[l] = rtc * sol[l];
    rtw += res.rho[l] * sol[l];
  }
  res.optimal_mse = rtc * rtc * (1.0 - rtw);
  return res;
}

FitResult MultitaskGP::fit(GPLoss loss_kind, int max_iters) {
  ensure_factorization();
  size_t L = seqs_.size(), d = qspec_.d;
  bool adaptive = qspec_.family == KernelFamily::dsi_adaptive_sum;
  size_t nparam = 1 + d + L + (adaptive ? 4 : 0);

  auto get = [&]() {
    std::vector<double> p;
    p.push_back(std::log(qspec_.gamma));
    for (size_t j = 0; j < d; ++j) p.push_back(std::log(std::max(qspec_.eta[j], 1e-12)));
    for (size_t l = 0; l < L; ++l) p.push_back(std::log(tdiag_[l]));
    if (adaptive)
      for (int m = 0; m < 4; ++m) p.push_back(std::log(std::max(qspec_.a[m], 1e-12)));
    return p;
  };
  auto apply = [&](const std::vector<double>& p) {
    size_t q = 0;
    qspec_.gamma = std::exp(p[q++]);
    for (size_t j = 0; j < d; ++j) qspec_.eta[j] = std::exp(p[q++]);
    for (size_t l = 0; l < L; ++l) tdiag_[l] = std::exp(p[q++]);
    if (adaptive)
      for (int m = 0; m < 4; ++m) qspec_.a[m] = std::exp(p[q++]);
    invalidate();
  };
  auto eval = [&]() {
    ensure_factorization();
    tau_ = optimal_tau(loss_kind);
    return loss_kind == GPLoss::nmll ? nmll() : gcv();
  };

  std::vector<double> p = get();
  double cur = eval();
  FitResult res;
  res.initial_loss = res.final_loss = cur;
  std::vector<double> step(nparam, 0.1);
  const double h = 1e-4;
  for (int it = 0; it < max_iters; ++it) {
    std::vector<double> g(nparam);
    for (size_t q = 0; q < nparam; ++q) {
      auto pp = p;
      pp[q] += h;
      apply(pp);
      g[q] = (eval() - cur) / h;
    }
    std::vector<double> pnew = p;
    for (size_t q = 0; q < nparam; ++q)
      pnew[q] -= (g[q] > 0 ? 1.0 : (g[q] < 0 ? -1.0 : 0.0)) * step[q];
    apply(pnew);
    double cand = eval();
    ++res.iterations;
    if (cand <= cur && std::isfinite(cand)) {
      p = pnew;
      cur = cand;
      for (auto& s : step) s = std::min(s * 1.2, 1.0);
    } else {
      apply(p);
      cur = eval();
      for (auto& s : step) s *= 0.5;
    }
    double mx = 0.0;
    for (double s : step) mx = std::max(mx, s);
    if (mx < 1e-6) break;
  }
  res.final_loss = cur;
  return res;
}

}  // namespace qmcgp
