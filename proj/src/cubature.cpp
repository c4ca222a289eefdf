#include "qmcgp/cubature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qmcgp/stats.hpp"

namespace qmcgp {

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Transforms

size_t MeasureTransform::dim() const {
  return kind == Kind::uniform ? lower.size() : mean.size();
}

MeasureTransform MeasureTransform::uniform(std::vector<double> lower, std::vector<double> upper) {
  if (lower.size() != upper.size()) throw std::invalid_argument("transform: bound size mismatch");
  for (size_t j = 0; j < lower.size(); ++j)
    if (upper[j] < lower[j]) throw std::invalid_argument("transform: upper < lower");
  MeasureTransform t;
  t.kind = Kind::uniform;
  t.lower = std::move(lower);
  t.upper = std::move(upper);
  return t;
}

MeasureTransform MeasureTransform::gaussian(std::vector<double> mean, const Mat& covariance,
                                            Decomposition decomp) {
  size_t d = mean.size();
  if (covariance.rows != d || covariance.cols != d)
    throw std::invalid_argument("transform: covariance shape mismatch");
  MeasureTransform t;
  t.kind = Kind::gaussian;
  t.decomp = decomp;
  t.mean = std::move(mean);
  if (decomp == Decomposition::cholesky) {
    t.factor = cholesky(covariance);
  } else {
    std::vector<double> evals;
    Mat V;
    jacobi_eigh(covariance, evals, V);
    // columns ordered by decreasing eigenvalue
    t.factor = Mat(d, d);
    for (size_t k = 0; k < d; ++k) {
      double lam = evals[d - 1 - k];
      if (lam < -1e-10) throw std::invalid_argument("transform: covariance not PSD");
      double s = std::sqrt(std::max(lam, 0.0));
      for (size_t i = 0; i < d; ++i) t.factor(i, k) = V(i, d - 1 - k) * s;
    }
  }
  return t;
}

MeasureTransform MeasureTransform::brownian(const std::vector<double>& times, double b0,
                                            double drift, double sigma2, Decomposition decomp) {
  size_t d = times.size();
  for (size_t j = 1; j < d; ++j)
    if (times[j] <= times[j - 1])
      throw std::invalid_argument("transform: times must be strictly increasing");
  if (times.empty() || times[0] <= 0.0)
    throw std::invalid_argument("transform: times must be positive");
  Mat cov(d, d);
  for (size_t j = 0; j < d; ++j)
    for (size_t k = 0; k < d; ++k) cov(j, k) = sigma2 * std::min(times[j], times[k]);
  std::vector<double> mean(d);
  for (size_t j = 0; j < d; ++j) mean[j] = b0 + drift * times[j];
  MeasureTransform t = gaussian(std::move(mean), cov, decomp);
  t.kind = Kind::brownian;
  return t;
}

void transform_row(const MeasureTransform& t, const double* x, double* out) {
  size_t d = t.dim();
  if (t.kind == MeasureTransform::Kind::uniform) {
    for (size_t j = 0; j < d; ++j) out[j] = t.lower[j] + (t.upper[j] - t.lower[j]) * x[j];
    return;
  }
  double z[1024];
  std::vector<double> zbuf;
  double* zp = d <= 1024 ? z : (zbuf.resize(d), zbuf.data());
  for (size_t j = 0; j < d; ++j) {
    if (x[j] <= 0.0 || x[j] >= 1.0)
      throw std::domain_error(
          "transform: coordinate at 0 or 1 under a Gaussian map; use a randomized sequence");
    zp[j] = norm_ppf(x[j]);
  }
  for (size_t i = 0; i < d; ++i) {
    double s = t.mean[i];
    const double* row = &t.factor.a[i * d];
    for (size_t j = 0; j < d; ++j) s += row[j] * zp[j];
    out[i] = s;
  }
}

Mat transform_points(const PointSet& pts, const MeasureTransform& t) {
  if (pts.d != t.dim()) throw std::invalid_argument("transform: dimension mismatch");
  Mat out(pts.n, pts.d);
  for (size_t i = 0; i < pts.n; ++i) transform_row(t, pts.row(i), &out.a[i * pts.d]);
  return out;
}

Mat brownian_pca_factor_equispaced(size_t d) {
  Mat A(d, d);
  double scale = 2.0 / std::sqrt(2.0 * d + 1.0);
  for (size_t k = 0; k < d; ++k) {
    double theta = (2.0 * k + 1.0) * M_PI / (2.0 * d + 1.0);
    double lam = 1.0 / (4.0 * d * std::sin(theta / 2.0) * std::sin(theta / 2.0));
    double s = std::sqrt(lam) * scale;
    for (size_t i = 0; i < d; ++i) A(i, k) = s * std::sin((i + 1.0) * theta);
  }
  return A;
}

// ---------------------------------------------------------------------------
// Bounds

Interval clt_bounds(uint64_t n, double mean, double unbiased_variance, double alpha,
                    double inflation) {
  if (n < 2) throw std::invalid_argument("clt_bounds: need n >= 2");
  double hw = inflation * norm_ppf(1.0 - alpha / 2.0) *
              std::sqrt(std::max(unbiased_variance, 0.0) / double(n));
  return {mean - hw, mean + hw};
}

Interval student_t_bounds(const std::vector<double>& replicate_means, double alpha,
                          double inflation) {
  size_t R = replicate_means.size();
  if (R < 2) throw std::invalid_argument("student_t_bounds: need R >= 2 replicates");
  double mu = 0.0;
  for (double m : replicate_means) mu += m;
  mu /= double(R);
  double var = 0.0;
  for (double m : replicate_means) var += (m - mu) * (m - mu);
  var /= double(R - 1);
  double hw = inflation * student_t_ppf(1.0 - alpha / 2.0, int(R) - 1) * std::sqrt(var / double(R));
  return {mu - hw, mu + hw};
}

// ---------------------------------------------------------------------------
// Interval arithmetic

Interval iv_add(Interval a, Interval b) { return {a.lo + b.lo, a.hi + b.hi}; }
Interval iv_sub(Interval a, Interval b) { return {a.lo - b.hi, a.hi - b.lo}; }

namespace {
// endpoint product with the 0 * inf = 0 convention
double ep(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b;
}
}  // namespace

Interval iv_mul(Interval a, Interval b) {
  double p1 = ep(a.lo, b.lo), p2 = ep(a.lo, b.hi), p3 = ep(a.hi, b.lo), p4 = ep(a.hi, b.hi);
  return {std::min(std::min(p1, p2), std::min(p3, p4)),
          std::max(std::max(p1, p2), std::max(p3, p4))};
}

Interval iv_div(Interval a, Interval b) {
  if (b.lo <= 0.0 && b.hi >= 0.0) return {-kInf, kInf};
  double p1 = a.lo / b.lo, p2 = a.lo / b.hi, p3 = a.hi / b.lo, p4 = a.hi / b.hi;
  return {std::min(std::min(p1, p2), std::min(p3, p4)),
          std::max(std::max(p1, p2), std::max(p3, p4))};
}

Interval iv_min(Interval a, Interval b) { return {std::min(a.lo, b.lo), std::min(a.hi, b.hi)}; }
Interval iv_max(Interval a, Interval b) { return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)}; }

// ---------------------------------------------------------------------------
// Optimal estimate and stopping

std::pair<double, bool> optimal_estimate_and_stop(double s_lo, double s_hi,
                                                  const std::function<double(double)>& h) {
  double hl = h(s_lo), hh = h(s_hi);
  double s_hat = 0.5 * (s_lo + s_hi + hl - hh);
  bool stop = (s_hi - s_lo) <= (hl + hh);
  if (!std::isfinite(s_lo) || !std::isfinite(s_hi)) {
    s_hat = std::isfinite(s_lo) ? s_lo : (std::isfinite(s_hi) ? s_hi : 0.0);
    stop = false;
  }
  return {s_hat, stop};
}

std::vector<double> split_uncertainty(
    const std::vector<double>& alpha_s,
    const std::function<void(const std::vector<uint8_t>&, std::vector<uint8_t>&)>& dependency,
    size_t d_mu) {
  size_t d_s = alpha_s.size();
  std::vector<double> alpha_mu(d_mu, 0.0);
  std::vector<int> owner(d_mu, -1);
  std::vector<uint8_t> probe(d_s, 0), flags(d_mu, 0);
  std::vector<std::vector<size_t>> deps(d_s);
  for (size_t l = 0; l < d_s; ++l) {
    std::fill(probe.begin(), probe.end(), 0);
    probe[l] = 1;
    std::fill(flags.begin(), flags.end(), 0);
    dependency(probe, flags);
    for (size_t k = 0; k < d_mu; ++k) {
      if (!flags[k]) continue;
      if (owner[k] >= 0)
        throw std::invalid_argument("split_uncertainty: mean index belongs to multiple QOIs");
      owner[k] = int(l);
      deps[l].push_back(k);
    }
  }
  for (size_t k = 0; k < d_mu; ++k)
    if (owner[k] < 0) throw std::invalid_argument("split_uncertainty: orphaned mean index");
  for (size_t l = 0; l < d_s; ++l) {
    double share = alpha_s[l] / double(deps[l].size());
    for (size_t k : deps[l]) alpha_mu[k] = share;
  }
  return alpha_mu;
}

// ---------------------------------------------------------------------------
// Adaptive array-QOI engine

ArrayQoiProblem ArrayQoiProblem::identity(
    size_t dim, size_t d, std::function<void(const double*, const uint8_t*, double*)> f,
    ErrorMetric tol, double alpha) {
  ArrayQoiProblem p;
  p.dim = dim;
  p.d_mu = p.d_s = d;
  p.integrand = std::move(f);
  p.propagate = [d](const std::vector<Interval>& mu, std::vector<Interval>& s) {
    for (size_t k = 0; k < d; ++k) s[k] = mu[k];
  };
  p.dependency = [d](const std::vector<uint8_t>& sf, std::vector<uint8_t>& mf) {
    for (size_t k = 0; k < d; ++k) mf[k] = sf[k];
  };
  p.tolerance.assign(d, tol);
  p.alpha_s.assign(d, alpha);
  return p;
}

namespace {

struct ReplicateStream {
  // one randomized LD sequence (or the IID stream)
  std::function<PointSet(uint64_t, uint64_t)> gen;
};

std::vector<ReplicateStream> make_streams(const ArrayQoiOptions& opt, size_t dim) {
  std::vector<ReplicateStream> streams;
  if (opt.method == BoundMethod::clt_iid) {
    uint64_t seed = opt.seed;
    streams.push_back({[seed, dim](uint64_t i0, uint64_t i1) {
      // a deterministic continuation of one IID stream: regenerate prefix
      PointSet all = iid_uniform(seed, i1, dim);
      PointSet out(i1 - i0, dim);
      out.prov = all.prov;
      std::copy(all.a.begin() + i0 * dim, all.a.end(), out.a.begin());
      return out;
    }});
    return streams;
  }
  for (size_t r = 0; r < opt.replications; ++r) {
    uint64_t seed = hash_mix(opt.seed, 0x9e90 + r);
    if (opt.sequence == SeqKind::lattice) {
      LatticeConfig cfg = LatticeConfig::make_random_shift(dim, seed);
      streams.push_back({[cfg](uint64_t i0, uint64_t i1) { return lattice_points(cfg, i0, i1); }});
    } else {
      DigitalNetConfig cfg =
          DigitalNetConfig::make_default(dim, NetRand::lms_plus_shift, seed);
      streams.push_back(
          {[cfg](uint64_t i0, uint64_t i1) { return digital_net_points(cfg, i0, i1); }});
    }
  }
  return streams;
}

}  // namespace

ArrayQoiResult adaptive_array_qoi(const ArrayQoiProblem& prob, const ArrayQoiOptions& opt) {
  if (!prob.integrand || !prob.propagate || !prob.dependency)
    throw std::invalid_argument("adaptive_array_qoi: incomplete problem");
  if (prob.tolerance.size() != prob.d_s || prob.alpha_s.size() != prob.d_s)
    throw std::invalid_argument("adaptive_array_qoi: tolerance/alpha size mismatch");
  for (const auto& h : prob.tolerance)
    if (!h.satisfiable())
      throw std::invalid_argument("adaptive_array_qoi: zero tolerances are unsatisfiable");
  size_t R = opt.method == BoundMethod::clt_iid ? 1 : opt.replications;
  if (opt.method == BoundMethod::student_t_replicated && R < 2)
    throw std::invalid_argument("adaptive_array_qoi: replicated method needs R >= 2");

  auto alpha_mu = split_uncertainty(prob.alpha_s, prob.dependency, prob.d_mu);
  auto streams = make_streams(opt, prob.dim);

  size_t d_mu = prob.d_mu, d_s = prob.d_s;
  std::vector<double> sums(R * d_mu, 0.0), sumsq(d_mu, 0.0);
  std::vector<uint64_t> counts(d_mu, 0);
  std::vector<uint8_t> mu_stop(d_mu, 0), s_stop(d_s, 0), active(d_mu, 1);
  std::vector<Interval> mu_bounds(d_mu, {-kInf, kInf}), s_bounds(d_s, {-kInf, kInf});

  ArrayQoiResult res;
  res.evaluations.assign(d_mu, 0);

  std::vector<double> out(d_mu, 0.0);
  std::vector<double> rep_means(R, 0.0);
  uint64_t n_start = 0, n_end = uint64_t(1) << opt.m1;

  while (true) {
    for (size_t r = 0; r < streams.size(); ++r) {
      PointSet pts = streams[r].gen(n_start, n_end);
      for (size_t i = 0; i < pts.n; ++i) {
        prob.integrand(pts.row(i), active.data(), out.data());
        for (size_t k = 0; k < d_mu; ++k) {
          if (!active[k]) continue;
          sums[r * d_mu + k] += out[k];
          if (opt.method == BoundMethod::clt_iid) sumsq[k] += out[k] * out[k];
          ++res.evaluations[k];
        }
      }
    }
    for (size_t k = 0; k < d_mu; ++k)
      if (active[k]) counts[k] = n_end;
    // update bounds on the still-active means
    for (size_t k = 0; k < d_mu; ++k) {
      if (!active[k]) continue;
      if (opt.method == BoundMethod::clt_iid) {
        double n = double(counts[k]);
        double mean = sums[k] / n;
        double var = (sumsq[k] - n * mean * mean) / (n - 1.0);
        mu_bounds[k] = clt_bounds(counts[k], mean, var, alpha_mu[k], opt.inflation);
      } else {
        for (size_t r = 0; r < R; ++r) rep_means[r] = sums[r * d_mu + k] / double(counts[k]);
        mu_bounds[k] = student_t_bounds(rep_means, alpha_mu[k], opt.inflation);
      }
    }
    prob.propagate(mu_bounds, s_bounds);
    for (size_t l = 0; l < d_s; ++l) {
      const ErrorMetric& h = prob.tolerance[l];
      auto [shat, stop] = optimal_estimate_and_stop(
          s_bounds[l].lo, s_bounds[l].hi, [&](double s) { return h(s); });
      (void)shat;
      s_stop[l] = stop ? 1 : 0;
    }
    prob.dependency(s_stop, mu_stop);
    for (size_t k = 0; k < d_mu; ++k) active[k] = mu_stop[k] ? 0 : 1;
    res.trace.push_back({n_end, s_bounds, s_stop});

    bool all_done = std::all_of(s_stop.begin(), s_stop.end(), [](uint8_t b) { return b != 0; });
    if (all_done) {
      res.converged = true;
      break;
    }
    if (2 * n_end > opt.n_max) break;  // sample budget reached; report partial results
    n_start = n_end;
    n_end = 2 * n_end;
  }

  res.n = n_end;
  res.mu_bounds = mu_bounds;
  res.s_bounds = s_bounds;
  res.s_flags = s_stop;
  res.s_hat.resize(d_s);
  for (size_t l = 0; l < d_s; ++l) {
    const ErrorMetric& h = prob.tolerance[l];
    res.s_hat[l] = optimal_estimate_and_stop(s_bounds[l].lo, s_bounds[l].hi,
                                             [&](double s) { return h(s); })
                       .first;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Sensitivity indices

void SensitivityLayout::propagate(const std::vector<Interval>& mu,
                                  std::vector<Interval>& s) const {
  auto clip = [](double v) { return std::min(1.0, std::max(0.0, v)); };
  for (size_t i = 0; i < 2; ++i) {
    for (size_t j = 0; j < c; ++j) {
      Interval num = mu[mu_index(i, 0, j)];
      Interval m1 = mu[mu_index(i, 1, j)];
      Interval m2 = mu[mu_index(i, 2, j)];
      double g_lo = m2.lo - m1.lo * m1.lo, g_hi = m2.lo - m1.hi * m1.hi;
      Interval& out = s[s_index(i, j)];
      if (!(g_lo > 0.0 && g_hi > 0.0) || !std::isfinite(num.lo) || !std::isfinite(m2.hi)) {
        out = {0.0, 1.0};  // variance-positivity guard failed
        continue;
      }
      double d_lo1 = m2.hi - m1.lo * m1.lo, d_lo2 = m2.hi - m1.hi * m1.hi;
      out.lo = clip(std::min(num.lo / d_lo1, num.lo / d_lo2));
      out.hi = clip(std::max(num.hi / g_lo, num.hi / g_hi));
    }
  }
}

void SensitivityLayout::dependency(const std::vector<uint8_t>& s_flags,
                                   std::vector<uint8_t>& mu_flags) const {
  for (size_t i = 0; i < 2; ++i)
    for (size_t k = 0; k < 3; ++k)
      for (size_t j = 0; j < c; ++j) mu_flags[mu_index(i, k, j)] = s_flags[s_index(i, j)];
}

ArrayQoiProblem sensitivity_indices_problem(size_t nu,
                                            std::function<double(const double*)> objective,
                                            const std::vector<std::vector<int>>& subsets,
                                            ErrorMetric tol, double alpha) {
  size_t c = subsets.size();
  for (const auto& u : subsets)
    for (int j : u)
      if (j < 0 || size_t(j) >= nu)
        throw std::invalid_argument("sensitivity_indices_problem: subset index out of range");
  SensitivityLayout layout{c};
  ArrayQoiProblem p;
  p.dim = 2 * nu;
  p.d_mu = 6 * c;
  p.d_s = 2 * c;
  p.tolerance.assign(p.d_s, tol);
  p.alpha_s.assign(p.d_s, alpha);
  p.propagate = [layout](const std::vector<Interval>& mu, std::vector<Interval>& s) {
    layout.propagate(mu, s);
  };
  p.dependency = [layout](const std::vector<uint8_t>& sf, std::vector<uint8_t>& mf) {
    layout.dependency(sf, mf);
  };
  p.integrand = [nu, c, subsets, layout, objective](const double* xz, const uint8_t* active,
                                                    double* out) {
    const double* x = xz;
    const double* z = xz + nu;
    bool need_fx = false, need_fz = false;
    for (size_t j = 0; j < c; ++j) {
      if (active[layout.mu_index(0, 0, j)] || active[layout.mu_index(0, 1, j)] ||
          active[layout.mu_index(0, 2, j)])
        need_fx = true;
      if (active[layout.mu_index(0, 0, j)] || active[layout.mu_index(1, 0, j)] ||
          active[layout.mu_index(1, 1, j)] || active[layout.mu_index(1, 2, j)])
        need_fz = true;
    }
    double fx = need_fx ? objective(x) : 0.0;
    double fz = need_fz ? objective(z) : 0.0;
    std::vector<double> w(nu);
    for (size_t j = 0; j < c; ++j) {
      bool need_mix = active[layout.mu_index(0, 0, j)] || active[layout.mu_index(1, 0, j)];
      double fmix = 0.0;
      if (need_mix) {
        for (size_t q = 0; q < nu; ++q) w[q] = z[q];
        for (int q : subsets[j]) w[q] = x[q];
        fmix = objective(w.data());
      }
      if (active[layout.mu_index(0, 0, j)]) out[layout.mu_index(0, 0, j)] = fx * (fmix - fz);
      if (active[layout.mu_index(0, 1, j)]) out[layout.mu_index(0, 1, j)] = fx;
      if (active[layout.mu_index(0, 2, j)]) out[layout.mu_index(0, 2, j)] = fx * fx;
      if (active[layout.mu_index(1, 0, j)])
        out[layout.mu_index(1, 0, j)] = 0.5 * (fz - fmix) * (fz - fmix);
      if (active[layout.mu_index(1, 1, j)]) out[layout.mu_index(1, 1, j)] = fz;
      if (active[layout.mu_index(1, 2, j)]) out[layout.mu_index(1, 2, j)] = fz * fz;
    }
  };
  return p;
}

}  // namespace qmcgp
