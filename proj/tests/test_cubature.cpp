#include <cmath>
#include <initializer_list>

#include "doctest.h"
#include "qmcgp/cubature.hpp"
#include "qmcgp/stats.hpp"
#include "support/test_util.hpp"

using namespace qmcgp;

namespace {
Rng rng(91);
const double inf = std::numeric_limits<double>::infinity();
}  // namespace

TEST_CASE("uniform transform") {
  auto t = MeasureTransform::uniform({0.0, 0.0}, {1.0, 1.0});
  double x[2] = {0.3, 0.9}, out[2];
  transform_row(t, x, out);
  CHECK(out[0] == 0.3);
  CHECK(out[1] == 0.9);

  auto t2 = MeasureTransform::uniform({-1.0, 2.0}, {1.0, 6.0});
  transform_row(t2, x, out);
  CHECK(out[0] == doctest::Approx(-0.4));
  CHECK(out[1] == doctest::Approx(5.6));
  CHECK_THROWS(MeasureTransform::uniform({0.0}, {-1.0}));
}

TEST_CASE("gaussian transform maps the median point to the mean") {
  Mat cov(2, 2);
  cov(0, 0) = 2.0;
  cov(1, 1) = 1.0;
  cov(0, 1) = cov(1, 0) = 0.5;
  auto t = MeasureTransform::gaussian({3.0, -1.0}, cov);
  double x[2] = {0.5, 0.5}, out[2];
  transform_row(t, x, out);
  CHECK(out[0] == doctest::Approx(3.0));
  CHECK(out[1] == doctest::Approx(-1.0));

  double bad[2] = {0.0, 0.5};
  CHECK_THROWS_AS(transform_row(t, bad, out), std::domain_error);
}

TEST_CASE("brownian transform: factor reproduces the covariance, both decompositions") {
  std::vector<double> times = {0.5, 1.0};
  for (auto dec : {MeasureTransform::Decomposition::cholesky, MeasureTransform::Decomposition::pca}) {
    auto t = MeasureTransform::brownian(times, 0.0, 0.0, 1.0, dec);
    // L L^T = [[.5,.5],[.5,1]]
    double want[2][2] = {{0.5, 0.5}, {0.5, 1.0}};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double v = 0.0;
        for (int k = 0; k < 2; ++k) v += t.factor(i, k) * t.factor(j, k);
        CHECK(v == doctest::Approx(want[i][j]).epsilon(1e-12));
      }
  }
  // drift and start enter the mean
  auto t = MeasureTransform::brownian(times, 2.0, 3.0, 1.0);
  CHECK(t.mean[0] == doctest::Approx(3.5));
  CHECK(t.mean[1] == doctest::Approx(5.0));
}

TEST_CASE("equispaced analytic Brownian PCA factor") {
  for (size_t d : {2u, 8u, 16u}) {
    Mat A = brownian_pca_factor_equispaced(d);
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < d; ++j) {
        double v = 0.0;
        for (size_t k = 0; k < d; ++k) v += A(i, k) * A(j, k);
        double want = double(std::min(i, j) + 1) / double(d);
        CHECK(std::fabs(v - want) < 1e-10);
      }
  }
}

TEST_CASE("clt bounds") {
  auto iv = clt_bounds(100, 0.0, 1.0, 0.05, 1.2);
  CHECK(iv.hi == doctest::Approx(1.2 * 1.959964 * 0.1).epsilon(1e-5));
  CHECK(iv.lo == doctest::Approx(-iv.hi));
  // constant samples: zero width
  auto iv0 = clt_bounds(50, 2.5, 0.0, 0.05, 1.2);
  CHECK(iv0.lo == 2.5);
  CHECK(iv0.hi == 2.5);
  // doubling the inflation doubles the half width
  auto iv2 = clt_bounds(100, 0.0, 1.0, 0.05, 2.4);
  CHECK(iv2.hi == doctest::Approx(2.0 * iv.hi));
  CHECK_THROWS(clt_bounds(1, 0.0, 1.0, 0.05, 1.0));
}

TEST_CASE("student-t bounds") {
  std::vector<double> same(8, 1.5);
  auto iv = student_t_bounds(same, 0.05, 1.2);
  CHECK(iv.lo == doctest::Approx(1.5));
  CHECK(iv.hi == doctest::Approx(1.5));

  std::vector<double> reps = {0.9, 1.1, 1.0, 1.05, 0.95, 1.02, 0.98, 1.0};
  auto iv2 = student_t_bounds(reps, 0.05, 1.0);
  double mu = 0.0;
  for (double m : reps) mu += m;
  mu /= 8.0;
  double var = 0.0;
  for (double m : reps) var += (m - mu) * (m - mu);
  var /= 7.0;
  double hw = 2.364624 * std::sqrt(var / 8.0);
  CHECK(iv2.hi - iv2.lo == doctest::Approx(2.0 * hw).epsilon(1e-5));
  CHECK_THROWS(student_t_bounds({1.0}, 0.05, 1.0));
}

TEST_CASE("interval arithmetic table rows") {
  CHECK(iv_add({1, 2}, {3, 4}).lo == 4.0);
  CHECK(iv_add({1, 2}, {3, 4}).hi == 6.0);
  auto dv = iv_div({1, 2}, {-1, 1});
  CHECK(dv.lo == -inf);
  CHECK(dv.hi == inf);
  auto mv = iv_mul({-1, 2}, {-3, 4});
  CHECK(mv.lo == -6.0);
  CHECK(mv.hi == 8.0);
  auto sb = iv_sub({1, 2}, {3, 4});
  CHECK(sb.lo == -3.0);
  CHECK(sb.hi == -1.0);
  CHECK(iv_min({1, 5}, {2, 3}).lo == 1.0);
  CHECK(iv_min({1, 5}, {2, 3}).hi == 3.0);
  CHECK(iv_max({1, 5}, {2, 3}).lo == 2.0);
  CHECK(iv_max({1, 5}, {2, 3}).hi == 5.0);
}

TEST_CASE("interval soundness fuzz") {
  for (int t = 0; t < 10000; ++t) {
    Interval a{4.0 * rng.next_double() - 2.0, 0.0};
    a.hi = a.lo + 2.0 * rng.next_double();
    Interval b{4.0 * rng.next_double() - 2.0, 0.0};
    b.hi = b.lo + 2.0 * rng.next_double();
    int op = int(rng.next_below(6));
    for (int s = 0; s < 100; ++s) {
      double xa = a.lo + (a.hi - a.lo) * rng.next_double();
      double xb = b.lo + (b.hi - b.lo) * rng.next_double();
      double v;
      Interval out;
      switch (op) {
        case 0: v = xa + xb; out = iv_add(a, b); break;
        case 1: v = xa - xb; out = iv_sub(a, b); break;
        case 2: v = xa * xb; out = iv_mul(a, b); break;
        case 3: v = xa / xb; out = iv_div(a, b); break;
        case 4: v = std::min(xa, xb); out = iv_min(a, b); break;
        default: v = std::max(xa, xb); out = iv_max(a, b); break;
      }
      bool inside = v >= out.lo - 1e-12 && v <= out.hi + 1e-12;
      if (!inside) {
        CAPTURE(op);
        CHECK(inside);
      }
    }
  }
}

TEST_CASE("optimal estimate and stopping rule") {
  // constant metric: midpoint and width test
  auto h_const = [](double) { return 0.25; };
  auto [s1, stop1] = optimal_estimate_and_stop(1.0, 1.4, h_const);
  CHECK(s1 == doctest::Approx(1.2));
  CHECK(stop1);
  auto [s2, stop2] = optimal_estimate_and_stop(1.0, 1.6, h_const);
  CHECK(!stop2);
  CHECK(s2 == doctest::Approx(1.3));

  // hand-worked example with h(s) = |s|/2
  auto h_half = [](double s) { return 0.5 * std::fabs(s); };
  auto [s3, stop3] = optimal_estimate_and_stop(1.0, 2.0, h_half);
  CHECK(stop3);
  CHECK(s3 == doctest::Approx(1.25));

  // worst-case optimality: the returned estimate beats perturbed candidates
  // against a grid evaluation of max |s - shat| - h(s)
  for (int t = 0; t < 40; ++t) {
    double lo = 2.0 * rng.next_double() - 1.0;
    double hi = lo + rng.next_double() + 1e-3;
    double ea = 0.05 + 0.2 * rng.next_double(), er = 0.3 * rng.next_double();
    ErrorMetric h{ErrorMetric::Mode::abs_or_rel, ea, er};
    auto hf = [&](double s) { return h(s); };
    double shat = optimal_estimate_and_stop(lo, hi, hf).first;
    CHECK(shat >= lo - 1e-12);
    CHECK(shat <= hi + 1e-12);
    auto worst = [&](double cand) {
      double w = -inf;
      for (int g = 0; g <= 256; ++g) {
        double s = lo + (hi - lo) * double(g) / 256.0;
        w = std::max(w, std::fabs(s - cand) - h(s));
      }
      return w;
    };
    double w0 = worst(shat);
    for (int c = 0; c < 64; ++c) {
      double cand = lo + (hi - lo) * rng.next_double();
      CHECK(w0 <= worst(cand) + 1e-9);
    }
  }
}

TEST_CASE("uncertainty splitting via the dependency map") {
  // scalar QOI with 5 dependent means: each gets alpha/5
  auto dep5 = [](const std::vector<uint8_t>& s, std::vector<uint8_t>& mu) {
    for (int k = 0; k < 5; ++k) mu[k] = s[0];
  };
  auto am = split_uncertainty({0.05}, dep5, 5);
  for (double a : am) CHECK(a == doctest::Approx(0.01));

  // identity map keeps alpha unchanged
  auto ident = [](const std::vector<uint8_t>& s, std::vector<uint8_t>& mu) {
    for (size_t k = 0; k < s.size(); ++k) mu[k] = s[k];
  };
  auto ai = split_uncertainty({0.05, 0.2}, ident, 2);
  CHECK(ai[0] == doctest::Approx(0.05));
  CHECK(ai[1] == doctest::Approx(0.2));

  // disjoint blocks split independently
  auto blocks = [](const std::vector<uint8_t>& s, std::vector<uint8_t>& mu) {
    mu[0] = mu[1] = s[0];
    mu[2] = s[1];
  };
  auto ab = split_uncertainty({0.04, 0.1}, blocks, 3);
  CHECK(ab[0] == doctest::Approx(0.02));
  CHECK(ab[1] == doctest::Approx(0.02));
  CHECK(ab[2] == doctest::Approx(0.1));

  // a mean owned by two QOIs is rejected
  auto shared = [](const std::vector<uint8_t>& s, std::vector<uint8_t>& mu) {
    mu[0] = s[0] || s[1];
  };
  CHECK_THROWS(split_uncertainty({0.05, 0.05}, shared, 1));
  // an orphan mean is rejected
  auto orphan = [](const std::vector<uint8_t>& s, std::vector<uint8_t>& mu) { mu[0] = s[0]; };
  CHECK_THROWS(split_uncertainty({0.05}, orphan, 2));
}

TEST_CASE("adaptive identity problem hits an analytic mean") {
  // f(x) = x on [0,1], mean 1/2, absolute tolerance 0.01
  auto prob = ArrayQoiProblem::identity(
      1, 1,
      [](const double* x, const uint8_t* active, double* out) {
        if (active[0]) out[0] = x[0];
      },
      ErrorMetric{ErrorMetric::Mode::abs_or_rel, 0.01, 0.0}, 0.05);
  ArrayQoiOptions opt;
  opt.m1 = 6;
  opt.seed = 31;
  auto res = adaptive_array_qoi(prob, opt);
  CHECK(res.converged);
  CHECK(std::fabs(res.s_hat[0] - 0.5) <= 0.01);
  CHECK(res.s_bounds[0].lo <= 0.5);
  CHECK(res.s_bounds[0].hi >= 0.5);

  // IID CLT variant
  ArrayQoiOptions optc;
  optc.method = BoundMethod::clt_iid;
  optc.m1 = 8;
  optc.seed = 32;
  auto resc = adaptive_array_qoi(prob, optc);
  CHECK(resc.converged);
  CHECK(std::fabs(resc.s_hat[0] - 0.5) <= 0.02);
}

TEST_CASE("posterior-mean ratio with a zero-straddling denominator keeps sampling") {
  // s = mu0 / mu1 with mu1 near zero at small n: interval propagation with
  // the division row; denominator mean is exactly zero so s never tightens
  size_t evals_cap = 0;
  ArrayQoiProblem prob;
  prob.dim = 1;
  prob.d_mu = 2;
  prob.d_s = 1;
  prob.integrand = [&](const double* x, const uint8_t* active, double* out) {
    if (active[0]) out[0] = x[0];
    if (active[1]) out[1] = 0.0;  // degenerate denominator: interval [0,0]
    ++evals_cap;
  };
  prob.propagate = [](const std::vector<Interval>& mu, std::vector<Interval>& s) {
    s[0] = iv_div(mu[0], mu[1]);
  };
  prob.dependency = [](const std::vector<uint8_t>& sf, std::vector<uint8_t>& mf) {
    mf[0] = mf[1] = sf[0];
  };
  prob.tolerance = {ErrorMetric{ErrorMetric::Mode::abs_or_rel, 0.05, 0.0}};
  prob.alpha_s = {0.05};
  ArrayQoiOptions opt;
  opt.m1 = 5;
  opt.n_max = 1 << 10;
  opt.seed = 4;
  auto res = adaptive_array_qoi(prob, opt);
  CHECK(!res.converged);  // budget cap with partial results reported
  CHECK(res.s_bounds[0].lo == -inf);
  CHECK(res.s_bounds[0].hi == inf);
  CHECK(res.n == (1 << 10));
}

TEST_CASE("economic evaluation: stopped outputs are never evaluated again") {
  // two QOIs with very different difficulty; the easy one must freeze early
  ArrayQoiProblem prob;
  prob.dim = 2;
  prob.d_mu = 2;
  prob.d_s = 2;
  prob.integrand = [](const double* x, const uint8_t* active, double* out) {
    if (active[0]) out[0] = 1.0;  // constant output stops immediately
    if (active[1]) out[1] = std::sin(2.0 * M_PI * x[0]) * std::sin(2.0 * M_PI * x[1]);
  };
  prob.propagate = [](const std::vector<Interval>& mu, std::vector<Interval>& s) {
    s[0] = mu[0];
    s[1] = mu[1];
  };
  prob.dependency = [](const std::vector<uint8_t>& sf, std::vector<uint8_t>& mf) {
    mf[0] = sf[0];
    mf[1] = sf[1];
  };
  prob.tolerance.assign(2, ErrorMetric{ErrorMetric::Mode::abs_or_rel, 1e-4, 0.0});
  prob.alpha_s.assign(2, 0.05);
  ArrayQoiOptions opt;
  opt.m1 = 4;
  opt.seed = 8;
  auto res = adaptive_array_qoi(prob, opt);
  CHECK(res.converged);
  // the constant output was evaluated only in the first pass
  CHECK(res.evaluations[0] == opt.replications * (uint64_t(1) << opt.m1));
  CHECK(res.evaluations[1] > res.evaluations[0]);
}

TEST_CASE("unsatisfiable tolerances are rejected") {
  auto prob = ArrayQoiProblem::identity(
      1, 1, [](const double*, const uint8_t*, double*) {},
      ErrorMetric{ErrorMetric::Mode::abs_or_rel, 0.0, 0.0}, 0.05);
  ArrayQoiOptions opt;
  CHECK_THROWS(adaptive_array_qoi(prob, opt));
}

TEST_CASE("replicated student-t coverage on the oscillatory Genz function") {
  // property check at fixed n: nominal 95% intervals with inflation cover
  // the analytic mean in at least 88% of 200 trials
  size_t nu = 3;
  std::vector<double> c(nu);
  double sc = 0.0;
  for (size_t j = 0; j < nu; ++j) {
    c[j] = std::exp(double(j + 1) * std::log(1e-8) / double(nu));
    sc += c[j];
  }
  for (auto& v : c) v = 4.5 * v / sc;
  std::complex<double> prod(1.0, 0.0);
  for (double cj : c) {
    std::complex<double> ic(0.0, cj);
    prod *= (std::exp(ic) - 1.0) / ic;
  }
  double truth = prod.real();

  int covered = 0;
  const int trials = 200;
  const size_t R = 8;
  const uint64_t n = 64;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> means(R);
    for (size_t r = 0; r < R; ++r) {
      auto cfg = DigitalNetConfig::make_default(nu, NetRand::lms_plus_shift,
                                                hash_mix(1000 + t, r));
      auto pts = digital_net_points(cfg, 0, n);
      double s = 0.0;
      for (size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (size_t j = 0; j < nu; ++j) acc += c[j] * pts.at(i, j);
        s += std::cos(-acc);
      }
      means[r] = s / double(n);
    }
    auto iv = student_t_bounds(means, 0.05, 1.2);
    if (truth >= iv.lo && truth <= iv.hi) ++covered;
  }
  CHECK(covered >= int(0.88 * trials));
}

TEST_CASE("sensitivity propagators clip into [0,1] and honor the guard") {
  SensitivityLayout lay{1};
  std::vector<Interval> mu(6), s(2);
  // well-separated variance: ratio falls inside the clip range
  mu[lay.mu_index(0, 0, 0)] = {0.2, 0.3};   // numerator
  mu[lay.mu_index(0, 1, 0)] = {0.4, 0.5};   // first moment
  mu[lay.mu_index(0, 2, 0)] = {1.0, 1.1};   // second moment
  mu[lay.mu_index(1, 0, 0)] = {0.1, 0.2};
  mu[lay.mu_index(1, 1, 0)] = {0.4, 0.5};
  mu[lay.mu_index(1, 2, 0)] = {1.0, 1.1};
  lay.propagate(mu, s);
  // lower bound: num.lo over the largest printed denominator m2.hi - m1.lo^2;
  // upper bound: num.hi over the smallest guard denominator m2.lo - m1.hi^2
  CHECK(s[0].lo == doctest::Approx(0.2 / 0.94).epsilon(1e-12));
  CHECK(s[0].hi == doctest::Approx(0.3 / 0.75).epsilon(1e-12));
  // guard: variance interval touching zero yields [0, 1]
  mu[lay.mu_index(0, 2, 0)] = {0.2, 1.1};
  lay.propagate(mu, s);
  CHECK(s[0].lo == 0.0);
  CHECK(s[0].hi == 1.0);
}

TEST_CASE("stopping soundness: accepted intervals satisfy the error criterion everywhere") {
  Rng srng(314);
  for (int t = 0; t < 200; ++t) {
    double lo = 2.0 * srng.next_double() - 1.0;
    double hi = lo + 2.0 * srng.next_double() + 1e-6;
    ErrorMetric h{srng.next_below(2) ? ErrorMetric::Mode::abs_or_rel
                                     : ErrorMetric::Mode::abs_and_rel,
                  0.05 + 0.3 * srng.next_double(), 0.05 + 0.3 * srng.next_double()};
    auto hf = [&](double s) { return h(s); };
    auto [shat, stop] = optimal_estimate_and_stop(lo, hi, hf);
    if (!stop) continue;
    for (int g = 0; g <= 200; ++g) {
      double s = lo + (hi - lo) * double(g) / 200.0;
      CHECK(std::fabs(s - shat) <= h(s) + 1e-12);
    }
  }
}
