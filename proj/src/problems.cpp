#include "qmcgp/problems.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "qmcgp/cubature.hpp"
#include "qmcgp/stats.hpp"

namespace qmcgp {

namespace {

std::vector<double> genz_coeffs_oscillatory(size_t d) {
  // coefficients of the third kind
  std::vector<double> ct(d);
  double s = 0.0;
  for (size_t j = 0; j < d; ++j) {
    ct[j] = std::exp(double(j + 1) * std::log(1e-8) / double(d));
    s += ct[j];
  }
  for (auto& c : ct) c = 4.5 * c / s;
  return ct;
}

std::vector<double> genz_coeffs_corner_peak(size_t d) {
  // coefficients of the second kind
  std::vector<double> ct(d);
  double s = 0.0;
  for (size_t j = 0; j < d; ++j) {
    ct[j] = 1.0 / double((j + 1) * (j + 1));
    s += ct[j];
  }
  for (auto& c : ct) c = 0.25 * c / s;
  return ct;
}

double genz_oscillatory_mean(const std::vector<double>& c) {
  // E[cos(-sum c_j x_j)] = Re prod_j (e^{i c_j} - 1) / (i c_j)
  std::complex<double> prod(1.0, 0.0);
  for (double cj : c) {
    std::complex<double> ic(0.0, cj);
    prod *= (std::exp(ic) - 1.0) / ic;
  }
  return prod.real();
}

double genz_corner_peak_mean(const std::vector<double>& c) {
  size_t d = c.size();
  double prod_c = 1.0, dfact = 1.0;
  for (size_t j = 0; j < d; ++j) {
    prod_c *= c[j];
    dfact *= double(j + 1);
  }
  double sum = 0.0;
  for (size_t mask = 0; mask < (size_t(1) << d); ++mask) {
    double t = 1.0;
    int bits = 0;
    for (size_t j = 0; j < d; ++j)
      if (mask & (size_t(1) << j)) {
        t += c[j];
        ++bits;
      }
    sum += (bits % 2 ? -1.0 : 1.0) / t;
  }
  return sum / (dfact * prod_c);
}

double keister_reference(size_t d) {
  // radial reduction: (2 pi^{d/2} / Gamma(d/2)) int_0^inf cos(r) r^{d-1} e^{-r^2} dr,
  // evaluated with composite Simpson quadrature
  auto g = [&](double r) { return std::cos(r) * std::pow(r, double(d) - 1.0) * std::exp(-r * r); };
  const double hi = 10.0;
  const int n = 200000;
  double h = hi / n, s = g(0.0) + g(hi);
  for (int i = 1; i < n; ++i) s += g(i * h) * (i % 2 ? 4.0 : 2.0);
  double integral = s * h / 3.0;
  return 2.0 * std::pow(M_PI, double(d) / 2.0) / std::tgamma(double(d) / 2.0) * integral;
}

double ridge_u(const double* x, size_t d) {
  // sparse weights c_j = 2^{-j} normalized to unit l2 norm
  double s2 = 0.0;
  for (size_t j = 0; j < d; ++j) s2 += std::exp2(-2.0 * double(j + 1));
  double norm = std::sqrt(s2), u = 0.0;
  for (size_t j = 0; j < d; ++j) u += std::exp2(-double(j + 1)) / norm * norm_ppf(x[j]);
  return u;
}

struct OptionParams {
  double s0 = 100.0, strike = 100.0, rate = 0.05, sigma = 0.2;
};

// evaluate a geometric-Asian call at one cube point given the PCA factor
double asian_geo_payoff(const OptionParams& p, const Mat& factor,
                        const std::vector<double>& times, const std::vector<double>& w,
                        const double* x) {
  size_t d = times.size();
  double loga = 0.0;
  std::vector<double> z(d), b(d, 0.0);
  for (size_t j = 0; j < d; ++j) {
    if (x[j] <= 0.0 || x[j] >= 1.0)
      throw std::domain_error("option integrand: coordinate at 0 or 1");
    z[j] = norm_ppf(x[j]);
  }
  for (size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (size_t j = 0; j < d; ++j) s += factor(i, j) * z[j];
    b[i] = s;
  }
  double wsum = 0.0;
  for (size_t j = 0; j < d; ++j) {
    double logs = std::log(p.s0) + (p.rate - 0.5 * p.sigma * p.sigma) * times[j] + p.sigma * b[j];
    loga += w[j] * logs;
    wsum += w[j];
  }
  loga += (1.0 - wsum) * std::log(p.s0);  // weight not carried by monitored prices
  double a = std::exp(loga);
  return std::max(a - p.strike, 0.0) * std::exp(-p.rate * times.back());
}

}  // namespace

double geometric_asian_call_price(double s0, double strike, double rate, double sigma,
                                  const std::vector<double>& times,
                                  const std::vector<double>& w) {
  size_t d = times.size();
  if (w.size() != d) throw std::invalid_argument("asian price: weight size mismatch");
  double wsum = 0.0;
  for (double wj : w) wsum += wj;
  double m = std::log(s0);  // total log-s0 weight is 1 by construction
  for (size_t j = 0; j < d; ++j) m += w[j] * (rate - 0.5 * sigma * sigma) * times[j];
  (void)wsum;
  double v = 0.0;
  for (size_t j = 0; j < d; ++j)
    for (size_t k = 0; k < d; ++k) v += w[j] * w[k] * std::min(times[j], times[k]);
  v *= sigma * sigma;
  double sv = std::sqrt(v);
  double d2 = (m - std::log(strike)) / sv;
  double d1 = d2 + sv;
  return std::exp(-rate * times.back()) *
         (std::exp(m + 0.5 * v) * norm_cdf(d1) - strike * norm_cdf(d2));
}

double black_scholes_call_price(double s0, double strike, double rate, double sigma, double T) {
  double sv = sigma * std::sqrt(T);
  double d1 = (std::log(s0 / strike) + (rate + 0.5 * sigma * sigma) * T) / sv;
  double d2 = d1 - sv;
  return s0 * norm_cdf(d1) - strike * std::exp(-rate * T) * norm_cdf(d2);
}

TestProblem get_problem(const std::string& name, size_t d) {
  TestProblem p;
  p.name = name;
  if (name == "sumxex") {
    p.d = d ? d : 4;
    size_t dd = p.d;
    p.f = [dd](const double* x) {
      double s = -double(dd);
      for (size_t j = 0; j < dd; ++j) s += x[j] * std::exp(x[j]);
      return s;
    };
    p.reference = 0.0;  // E[x e^x] = 1 on [0,1]
    p.provenance = "analytic";
  } else if (name == "xexm1") {
    p.d = 1;
    p.f = [](const double* x) { return x[0] * std::exp(x[0]) - 1.0; };
    p.reference = 0.0;
    p.provenance = "analytic";
  } else if (name == "genz-osc") {
    p.d = d ? d : 3;
    auto c = genz_coeffs_oscillatory(p.d);
    size_t dd = p.d;
    p.f = [c, dd](const double* x) {
      double s = 0.0;
      for (size_t j = 0; j < dd; ++j) s += c[j] * x[j];
      return std::cos(-s);
    };
    p.reference = genz_oscillatory_mean(c);
    p.provenance = "analytic";
  } else if (name == "genz-cp") {
    p.d = d ? d : 3;
    auto c = genz_coeffs_corner_peak(p.d);
    size_t dd = p.d;
    p.f = [c, dd](const double* x) {
      double s = 1.0;
      for (size_t j = 0; j < dd; ++j) s += c[j] * x[j];
      return std::pow(s, -double(dd) - 1.0);
    };
    p.reference = genz_corner_peak_mean(c);
    p.provenance = "analytic";
  } else if (name == "gfunction") {
    p.d = d ? d : 3;
    size_t dd = p.d;
    p.f = [dd](const double* x) {
      double prod = 1.0;
      for (size_t j = 0; j < dd; ++j) {
        double a = (double(j + 1) - 2.0) / 2.0;
        prod *= (std::fabs(4.0 * x[j] - 2.0) - a) / (1.0 + a);
      }
      return prod;
    };
    p.reference = 1.0;  // each factor has mean (1 - a_j)/(1 + a_j) ... times
    {
      double ref = 1.0;
      for (size_t j = 0; j < p.d; ++j) {
        double a = (double(j + 1) - 2.0) / 2.0;
        ref *= (1.0 - a) / (1.0 + a);
      }
      p.reference = ref;
    }
    p.provenance = "analytic";
  } else if (name == "ishigami") {
    p.d = 3;
    const double a = 7.0, b = 0.1;
    p.f = [a, b](const double* x) {
      double t1 = -M_PI + 2.0 * M_PI * x[0];
      double t2 = -M_PI + 2.0 * M_PI * x[1];
      double t3 = -M_PI + 2.0 * M_PI * x[2];
      return (1.0 + b * t3 * t3 * t3 * t3) * std::sin(t1) + a * std::sin(t2) * std::sin(t2);
    };
    p.reference = a / 2.0;
    p.provenance = "analytic";
  } else if (name == "keister") {
    p.d = d ? d : 6;
    size_t dd = p.d;
    p.f = [dd](const double* x) {
      double s = 0.0;
      for (size_t j = 0; j < dd; ++j) {
        if (x[j] <= 0.0 || x[j] >= 1.0) throw std::domain_error("keister: coordinate at 0 or 1");
        double t = norm_ppf(x[j]) / std::sqrt(2.0);
        s += t * t;
      }
      return std::pow(M_PI, double(dd) / 2.0) * std::cos(std::sqrt(s));
    };
    p.reference = keister_reference(p.d);
    p.provenance = "oracle(radial quadrature)";
  } else if (name == "ridge-pl") {
    p.d = d ? d : 32;
    size_t dd = p.d;
    p.f = [dd](const double* x) {
      double u = ridge_u(x, dd);
      return std::max(u - 1.0, 0.0) - norm_pdf(1.0) + norm_cdf(-1.0);
    };
    p.reference = 0.0;  // E[(U-1)_+] = phi(1) - Phi(-1) for U ~ N(0,1)
    p.provenance = "analytic";
  } else if (name == "ridge-jsu") {
    p.d = d ? d : 32;
    size_t dd = p.d;
    const double eta = -0.5 * (std::exp(1.5) - std::exp(-0.5));  // E[sinh(U - 1)]
    p.f = [dd, eta](const double* x) {
      double u = ridge_u(x, dd);
      return std::sinh(u - 1.0) - eta;
    };
    p.reference = 0.0;
    p.provenance = "analytic";
  } else if (name == "asian-geo") {
    p.d = d ? d : 8;
    size_t dd = p.d;
    OptionParams op;
    std::vector<double> times(dd), w(dd);
    for (size_t j = 0; j < dd; ++j) times[j] = double(j + 1) / double(dd);
    // trapezoidal averaging of log prices, including the start price
    for (size_t j = 0; j + 1 < dd; ++j) w[j] = 1.0 / double(dd);
    w[dd - 1] = 0.5 / double(dd);
    Mat factor = brownian_pca_factor_equispaced(dd);
    p.f = [op, factor, times, w](const double* x) {
      return asian_geo_payoff(op, factor, times, w, x);
    };
    p.reference = geometric_asian_call_price(op.s0, op.strike, op.rate, op.sigma, times, w);
    p.provenance = "analytic";
  } else if (name == "euro-call") {
    p.d = d ? d : 8;
    size_t dd = p.d;
    OptionParams op;
    Mat factor = brownian_pca_factor_equispaced(dd);
    p.f = [op, factor, dd](const double* x) {
      std::vector<double> z(dd);
      for (size_t j = 0; j < dd; ++j) {
        if (x[j] <= 0.0 || x[j] >= 1.0) throw std::domain_error("euro-call: coordinate at 0 or 1");
        z[j] = norm_ppf(x[j]);
      }
      double b = 0.0;
      for (size_t j = 0; j < dd; ++j) b += factor(dd - 1, j) * z[j];
      double sT = op.s0 * std::exp((op.rate - 0.5 * op.sigma * op.sigma) + op.sigma * b);
      return std::max(sT - op.strike, 0.0) * std::exp(-op.rate);
    };
    p.reference = black_scholes_call_price(op.s0, op.strike, op.rate, op.sigma, 1.0);
    p.provenance = "analytic";
  } else {
    throw std::invalid_argument("unknown problem: " + name);
  }
  return p;
}

std::vector<std::string> problem_names() {
  return {"sumxex", "xexm1", "genz-osc", "genz-cp", "gfunction", "ishigami", "keister",
          "ridge-pl", "ridge-jsu", "asian-geo", "euro-call"};
}

// ---------------------------------------------------------------------------
// Multilevel problems

MultilevelProblem multilevel_option(size_t L) {
  if (L < 1 || L > 8) throw std::invalid_argument("multilevel_option: L must lie in [1, 8]");
  OptionParams op;
  std::vector<size_t> dl(L);
  std::vector<double> cost(L);
  std::vector<Mat> factors(L);
  std::vector<std::vector<double>> times(L), w(L);
  for (size_t l = 0; l < L; ++l) {
    size_t dd = size_t(1) << (3 + l);  // d_l = 2^(2 + level) with 1-based levels
    dl[l] = dd;
    cost[l] = std::exp2(double(l + 1) - double(L));
    factors[l] = brownian_pca_factor_equispaced(dd);
    times[l].resize(dd);
    w[l].assign(dd, 1.0 / double(dd));  // plain geometric mean over monitored prices
    for (size_t j = 0; j < dd; ++j) times[l][j] = double(j + 1) / double(dd);
  }
  MultilevelProblem prob;
  prob.name = "asian-ml";
  prob.levels = L;
  prob.d = dl[L - 1];
  prob.dl = dl;
  prob.cost = cost;
  prob.difference = [op, factors, times, w, L](size_t l, const double* x) {
    double fl = asian_geo_payoff(op, factors[l], times[l], w[l], x);
    if (l == 0) return fl;
    double flm = asian_geo_payoff(op, factors[l - 1], times[l - 1], w[l - 1], x);
    return fl - flm;
  };
  return prob;
}

double elliptic_solution(size_t level, const double* x, size_t d, double forcing) {
  // mesh of 2^(1+l)+1 points at 1-based level l; expand the divergence form
  // to -e^a (F'' + a' F') = g and discretize with central differences, the
  // drift a' taken as a centered difference of the log-conductivity
  size_t M = size_t(1) << (2 + level);
  double h = 1.0 / double(M);
  std::vector<double> zj(d);
  for (size_t j = 0; j < d; ++j) {
    if (x[j] <= 0.0 || x[j] >= 1.0) throw std::domain_error("elliptic: coordinate at 0 or 1");
    zj[j] = norm_ppf(x[j]);
  }
  auto afield = [&](double u) {
    double a = 0.0;
    for (size_t j = 0; j < d; ++j) a += zj[j] * std::sin(M_PI * double(j + 1) * u) / double(j + 1);
    return a;
  };
  size_t n = M - 1;
  std::vector<double> sub(n - 1), diag(n), super(n - 1), rhs(n);
  for (size_t k = 1; k <= n; ++k) {
    double u = double(k) * h;
    double ea = std::exp(afield(u));
    double ap = (afield(u + h) - afield(u - h)) / (2.0 * h);
    diag[k - 1] = 2.0 * ea / (h * h);
    if (k >= 2) sub[k - 2] = ea * (-1.0 / (h * h) + ap / (2.0 * h));
    if (k < n) super[k - 1] = ea * (-1.0 / (h * h) - ap / (2.0 * h));
    rhs[k - 1] = forcing;
  }
  auto F = tridiag_solve(sub, diag, super, rhs);
  return F[M / 2 - 1];  // node at u = 1/2
}

MultilevelProblem elliptic_1d(size_t L) {
  if (L < 1 || L > 6) throw std::invalid_argument("elliptic_1d: L must lie in [1, 6]");
  const size_t d = 8;
  MultilevelProblem prob;
  prob.name = "elliptic";
  prob.levels = L;
  prob.d = d;
  prob.dl.assign(L, d);
  prob.cost.resize(L);
  for (size_t l = 0; l < L; ++l) prob.cost[l] = std::exp2(double(l + 1) - double(L));
  prob.difference = [d](size_t l, const double* x) {
    double fl = elliptic_solution(l, x, d);
    if (l == 0) return fl;
    return fl - elliptic_solution(l - 1, x, d);
  };
  return prob;
}

}  // namespace qmcgp
