#include "qmcgp/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include "qmcgp/common.hpp"

namespace qmcgp {

namespace {

// Rows p = 0..9 of the Bernoulli coefficient table, c[p][j] multiplying x^j.
const double kBernoulliCoeffs[10][10] = {
    {1.0},
    {-1.0 / 2, 1.0},
    {1.0 / 6, -1.0, 1.0},
    {0.0, 1.0 / 2, -3.0 / 2, 1.0},
    {-1.0 / 30, 0.0, 1.0, -2.0, 1.0},
    {0.0, -1.0 / 6, 0.0, 5.0 / 3, -5.0 / 2, 1.0},
    {1.0 / 42, 0.0, -1.0 / 2, 0.0, 5.0 / 2, -3.0, 1.0},
    {0.0, 1.0 / 6, 0.0, -7.0 / 6, 0.0, 7.0 / 2, -7.0 / 2, 1.0},
    {-1.0 / 30, 0.0, 2.0 / 3, 0.0, -7.0 / 3, 0.0, 14.0 / 3, -4.0, 1.0},
    {0.0, -3.0 / 10, 0.0, 2.0, 0.0, -21.0 / 5, 0.0, 6.0, -9.0 / 2, 1.0},
};

double frac01(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double scaled_dist(const KernelSpec& spec, const double* x, const double* xp) {
  double s = 0.0;
  for (size_t j = 0; j < spec.d; ++j) {
    double dx = x[j] - xp[j];
    s += dx * dx / (2.0 * spec.eta[j] * spec.eta[j]);
  }
  return std::sqrt(s);
}

}  // namespace

double bernoulli_poly(int p, double x) {
  if (p < 0 || p > 9) throw std::invalid_argument("bernoulli_poly: p must lie in [0, 9]");
  double r = 0.0;
  for (int j = p; j >= 0; --j) r = r * x + kBernoulliCoeffs[p][j];
  return r;
}

double si_univariate(int alpha, int beta, int beta_prime, double x, double xp) {
  int p = 2 * alpha - beta - beta_prime;
  if (alpha < 1 || beta < 0 || beta_prime < 0 || p <= 1)
    throw std::invalid_argument("si_univariate: need 2 alpha - beta - beta' > 1");
  double sign = ((alpha + beta_prime + 1) % 2 == 0) ? 1.0 : -1.0;
  double c = sign * std::pow(2.0 * M_PI, 2.0 * alpha) / factorial(p);
  return c * bernoulli_poly(p, frac01(x - xp));
}

uint64_t to_digits53(double x) {
  if (x < 0.0 || x >= 1.0) throw std::invalid_argument("digits: input must lie in [0,1)");
  return uint64_t(std::ldexp(x, 53));
}

int first_one_digit(uint64_t z) {
  if (z == 0) return 0;
  int h = 63;
  while (!(z >> h)) --h;  // highest set bit
  return 53 - h;          // digit index, 1-based
}

namespace {

// S(x) = sum_a wal_{2^a}(x) 2^{-3a}; digits beyond 53 are zero, so the tail
// contributes +2^{-3a} exactly.
double walsh_cubic_sum(uint64_t z) {
  double s = 0.0, w = 1.0;
  for (int a = 0; a < 53; ++a) {
    int digit = int((z >> (52 - a)) & 1);
    s += (digit ? -w : w);
    w *= 0.125;
  }
  return s;
}

}  // namespace

double dsi_omega_delta(int alpha, uint64_t z) {
  int beta = first_one_digit(z);
  double x = std::ldexp(double(z), -53);
  double t1 = beta ? std::ldexp(1.0, -beta) : 0.0;
  double t2 = t1 * t1, t3 = t2 * t1;
  switch (alpha) {
    case 2:
      return -1.0 - beta * x + 2.5 * (1.0 - t1);
    case 3:
      return -1.0 + beta * x * x - 5.0 * (1.0 - t1) * x + (43.0 / 18.0) * (1.0 - t2);
    case 4:
      return -1.0 - (2.0 / 3.0) * beta * x * x * x + 5.0 * (1.0 - t1) * x * x -
             (43.0 / 9.0) * (1.0 - t2) * x + (701.0 / 294.0) * (1.0 - t3) +
             beta * (walsh_cubic_sum(z) / 48.0 - 1.0 / 42.0);
    default:
      throw std::invalid_argument("dsi_omega: alpha must lie in {2, 3, 4}");
  }
}

double dsi_omega(int alpha, double x, double xp) {
  return dsi_omega_delta(alpha, to_digits53(x) ^ to_digits53(xp));
}

double dsi_kdddot(double alpha, double x, double xp) {
  if (alpha <= 0.0) throw std::invalid_argument("dsi_kdddot: alpha must be positive");
  double upsilon = std::exp2(alpha + 1.0) / (std::exp2(alpha + 1.0) - 2.0);
  uint64_t z = to_digits53(x) ^ to_digits53(xp);
  if (z == 0) return upsilon;
  int beta = first_one_digit(z);
  return upsilon - std::exp2(-alpha * (beta - 1)) * (upsilon + 1.0);
}

double dsi_order1(double x, double xp) {
  uint64_t z = to_digits53(x) ^ to_digits53(xp);
  if (z == 0) return 1.0 / 6.0;
  return 1.0 / 6.0 - std::exp2(-1.0 - first_one_digit(z));
}

double dsi_adaptive_sum_delta(const std::array<double, 4>& a, uint64_t z) {
  if (a[0] < 0 || a[1] < 0 || a[2] < 0 || a[3] < 0 || (a[0] + a[1] + a[2] + a[3]) <= 0.0)
    throw std::invalid_argument("dsi_adaptive_sum: weights must be nonnegative, not all zero");
  int beta = first_one_digit(z);
  double t1 = beta ? std::ldexp(1.0, -beta) : 0.0;
  double r = a[0] * 6.0 * (1.0 - 0.5 * t1);
  if (a[1] != 0.0) r += a[1] * dsi_omega_delta(2, z);
  if (a[2] != 0.0) r += a[2] * dsi_omega_delta(3, z);
  if (a[3] != 0.0) r += a[3] * dsi_omega_delta(4, z);
  return r;
}

double dsi_adaptive_sum(const std::array<double, 4>& a, double x, double xp) {
  return dsi_adaptive_sum_delta(a, to_digits53(x) ^ to_digits53(xp));
}

// ---------------------------------------------------------------------------
// KernelSpec

void KernelSpec::validate() const {
  if (d == 0) throw std::invalid_argument("kernel: dimension must be >= 1");
  if (gamma <= 0.0) throw std::invalid_argument("kernel: gamma must be positive");
  if (alpha.size() != d || eta.size() != d)
    throw std::invalid_argument("kernel: alpha/eta must have one entry per dimension");
  for (double e : eta)
    if (e < 0.0) throw std::invalid_argument("kernel: eta must be nonnegative");
  switch (family) {
    case KernelFamily::si_bernoulli:
      for (size_t j = 0; j < d; ++j) {
        int b = beta.empty() ? 0 : beta[j];
        int bp = beta_prime.empty() ? 0 : beta_prime[j];
        if (2.0 * alpha[j] - b - bp <= 1.0)
          throw std::invalid_argument("kernel: si smoothness requires 2a - b - b' > 1");
      }
      break;
    case KernelFamily::dsi_omega:
      for (double al : alpha)
        if (al != 2.0 && al != 3.0 && al != 4.0)
          throw std::invalid_argument("kernel: dsi_omega requires alpha in {2, 3, 4}");
      break;
    case KernelFamily::dsi_kdddot:
      for (double al : alpha)
        if (al <= 0.0) throw std::invalid_argument("kernel: dsi_kdddot requires alpha > 0");
      break;
    case KernelFamily::dsi_adaptive_sum:
      if (a[0] < 0 || a[1] < 0 || a[2] < 0 || a[3] < 0 || (a[0] + a[1] + a[2] + a[3]) <= 0.0)
        throw std::invalid_argument("kernel: adaptive weights must be nonnegative, not all zero");
      break;
    case KernelFamily::matern:
      for (double al : alpha) {
        double p = al - 0.5;
        if (p < 0 || p > 6 || p != std::floor(p))
          throw std::invalid_argument("kernel: matern alpha must be half-integer <= 13/2");
      }
      break;
    default:
      break;
  }
  if (!beta.empty() && family != KernelFamily::si_bernoulli)
    throw std::invalid_argument("kernel: derivative orders supported for si_bernoulli only");
  if (weights == WeightStructure::mixture_product) {
    if (d > 12) throw std::invalid_argument("kernel: mixture weights limited to d <= 12");
    if (mixture_weights.size() != (size_t(1) << d) || mixture_weights[0] != 1.0)
      throw std::invalid_argument("kernel: mixture weights need 2^d entries with weight 1 on {}");
    if (has_derivatives())
      throw std::invalid_argument("kernel: derivative orders unsupported with mixture weights");
  }
}

bool KernelSpec::has_derivatives() const {
  for (int b : beta)
    if (b) return true;
  for (int b : beta_prime)
    if (b) return true;
  return false;
}

KernelSpec KernelSpec::si(size_t d, int alpha, double gamma, double eta) {
  KernelSpec s;
  s.family = KernelFamily::si_bernoulli;
  s.d = d;
  s.alpha.assign(d, double(alpha));
  s.gamma = gamma;
  s.eta.assign(d, eta);
  return s;
}

KernelSpec KernelSpec::dsi(KernelFamily family, size_t d, double alpha, double gamma, double eta) {
  KernelSpec s;
  s.family = family;
  s.d = d;
  s.alpha.assign(d, alpha);
  s.gamma = gamma;
  s.eta.assign(d, eta);
  return s;
}

KernelSpec KernelSpec::dsi_adaptive(size_t d, double gamma, double eta, std::array<double, 4> a) {
  KernelSpec s = dsi(KernelFamily::dsi_adaptive_sum, d, 0.0, gamma, eta);
  s.a = a;
  return s;
}

KernelSpec KernelSpec::radial(KernelFamily family, size_t d, double alpha, double gamma,
                              double eta) {
  KernelSpec s;
  s.family = family;
  s.d = d;
  s.alpha.assign(d, alpha);
  s.gamma = gamma;
  s.eta.assign(d, eta);
  return s;
}

double kernel_univariate(const KernelSpec& spec, size_t j, double x, double xp) {
  switch (spec.family) {
    case KernelFamily::si_bernoulli: {
      int b = spec.beta.empty() ? 0 : spec.beta[j];
      int bp = spec.beta_prime.empty() ? 0 : spec.beta_prime[j];
      return si_univariate(int(spec.alpha[j]), b, bp, x, xp);
    }
    case KernelFamily::dsi_omega:
      return dsi_omega(int(spec.alpha[j]), x, xp);
    case KernelFamily::dsi_kdddot:
      return dsi_kdddot(spec.alpha[j], x, xp);
    case KernelFamily::dsi_order1:
      return dsi_order1(x, xp);
    case KernelFamily::dsi_adaptive_sum:
      return dsi_adaptive_sum(spec.a, x, xp);
    default:
      throw std::invalid_argument("kernel_univariate: radial kernels have no product factor");
  }
}

double kernel_eval(const KernelSpec& spec, const double* x, const double* xp) {
  switch (spec.family) {
    case KernelFamily::squared_exponential: {
      double r = scaled_dist(spec, x, xp);
      return spec.gamma * std::exp(-r * r);
    }
    case KernelFamily::matern: {
      double r = scaled_dist(spec, x, xp);
      auto c = matern_coefficients(spec.alpha[0]);
      double poly = 0.0, rp = 1.0;
      for (double cj : c) {
        poly += cj * rp;
        rp *= r;
      }
      return spec.gamma * std::exp(-std::sqrt(2.0 * spec.alpha[0]) * r) * poly;
    }
    case KernelFamily::rational_quadratic: {
      // squared scaled distance, so the alpha -> infinity limit is the SE kernel
      double r = scaled_dist(spec, x, xp);
      return spec.gamma * std::pow(1.0 + r * r / spec.alpha[0], -spec.alpha[0]);
    }
    default:
      break;
  }
  if (spec.weights == WeightStructure::product) {
    double prod = spec.gamma;
    for (size_t j = 0; j < spec.d; ++j) {
      int b = spec.beta.empty() ? 0 : (spec.family == KernelFamily::si_bernoulli ? spec.beta[j] : 0);
      int bp = spec.beta_prime.empty()
                   ? 0
                   : (spec.family == KernelFamily::si_bernoulli ? spec.beta_prime[j] : 0);
      double one = (b + bp == 0) ? 1.0 : 0.0;
      prod *= one + spec.eta[j] * kernel_univariate(spec, j, x[j], xp[j]);
    }
    return prod;
  }
  // mixture of products over subsets
  size_t nsub = size_t(1) << spec.d;
  double sum = 0.0;
  std::vector<double> k1(spec.d);
  for (size_t j = 0; j < spec.d; ++j) k1[j] = kernel_univariate(spec, j, x[j], xp[j]);
  for (size_t mask = 0; mask < nsub; ++mask) {
    double w = spec.mixture_weights[mask];
    if (w == 0.0) continue;
    double prod = 1.0;
    for (size_t j = 0; j < spec.d; ++j)
      if (mask & (size_t(1) << j)) prod *= k1[j];
    sum += w * prod;
  }
  return spec.gamma * sum;
}

double kernel_integral_x(const KernelSpec& spec, const double* xp) {
  if (spec.family == KernelFamily::squared_exponential) {
    double v = spec.gamma;
    for (size_t j = 0; j < spec.d; ++j) {
      double e = spec.eta[j];
      v *= std::sqrt(M_PI / 2.0) * e *
           (std::erf(xp[j] / (std::sqrt(2.0) * e)) - std::erf((xp[j] - 1.0) / (std::sqrt(2.0) * e)));
    }
    return v;
  }
  if (spec.is_si() || spec.is_dsi()) {
    if (spec.weights == WeightStructure::mixture_product) return spec.gamma;  // empty set only
    // most univariate components integrate to zero; the adaptive sum's
    // order-1 piece 6(1 - t1/2) carries the constant integral 5
    double c1 = spec.family == KernelFamily::dsi_adaptive_sum ? 5.0 * spec.a[0] : 0.0;
    double prod = spec.gamma;
    for (size_t j = 0; j < spec.d; ++j) {
      int b = spec.beta.empty() ? 0 : spec.beta[j];
      int bp = spec.beta_prime.empty() ? 0 : spec.beta_prime[j];
      prod *= (b + bp == 0) ? (1.0 + spec.eta[j] * c1) : 0.0;
    }
    return prod;
  }
  throw std::invalid_argument("kernel_integral_x: no closed form for this family");
}

double kernel_integral_xx(const KernelSpec& spec) {
  if (spec.family == KernelFamily::squared_exponential) {
    double v = spec.gamma;
    for (size_t j = 0; j < spec.d; ++j) {
      double e = spec.eta[j];
      v *= 2.0 * e * e * (std::exp(-1.0 / (2.0 * e * e)) - 1.0) +
           std::sqrt(2.0 * M_PI) * e * std::erf(1.0 / (std::sqrt(2.0) * e));
    }
    return v;
  }
  if (spec.is_si() || spec.is_dsi()) {
    double zero[16] = {0};
    return kernel_integral_x(spec, zero);  // same product of indicator factors
  }
  throw std::invalid_argument("kernel_integral_xx: no closed form for this family");
}

std::vector<double> matern_coefficients(double alpha) {
  double p = alpha - 0.5;
  if (p < 0 || p > 6 || p != std::floor(p))
    throw std::invalid_argument("matern_coefficients: alpha must be half-integer <= 13/2");
  const double s3 = std::sqrt(3.0), s5 = std::sqrt(5.0), s7 = std::sqrt(7.0);
  const double s11 = std::sqrt(11.0), s13 = std::sqrt(13.0);
  switch (int(p)) {
    case 0: return {1.0};
    case 1: return {1.0, s3};
    case 2: return {1.0, s5, 5.0 / 3.0};
    case 3: return {1.0, s7, 14.0 / 5.0, 7.0 * s7 / 15.0};
    case 4: return {1.0, 3.0, 27.0 / 7.0, 18.0 / 7.0, 27.0 / 35.0};
    case 5: return {1.0, s11, 44.0 / 9.0, 11.0 * s11 / 9.0, 121.0 / 63.0, 121.0 * s11 / 945.0};
    default:
      return {1.0,      s13,  65.0 / 11.0, 52.0 * s13 / 33.0, 338.0 / 99.0, 169.0 * s13 / 495.0,
              2197.0 / 10395.0};
  }
}

}  // namespace qmcgp
