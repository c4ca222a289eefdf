#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace qmcgp {

enum class KernelFamily {
  si_bernoulli,
  dsi_omega,
  dsi_kdddot,
  dsi_order1,
  dsi_adaptive_sum,
  squared_exponential,
  matern,
  rational_quadratic,
};

enum class WeightStructure { product, mixture_product };

struct KernelSpec {
  KernelFamily family = KernelFamily::si_bernoulli;
  size_t d = 1;
  std::vector<double> alpha;      // per-dimension smoothness
  double gamma = 1.0;             // global scale
  std::vector<double> eta;        // per-dimension weights / lengthscales
  std::array<double, 4> a{1.0, 1.0, 1.0, 1.0};  // adaptive-sum weights
  std::vector<int> beta, beta_prime;            // derivative orders, si_bernoulli only
  WeightStructure weights = WeightStructure::product;
  std::vector<double> mixture_weights;  // 2^d subset weights, index by bitmask; [0] must be 1

  void validate() const;
  bool is_si() const { return family == KernelFamily::si_bernoulli; }
  bool is_dsi() const {
    return family == KernelFamily::dsi_omega || family == KernelFamily::dsi_kdddot ||
           family == KernelFamily::dsi_order1 || family == KernelFamily::dsi_adaptive_sum;
  }
  bool has_derivatives() const;

  static KernelSpec si(size_t d, int alpha, double gamma = 1.0, double eta = 1.0);
  static KernelSpec dsi(KernelFamily family, size_t d, double alpha, double gamma = 1.0,
                        double eta = 1.0);
  static KernelSpec dsi_adaptive(size_t d, double gamma = 1.0, double eta = 1.0,
                                 std::array<double, 4> a = {1, 1, 1, 1});
  static KernelSpec radial(KernelFamily family, size_t d, double alpha, double gamma = 1.0,
                           double eta = 1.0);
};

// Bernoulli polynomial B_p(x) from the tabled coefficients, p <= 9.
double bernoulli_poly(int p, double x);

// Univariate shift-invariant kernel of smoothness alpha with derivative
// orders (beta, beta'), requiring 2 alpha - beta - beta' > 1.
double si_univariate(int alpha, int beta, int beta_prime, double x, double xp);

// Digit utilities shared by the DSI kernels; digits are the base-2 expansion
// rounded to 53 bits.
uint64_t to_digits53(double x);
int first_one_digit(uint64_t z);  // beta(x); 0 for z = 0

// omega_alpha(x (-) x') for alpha in {2,3,4}.
double dsi_omega(int alpha, double x, double xp);
double dsi_omega_delta(int alpha, uint64_t zdelta);

// Scramble-invariant kernel of real smoothness alpha > 0 (base 2).
double dsi_kdddot(double alpha, double x, double xp);

// Order-1 DSI kernel (base 2): 1/6 on the diagonal, 1/6 - 2^(-1-beta) off it.
double dsi_order1(double x, double xp);

// Weighted sum a_1 R1 + a_2 w2 + a_3 w3 + a_4 w4 at x (-) x'.
double dsi_adaptive_sum(const std::array<double, 4>& a, double x, double xp);
double dsi_adaptive_sum_delta(const std::array<double, 4>& a, uint64_t zdelta);

// One factor of the product form: K_{alpha_j}(x_j, x_j') for spec dimension j
// (without the 1 + eta_j wrapper). Derivative orders apply for si_bernoulli.
double kernel_univariate(const KernelSpec& spec, size_t j, double x, double xp);

// Full multivariate evaluation (product or mixture-product).
double kernel_eval(const KernelSpec& spec, const double* x, const double* xp);

// Closed-form integrals; SI/DSI product kernels integrate to gamma when all
// derivative orders vanish, radial kernels use their printed formulas.
double kernel_integral_x(const KernelSpec& spec, const double* xp);  // int K(x, xp) dx
double kernel_integral_xx(const KernelSpec& spec);                   // int int K dx dx'

// Matern half-integer coefficient row for alpha = p + 1/2, p <= 6.
std::vector<double> matern_coefficients(double alpha);

}  // namespace qmcgp
