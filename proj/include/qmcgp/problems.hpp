#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qmcgp/multilevel.hpp"

namespace qmcgp {

// A single-level test integrand on [0,1]^d (any measure transform is baked
// in) with a reference mean and its provenance.
struct TestProblem {
  std::string name;
  size_t d = 0;
  std::function<double(const double*)> f;
  double reference = 0.0;
  std::string provenance;  // "analytic" or "oracle(...)"
};

// Registry lookup; d = 0 picks the problem's default dimension.
TestProblem get_problem(const std::string& name, size_t d = 0);
std::vector<std::string> problem_names();

// Closed-form price of a geometric-average Asian call on a GBM monitored at
// `times`, with log-price averaging weights `w` (one per monitoring time).
double geometric_asian_call_price(double s0, double strike, double rate, double sigma,
                                  const std::vector<double>& times,
                                  const std::vector<double>& w);

double black_scholes_call_price(double s0, double strike, double rate, double sigma, double T);

// Geometric-Asian call pricing at L levels monitoring d_l = 2^(2+l) times,
// coupled through common inputs subset to the leading dimensions.
MultilevelProblem multilevel_option(size_t L);

// One-dimensional elliptic PDE -(e^a F')' = 1 with random log-conductivity,
// solved by finite differences on meshes of 2^(1+l)+1 points; QOI F(1/2).
MultilevelProblem elliptic_1d(size_t L);

// Level-l solution F_l(1/2, x) of the elliptic problem (for reference runs).
double elliptic_solution(size_t level, const double* x, size_t d, double forcing = 1.0);

}  // namespace qmcgp
