#pragma once

namespace qmcgp {

// Inverse CDF of the standard normal (Wichura's AS 241, double precision).
double norm_ppf(double p);
double norm_cdf(double x);
double norm_pdf(double x);

// Regularized incomplete beta I_x(a,b) via the Lentz continued fraction.
double incbeta(double a, double b, double x);

// Student-t quantile: smallest t with P(T_nu <= t) = p.
double student_t_ppf(double p, int nu);

}  // namespace qmcgp
