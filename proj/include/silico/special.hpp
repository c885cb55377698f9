#pragma once

namespace silico::stats {

// log C(n, k) via lgamma.
double log_choose(int n, int k);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation
// (modified Lentz). Accurate to ~1e-14 over the parameter ranges used here.
double incomplete_beta(double a, double b, double x);

// Student-t CDF with nu degrees of freedom.
double student_t_cdf(double t, double nu);

// Two-sided p for a t statistic: P(|T| >= |t|).
double student_t_two_sided_p(double t, double nu);

// Upper-quantile: smallest q with P(T <= q) = prob, by bisection.
double student_t_quantile(double prob, double nu);

// Standard normal CDF.
double normal_cdf(double z);

}  // namespace silico::stats
