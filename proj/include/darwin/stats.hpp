#pragma once

#include <functional>
#include <vector>

namespace darwin::stats {

double normal_pdf(double x);

// Standard normal CDF, absolute error below 1e-14 (erfc-based).
double normal_cdf(double x);

// Inverse of normal_cdf on (0,1). Hastings seed refined by Newton steps;
// accurate to a few ulp away from the extreme tails.
double normal_quantile(double p);

// Regularized incomplete gamma functions P(a,x) and Q(a,x) = 1 - P(a,x).
double lower_reg_gamma(double a, double x);
double upper_reg_gamma(double a, double x);

// Chi-square survival function with df degrees of freedom.
double chi2_sf(double x, double df);

// Tail probability of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_sf(double lambda);

struct KsResult {
  double stat;     // sup-norm distance
  double p_value;  // asymptotic Kolmogorov tail
};

// One-sample Kolmogorov-Smirnov test against a continuous CDF.
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

// Two-sample Kolmogorov-Smirnov test.
KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace darwin::stats
