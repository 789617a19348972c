#pragma once

#include <cstdint>
#include <vector>

#include "darwin/process.hpp"

namespace darwin {

enum class LyapunovMethod { Quadrature, MonteCarlo };

// Theoretical top Lyapunov exponent gamma0 = E log|phi + eta*sqrt(alpha)| and
// its variance, with how they were obtained and an error gauge (quadrature
// refinement delta, or the Monte Carlo standard error of gamma0).
struct LyapunovProfile {
  double gamma0 = 0.0;
  double sigma2 = 0.0;
  LyapunovMethod method = LyapunovMethod::Quadrature;
  double err_estimate = 0.0;
  bool fell_back = false;  // quadrature did not converge; Monte Carlo result reported
};

struct LyapunovOptions {
  LyapunovMethod method = LyapunovMethod::Quadrature;
  std::uint64_t mc_draws = 10'000'000;
  std::uint64_t mc_seed = 1;
  unsigned workers = 0;
  double quad_tol = 1e-11;
  int quad_max_level = 12;
};

// The integrand log|phi + x sqrt(alpha)| has an integrable log singularity at
// x = -phi/sqrt(alpha); the quadrature splits there (and at 0) so the
// double-exponential rule sees singularities only at interval endpoints.
LyapunovProfile lyapunov_moments(const DarwinParams& params, Innovation spec,
                                 const LyapunovOptions& opts = {});

// gamma0 alone (first moment), via quadrature. Used by calibration.
double lyapunov_gamma(const DarwinParams& params, Innovation spec, double tol = 1e-11);

// Root of alpha -> gamma0(phi, alpha) inside the bracket, located by
// bisection with secant acceleration to |gamma0| < gamma_tol. The bracket
// expands geometrically when the endpoints do not straddle zero.
double calibrate_alpha(double phi, Innovation spec, double bracket_lo = 1e-6,
                       double bracket_hi = 1e3, double gamma_tol = 1e-6);

struct AsymptoticSd {
  double sd_phi = 0.0;    // sqrt(alpha0 / n)
  double sd_alpha = 0.0;  // alpha0 * sqrt((kappa4 - 1) / n)
  double sd_gamma = 0.0;  // sqrt(sigma2_gamma0 / n)
};

AsymptoticSd asymptotic_sd(double alpha0, double kappa4, double sigma2_gamma, std::size_t n);
AsymptoticSd asymptotic_sd(const DarwinParams& params, Innovation spec, std::size_t n);

struct CltOptions {
  std::size_t n = 2000;
  std::size_t replications = 1000;
  std::vector<double> s_grid = {0.25, 0.5, 0.75, 1.0};
  std::uint64_t seed = 1;
  double ks_level = 0.01;   // KS non-rejection level per grid point
  double var_rtol = 0.15;   // |var - sigma2*s| <= rtol * sigma2*s
  unsigned workers = 0;
};

struct CltPoint {
  double s = 0.0;
  double variance = 0.0;         // empirical Var Z_n(s) across replications
  double target_variance = 0.0;  // sigma2 * [ns]/n
  double ks_stat = 0.0;
  double ks_p = 0.0;
  // corr(Z(s_{j-1}), Z(s_j) - Z(s_{j-1})); 0 by convention at the first point
  double corr_prev_increment = 0.0;
  bool pass = false;
};

struct CltReport {
  DarwinParams params;
  Innovation spec = Innovation::Gaussian;
  LyapunovProfile profile;
  std::size_t n = 0;
  std::size_t replications = 0;
  std::vector<CltPoint> points;
  bool all_pass = false;
};

// Functional-CLT check: Z_n(s) = (log x_{[ns]} - [ns]*gamma0)/sqrt(n) on the
// auxiliary process started at x0 = 1, across replications. Per grid point:
// empirical variance vs sigma2*s, KS of Z/sqrt(sigma2*s) against N(0,1), and
// the increment-independence correlation.
CltReport clt_path_check(const DarwinParams& params, Innovation spec,
                         const CltOptions& opts = {});

}  // namespace darwin
