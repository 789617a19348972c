#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace darwin::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;  // |last refinement delta|, a conservative error gauge
  bool converged = false;
  std::size_t evaluations = 0;
};

struct Options {
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  int max_level = 12;
};

// Tanh-sinh (double-exponential) rule on a finite interval. Integrable
// endpoint singularities are fine: nodes cluster double-exponentially at the
// endpoints and non-finite integrand values there carry negligible weight
// and are dropped.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& opts = {});

// Integral over the whole real line. Interior singular or kink points go in
// `breakpoints`; each becomes a subinterval endpoint. The two infinite tails
// are mapped onto (0,1) with x = c +- u/(1-u).
Result integrate_real_line(const std::function<double(double)>& f,
                           std::vector<double> breakpoints, const Options& opts = {});

}  // namespace darwin::quad
