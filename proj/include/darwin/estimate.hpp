#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "darwin/process.hpp"

namespace darwin {

// Lyapunov-exponent estimate and random-walk stability test.
struct StabilityReport {
  double gamma_hat = 0.0;
  double sigma2_hat = 0.0;
  double t_stat = 0.0;   // sqrt(n) * gamma_hat / sigma_hat
  double p_value = 1.0;  // two-sided against N(0,1)
  std::size_t n = 0;
};

StabilityReport lyapunov_estimate(const Series& series);
StabilityReport lyapunov_estimate(const Path& path);
StabilityReport lyapunov_estimate_from_logratios(std::span<const double> log_abs_ratios);

// Closed-form QMLE of (phi, alpha) from the ratio sequence r_t = y_t/y_{t-1}:
// phi_hat is the ratio mean, alpha_hat the (biased) ratio variance. Residuals
// sum to zero and have unit mean square by construction.
struct QmleFit {
  double phi_hat = 0.0;
  double alpha_hat = 0.0;
  double alpha_star = 0.0;   // n/(n-1) * alpha_hat, the unbiased rescaling
  double kappa_hat = 0.0;    // fourth moment of the residuals
  double sigma_phi = 0.0;    // Sigma_11 = alpha_hat
  double sigma_alpha = 0.0;  // Sigma_22 = (kappa_hat - 1) * alpha_hat^2
  double se_phi = 0.0;
  double se_alpha = 0.0;
  std::vector<double> residuals;
  std::size_t n = 0;
};

QmleFit qmle_fit(const Series& series);
QmleFit qmle_fit(const Path& path);
QmleFit qmle_fit_from_ratios(std::span<const double> ratios);

// Wald test of Gamma * theta = r where theta = (phi, alpha), s in {1, 2}
// restriction rows; p-value against chi-square(s).
struct WaldReport {
  double w_stat = 0.0;
  std::size_t df = 0;
  double p_value = 1.0;
  std::vector<std::array<double, 2>> constraint_matrix;
  std::vector<double> constraint_value;
};

WaldReport wald_test(const QmleFit& fit,
                     const std::vector<std::array<double, 2>>& constraint_matrix,
                     const std::vector<double>& constraint_value);

// Lag-1..max_lag autocorrelations of the residuals (or squared residuals
// when `squared`), centered on the residual mean. No confidence bands are
// attached: their asymptotics are not available for this model.
std::vector<double> residual_acf(std::span<const double> residuals, std::size_t max_lag,
                                 bool squared = false);

// Partial autocorrelations from an ACF sequence via Durbin-Levinson.
std::vector<double> pacf_from_acf(std::span<const double> acf);

// Plug-in Lyapunov estimate (point value only; no usable standard error
// exists for it). Terms with an exactly zero argument are skipped and
// counted.
struct PluginLyapunov {
  double value = 0.0;
  std::size_t skipped = 0;
};

PluginLyapunov plugin_lyapunov(const QmleFit& fit);

// Comparison fit of the full three-parameter model by numerically maximized
// Gaussian quasi-likelihood (Nelder-Mead in (phi, log omega, log alpha)).
struct DarFit {
  DarParams params;
  double loglik = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  std::array<double, 3> se{0.0, 0.0, 0.0};  // sandwich, comparison-grade
};

struct DarFitOptions {
  std::size_t max_iterations = 4000;
  double f_tol = 1e-12;
};

DarFit dar_qmle_fit(const Series& series, const DarParams& init,
                    const DarFitOptions& opts = {});

// Gaussian quasi-log-likelihood of the full model on a series (additive
// constants dropped).
double dar_loglik(const Series& series, const DarParams& params);

}  // namespace darwin
