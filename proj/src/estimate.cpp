#include "darwin/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "darwin/accum.hpp"
#include "darwin/errors.hpp"
#include "darwin/stats.hpp"

namespace darwin {

namespace {

// Relative floor below which a sample second moment counts as exactly zero
// (all inputs identical up to rounding).
constexpr double kDegenerateRel = 64.0 * 2.220446049250313e-16 * 2.220446049250313e-16;

double two_sided_normal_p(double t) { return 2.0 * stats::normal_cdf(-std::abs(t)); }

}  // namespace

StabilityReport lyapunov_estimate_from_logratios(std::span<const double> log_ratios) {
  const std::size_t n = log_ratios.size();
  if (n < 1) throw std::invalid_argument("lyapunov_estimate: need at least one ratio");

  CompensatedSum s1, s2;
  for (double v : log_ratios) {
    s1.add(v);
    s2.add(v * v);
  }
  const double nd = static_cast<double>(n);
  const double mean = s1.value() / nd;
  const double mean_sq = s2.value() / nd;
  const double sigma2 = mean_sq - mean * mean;

  if (!(sigma2 > kDegenerateRel * std::max(mean_sq, 1.0))) {
    throw numeric_error("lyapunov_estimate: degenerate variance (all log-ratios equal)");
  }

  StabilityReport report;
  report.n = n;
  report.gamma_hat = mean;
  report.sigma2_hat = sigma2;
  report.t_stat = std::sqrt(nd) * mean / std::sqrt(sigma2);
  report.p_value = two_sided_normal_p(report.t_stat);
  return report;
}

StabilityReport lyapunov_estimate(const Series& series) {
  const auto lr = log_abs_ratios(series);
  return lyapunov_estimate_from_logratios(lr);
}

StabilityReport lyapunov_estimate(const Path& path) {
  const auto lr = log_abs_ratios(path);
  return lyapunov_estimate_from_logratios(lr);
}

QmleFit qmle_fit_from_ratios(std::span<const double> r) {
  const std::size_t n = r.size();
  if (n < 2) throw std::invalid_argument("qmle_fit: need at least two ratios");

  CompensatedSum sum_r, sum_r2;
  for (double v : r) {
    sum_r.add(v);
    sum_r2.add(v * v);
  }
  const double nd = static_cast<double>(n);
  const double phi = sum_r.value() / nd;

  CompensatedSum sum_dev2;
  for (double v : r) {
    const double d = v - phi;
    sum_dev2.add(d * d);
  }
  const double alpha = sum_dev2.value() / nd;
  if (!(alpha > kDegenerateRel * std::max(sum_r2.value() / nd, 1.0))) {
    throw numeric_error("qmle_fit: degenerate alpha (all ratios equal)");
  }

  QmleFit fit;
  fit.n = n;
  fit.phi_hat = phi;
  fit.alpha_hat = alpha;
  fit.alpha_star = nd / (nd - 1.0) * alpha;

  const double inv_sd = 1.0 / std::sqrt(alpha);
  fit.residuals.resize(n);
  CompensatedSum sum_eta4;
  for (std::size_t t = 0; t < n; ++t) {
    const double eta = (r[t] - phi) * inv_sd;
    fit.residuals[t] = eta;
    const double eta2 = eta * eta;
    sum_eta4.add(eta2 * eta2);
  }
  fit.kappa_hat = sum_eta4.value() / nd;

  fit.sigma_phi = alpha;
  fit.sigma_alpha = (fit.kappa_hat - 1.0) * alpha * alpha;
  fit.se_phi = std::sqrt(fit.sigma_phi / nd);
  fit.se_alpha = std::sqrt(std::max(fit.sigma_alpha, 0.0) / nd);
  return fit;
}

QmleFit qmle_fit(const Series& series) {
  if (series.values().size() < 3) {
    throw std::invalid_argument("qmle_fit: need at least three observations");
  }
  const auto r = ratios(series);
  return qmle_fit_from_ratios(r);
}

QmleFit qmle_fit(const Path& path) {
  if (path.steps() < 2) throw std::invalid_argument("qmle_fit: need at least two steps");
  const auto r = ratios(path);
  return qmle_fit_from_ratios(r);
}

WaldReport wald_test(const QmleFit& fit,
                     const std::vector<std::array<double, 2>>& constraint_matrix,
                     const std::vector<double>& constraint_value) {
  const std::size_t s = constraint_matrix.size();
  if (s < 1 || s > 2 || constraint_value.size() != s) {
    throw std::invalid_argument("wald_test: constraint must have 1 or 2 rows, matching r");
  }

  const double theta[2] = {fit.phi_hat, fit.alpha_hat};
  const double sigma[2] = {fit.sigma_phi, fit.sigma_alpha};

  // v = Gamma * theta - r
  double v[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < s; ++i) {
    v[i] = constraint_matrix[i][0] * theta[0] + constraint_matrix[i][1] * theta[1] -
           constraint_value[i];
  }

  // M = Gamma * Sigma * Gamma^T
  double m[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      m[i][j] = constraint_matrix[i][0] * sigma[0] * constraint_matrix[j][0] +
                constraint_matrix[i][1] * sigma[1] * constraint_matrix[j][1];
    }
  }

  double quad = 0.0;
  if (s == 1) {
    if (constraint_matrix[0][0] == 0.0 && constraint_matrix[0][1] == 0.0) {
      throw std::invalid_argument("wald_test: zero constraint row");
    }
    if (!(m[0][0] > 0.0)) throw numeric_error("wald_test: singular constraint covariance");
    quad = v[0] * v[0] / m[0][0];
  } else {
    const double det_gamma = constraint_matrix[0][0] * constraint_matrix[1][1] -
                             constraint_matrix[0][1] * constraint_matrix[1][0];
    if (det_gamma == 0.0) throw std::invalid_argument("wald_test: rank-deficient constraint");
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    const double scale = std::max({std::abs(m[0][0]), std::abs(m[1][1]), 1e-300});
    if (!(std::abs(det) > 1e-14 * scale * scale)) {
      throw numeric_error("wald_test: singular constraint covariance");
    }
    // v^T M^{-1} v with the 2x2 inverse written out
    quad = (v[0] * (m[1][1] * v[0] - m[0][1] * v[1]) +
            v[1] * (m[0][0] * v[1] - m[1][0] * v[0])) /
           det;
  }

  WaldReport report;
  report.df = s;
  report.w_stat = std::max(static_cast<double>(fit.n) * quad, 0.0);
  report.p_value = stats::chi2_sf(report.w_stat, static_cast<double>(s));
  report.constraint_matrix = constraint_matrix;
  report.constraint_value = constraint_value;
  return report;
}

std::vector<double> residual_acf(std::span<const double> residuals, std::size_t max_lag,
                                 bool squared) {
  const std::size_t n = residuals.size();
  if (max_lag < 1) throw std::invalid_argument("residual_acf: max_lag must be at least 1");
  if (max_lag >= n) {
    throw std::invalid_argument("residual_acf: max_lag must be below the residual count");
  }

  std::vector<double> x(residuals.begin(), residuals.end());
  if (squared) {
    for (auto& v : x) v *= v;
  }
  const double mean = compensated_mean(x);
  CompensatedSum denom_acc;
  for (double v : x) denom_acc.add((v - mean) * (v - mean));
  const double denom = denom_acc.value();
  CompensatedSum scale_acc;
  for (double v : x) scale_acc.add(v * v);
  if (!(denom > kDegenerateRel * std::max(scale_acc.value(), 1.0))) {
    throw numeric_error("residual_acf: zero variance");
  }

  std::vector<double> acf(max_lag);
  for (std::size_t k = 1; k <= max_lag; ++k) {
    CompensatedSum num;
    for (std::size_t t = k; t < n; ++t) {
      num.add((x[t] - mean) * (x[t - k] - mean));
    }
    acf[k - 1] = num.value() / denom;
  }
  return acf;
}

std::vector<double> pacf_from_acf(std::span<const double> acf) {
  const std::size_t K = acf.size();
  std::vector<double> pacf(K, 0.0);
  if (K == 0) return pacf;

  std::vector<double> phi_prev(K + 1, 0.0), phi_cur(K + 1, 0.0);
  pacf[0] = acf[0];
  phi_prev[1] = acf[0];
  for (std::size_t k = 2; k <= K; ++k) {
    double num = acf[k - 1];
    double den = 1.0;
    for (std::size_t j = 1; j < k; ++j) {
      num -= phi_prev[j] * acf[k - 1 - j];
      den -= phi_prev[j] * acf[j - 1];
    }
    if (den == 0.0) throw numeric_error("pacf_from_acf: Durbin-Levinson breakdown");
    const double phi_kk = num / den;
    for (std::size_t j = 1; j < k; ++j) {
      phi_cur[j] = phi_prev[j] - phi_kk * phi_prev[k - j];
    }
    phi_cur[k] = phi_kk;
    pacf[k - 1] = phi_kk;
    std::copy(phi_cur.begin(), phi_cur.begin() + static_cast<std::ptrdiff_t>(k) + 1,
              phi_prev.begin());
  }
  return pacf;
}

PluginLyapunov plugin_lyapunov(const QmleFit& fit) {
  const double sqrt_alpha = std::sqrt(fit.alpha_hat);
  PluginLyapunov out;
  CompensatedSum sum;
  for (double eta : fit.residuals) {
    const double arg = fit.phi_hat + eta * sqrt_alpha;
    if (arg == 0.0) {
      ++out.skipped;
      continue;
    }
    sum.add(std::log(std::abs(arg)));
  }
  const std::size_t kept = fit.residuals.size() - out.skipped;
  if (kept == 0) throw numeric_error("plugin_lyapunov: every term was singular");
  out.value = sum.value() / static_cast<double>(kept);
  return out;
}

double dar_loglik(const Series& series, const DarParams& params) {
  params.validate();
  const auto& y = series.values();
  CompensatedSum acc;
  for (std::size_t t = 1; t < y.size(); ++t) {
    const double v = params.omega + params.alpha * y[t - 1] * y[t - 1];
    if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
    const double u = y[t] - params.phi * y[t - 1];
    acc.add(-0.5 * (std::log(v) + u * u / v));
  }
  return acc.value();
}

namespace {

struct SimplexPoint {
  std::array<double, 3> x;  // (phi, log omega, log alpha)
  double f;                 // negative mean loglik
};

DarParams decode(const std::array<double, 3>& x) {
  return {x[0], std::exp(x[1]), std::exp(x[2])};
}

// 3x3 symmetric solve by Gauss elimination with partial pivoting; returns
// false when effectively singular.
bool invert3(const double a[3][3], double inv[3][3]) {
  double m[3][6];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[i][j] = a[i][j];
    for (int j = 0; j < 3; ++j) m[i][3 + j] = i == j ? 1.0 : 0.0;
  }
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) < 1e-300) return false;
    if (pivot != col) std::swap(m[pivot], m[col]);
    const double inv_p = 1.0 / m[col][col];
    for (int j = 0; j < 6; ++j) m[col][j] *= inv_p;
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double factor = m[r][col];
      for (int j = 0; j < 6; ++j) m[r][j] -= factor * m[col][j];
    }
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) inv[i][j] = m[i][3 + j];
  }
  return true;
}

// Sandwich standard errors from numerically differentiated per-observation
// scores and the Hessian of the mean loglik, both in original coordinates.
std::array<double, 3> sandwich_se(const Series& series, const DarParams& at) {
  const std::array<double, 3> lambda{at.phi, at.omega, at.alpha};
  std::array<double, 3> h;
  for (int i = 0; i < 3; ++i) h[i] = 1e-5 * std::max(std::abs(lambda[i]), 1e-8);

  const auto& y = series.values();
  const std::size_t n = y.size() - 1;
  const double nd = static_cast<double>(n);

  auto loglik_t = [&y](const std::array<double, 3>& lam, std::size_t t) {
    const double v = lam[1] + lam[2] * y[t - 1] * y[t - 1];
    if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
    const double u = y[t] - lam[0] * y[t - 1];
    return -0.5 * (std::log(v) + u * u / v);
  };

  const std::array<double, 3> nan_se{std::numeric_limits<double>::quiet_NaN(),
                                     std::numeric_limits<double>::quiet_NaN(),
                                     std::numeric_limits<double>::quiet_NaN()};

  // B = mean of score outer products
  double b[3][3] = {};
  for (std::size_t t = 1; t <= n; ++t) {
    double grad[3];
    for (int i = 0; i < 3; ++i) {
      auto lp = lambda, lm = lambda;
      lp[i] += h[i];
      lm[i] -= h[i];
      if (i > 0 && lm[i] <= 0.0) lm[i] = lambda[i];  // one-sided at the boundary
      const double denom = lp[i] - lm[i];
      grad[i] = (loglik_t(lp, t) - loglik_t(lm, t)) / denom;
      if (!std::isfinite(grad[i])) return nan_se;
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) b[i][j] += grad[i] * grad[j];
    }
  }
  for (auto& row : b) {
    for (auto& vv : row) vv /= nd;
  }

  // A = -Hessian of the mean loglik
  auto mean_loglik = [&](const std::array<double, 3>& lam) {
    CompensatedSum acc;
    for (std::size_t t = 1; t <= n; ++t) acc.add(loglik_t(lam, t));
    return acc.value() / nd;
  };
  double a[3][3];
  const double f0 = mean_loglik(lambda);
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      double val;
      if (i == j) {
        auto lp = lambda, lm = lambda;
        lp[i] += h[i];
        lm[i] -= h[i];
        if (i > 0 && lm[i] <= 0.0) return nan_se;
        val = (mean_loglik(lp) - 2.0 * f0 + mean_loglik(lm)) / (h[i] * h[i]);
      } else {
        auto lpp = lambda, lpm = lambda, lmp = lambda, lmm = lambda;
        lpp[i] += h[i]; lpp[j] += h[j];
        lpm[i] += h[i]; lpm[j] -= h[j];
        lmp[i] -= h[i]; lmp[j] += h[j];
        lmm[i] -= h[i]; lmm[j] -= h[j];
        if ((i > 0 && (lmp[i] <= 0.0 || lmm[i] <= 0.0)) ||
            (j > 0 && (lpm[j] <= 0.0 || lmm[j] <= 0.0))) {
          return nan_se;
        }
        val = (mean_loglik(lpp) - mean_loglik(lpm) - mean_loglik(lmp) + mean_loglik(lmm)) /
              (4.0 * h[i] * h[j]);
      }
      a[i][j] = -val;
      a[j][i] = -val;
    }
  }

  double a_inv[3][3];
  if (!invert3(a, a_inv)) return nan_se;

  // cov = A^{-1} B A^{-1} / n
  double ab[3][3] = {};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) ab[i][j] += a_inv[i][k] * b[k][j];
    }
  }
  std::array<double, 3> se;
  for (int i = 0; i < 3; ++i) {
    double cov_ii = 0.0;
    for (int k = 0; k < 3; ++k) cov_ii += ab[i][k] * a_inv[k][i];
    cov_ii /= nd;
    se[i] = cov_ii > 0.0 ? std::sqrt(cov_ii) : std::numeric_limits<double>::quiet_NaN();
  }
  return se;
}

}  // namespace

DarFit dar_qmle_fit(const Series& series, const DarParams& init, const DarFitOptions& opts) {
  init.validate();
  if (series.step_count() < 10) {
    throw std::invalid_argument("dar_qmle_fit: need at least ten transitions");
  }

  // Scale-aware floors keep the log reparameterization finite at omega = 0.
  CompensatedSum msq_acc;
  for (double v : series.values()) msq_acc.add(v * v);
  const double mean_sq = msq_acc.value() / static_cast<double>(series.values().size());
  const double omega_floor = 1e-10 * std::max(mean_sq, 1e-300);

  auto objective = [&series](const std::array<double, 3>& x) {
    const double ll = dar_loglik(series, decode(x));
    return std::isfinite(ll) ? -ll / static_cast<double>(series.step_count())
                             : std::numeric_limits<double>::infinity();
  };

  std::array<double, 3> x0{init.phi, std::log(std::max(init.omega, omega_floor)),
                           std::log(std::max(init.alpha, 1e-10))};

  // Nelder-Mead with standard coefficients.
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
  std::array<SimplexPoint, 4> simplex;
  simplex[0] = {x0, objective(x0)};
  const std::array<double, 3> step{0.25, 1.0, 0.5};
  for (int i = 0; i < 3; ++i) {
    auto x = x0;
    x[static_cast<std::size_t>(i)] += step[static_cast<std::size_t>(i)];
    simplex[static_cast<std::size_t>(i) + 1] = {x, objective(x)};
  }

  std::size_t iterations = 0;
  bool converged = false;
  auto order = [&simplex] {
    std::sort(simplex.begin(), simplex.end(),
              [](const SimplexPoint& a, const SimplexPoint& b) { return a.f < b.f; });
  };
  order();

  for (; iterations < opts.max_iterations; ++iterations) {
    if (std::abs(simplex[3].f - simplex[0].f) <=
        opts.f_tol * (std::abs(simplex[0].f) + opts.f_tol)) {
      converged = true;
      break;
    }
    std::array<double, 3> centroid{};
    for (int i = 0; i < 3; ++i) {
      for (int d = 0; d < 3; ++d) centroid[d] += simplex[i].x[d] / 3.0;
    }
    auto blend = [&centroid](const std::array<double, 3>& far, double coef) {
      std::array<double, 3> out;
      for (int d = 0; d < 3; ++d) out[d] = centroid[d] + coef * (centroid[d] - far[d]);
      return out;
    };

    const auto xr = blend(simplex[3].x, kReflect);
    const double fr = objective(xr);
    if (fr < simplex[0].f) {
      const auto xe = blend(simplex[3].x, kExpand);
      const double fe = objective(xe);
      simplex[3] = fe < fr ? SimplexPoint{xe, fe} : SimplexPoint{xr, fr};
    } else if (fr < simplex[2].f) {
      simplex[3] = {xr, fr};
    } else {
      const bool outside = fr < simplex[3].f;
      const auto xc = outside ? blend(simplex[3].x, kContract)
                              : blend(simplex[3].x, -kContract);
      const double fc = objective(xc);
      if (fc < (outside ? fr : simplex[3].f)) {
        simplex[3] = {xc, fc};
      } else {
        for (int i = 1; i < 4; ++i) {
          for (int d = 0; d < 3; ++d) {
            simplex[i].x[d] = simplex[0].x[d] + kShrink * (simplex[i].x[d] - simplex[0].x[d]);
          }
          simplex[i].f = objective(simplex[i].x);
        }
      }
    }
    order();
  }

  DarFit fit;
  fit.params = decode(simplex[0].x);
  fit.loglik = dar_loglik(series, fit.params);
  fit.converged = converged;
  fit.iterations = iterations;
  fit.se = sandwich_se(series, fit.params);
  return fit;
}

}  // namespace darwin
