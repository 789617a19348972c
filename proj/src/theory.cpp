#include "darwin/theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "darwin/accum.hpp"
#include "darwin/concurrency.hpp"
#include "darwin/errors.hpp"
#include "darwin/quadrature.hpp"
#include "darwin/stats.hpp"

namespace darwin {

namespace {

struct MomentIntegrals {
  double first = 0.0;
  double second = 0.0;
  double error = 0.0;
  bool converged = false;
};

// E[g] and E[g^2] for g(x) = log|phi + x sqrt(alpha)| under the innovation
// density, by tanh-sinh quadrature split at the log singularity and at 0.
MomentIntegrals quadrature_moments(const DarwinParams& params, Innovation spec,
                                   double tol, int max_level, bool second_moment) {
  const double sqrt_alpha = std::sqrt(params.alpha);
  const double singular = -params.phi / sqrt_alpha;

  auto integrand = [&](double power) {
    return [power, sqrt_alpha, spec, phi = params.phi](double x) {
      const double f = density(spec, x);
      if (f <= 0.0) return 0.0;  // tail underflow: nothing left to add
      const double g = std::log(std::abs(phi + x * sqrt_alpha));
      return (power == 1.0 ? g : g * g) * f;
    };
  };

  quad::Options qopts;
  qopts.rel_tol = tol;
  qopts.abs_tol = tol;
  qopts.max_level = max_level;

  MomentIntegrals m;
  const auto i1 = quad::integrate_real_line(integrand(1.0), {singular, 0.0}, qopts);
  m.first = i1.value;
  m.error = i1.error;
  m.converged = i1.converged;
  if (second_moment) {
    const auto i2 = quad::integrate_real_line(integrand(2.0), {singular, 0.0}, qopts);
    m.second = i2.value;
    m.error = std::max(m.error, i2.error + 2.0 * std::abs(m.first) * i1.error);
    m.converged = m.converged && i2.converged;
  }
  return m;
}

LyapunovProfile montecarlo_moments(const DarwinParams& params, Innovation spec,
                                   const LyapunovOptions& opts) {
  const double sqrt_alpha = std::sqrt(params.alpha);
  const std::uint64_t draws = std::max<std::uint64_t>(opts.mc_draws, 1000);

  // Fixed chunking: the reduction order is chunk index, independent of the
  // worker count, so results are reproducible for any parallelism.
  constexpr std::uint64_t kChunks = 64;
  const std::uint64_t per_chunk = (draws + kChunks - 1) / kChunks;
  std::vector<double> chunk_sum(kChunks, 0.0);
  std::vector<double> chunk_sum_sq(kChunks, 0.0);
  std::vector<std::uint64_t> chunk_count(kChunks, 0);

  parallel_for(kChunks, opts.workers, [&](std::size_t c) {
    Rng rng(opts.mc_seed, {0x4C59, static_cast<std::uint64_t>(c)});
    const std::uint64_t lo = static_cast<std::uint64_t>(c) * per_chunk;
    const std::uint64_t hi = std::min(draws, lo + per_chunk);
    CompensatedSum s1, s2;
    for (std::uint64_t i = lo; i < hi; ++i) {
      const double g = std::log(std::abs(params.phi + draw(spec, rng) * sqrt_alpha));
      s1.add(g);
      s2.add(g * g);
    }
    chunk_sum[c] = s1.value();
    chunk_sum_sq[c] = s2.value();
    chunk_count[c] = hi > lo ? hi - lo : 0;
  });

  CompensatedSum s1, s2;
  std::uint64_t count = 0;
  for (std::size_t c = 0; c < kChunks; ++c) {
    s1.add(chunk_sum[c]);
    s2.add(chunk_sum_sq[c]);
    count += chunk_count[c];
  }

  const double nd = static_cast<double>(count);
  LyapunovProfile profile;
  profile.method = LyapunovMethod::MonteCarlo;
  profile.gamma0 = s1.value() / nd;
  profile.sigma2 = s2.value() / nd - profile.gamma0 * profile.gamma0;
  profile.err_estimate = std::sqrt(std::max(profile.sigma2, 0.0) / nd);
  return profile;
}

}  // namespace

LyapunovProfile lyapunov_moments(const DarwinParams& params, Innovation spec,
                                 const LyapunovOptions& opts) {
  params.validate();
  if (opts.method == LyapunovMethod::MonteCarlo) {
    return montecarlo_moments(params, spec, opts);
  }
  const MomentIntegrals m =
      quadrature_moments(params, spec, opts.quad_tol, opts.quad_max_level, true);
  if (!m.converged) {
    LyapunovProfile profile = montecarlo_moments(params, spec, opts);
    profile.fell_back = true;
    return profile;
  }
  LyapunovProfile profile;
  profile.method = LyapunovMethod::Quadrature;
  profile.gamma0 = m.first;
  profile.sigma2 = m.second - m.first * m.first;
  profile.err_estimate = m.error;
  if (!(profile.sigma2 > 0.0)) {
    throw numeric_error("lyapunov_moments: computed variance is not positive");
  }
  return profile;
}

double lyapunov_gamma(const DarwinParams& params, Innovation spec, double tol) {
  params.validate();
  const MomentIntegrals m = quadrature_moments(params, spec, tol, 12, false);
  if (!m.converged) {
    throw numeric_error("lyapunov_gamma: quadrature did not converge");
  }
  return m.first;
}

double calibrate_alpha(double phi, Innovation spec, double bracket_lo, double bracket_hi,
                       double gamma_tol) {
  if (!(bracket_lo > 0.0) || !(bracket_hi > bracket_lo)) {
    throw std::invalid_argument("calibrate_alpha: need 0 < bracket_lo < bracket_hi");
  }
  auto gamma_at = [&](double alpha) {
    return lyapunov_gamma({phi, alpha}, spec, std::min(gamma_tol * 1e-3, 1e-9));
  };

  double lo = bracket_lo, hi = bracket_hi;
  double flo = gamma_at(lo), fhi = gamma_at(hi);
  for (int expand = 0; expand < 6 && flo * fhi > 0.0; ++expand) {
    if (flo > 0.0) {
      lo *= 1e-3;
      flo = gamma_at(lo);
    } else {
      hi *= 10.0;
      fhi = gamma_at(hi);
    }
  }
  if (flo * fhi > 0.0) {
    throw numeric_error("calibrate_alpha: no stability boundary in range");
  }
  if (std::abs(flo) < gamma_tol) return lo;
  if (std::abs(fhi) < gamma_tol) return hi;

  // Bisection with a secant proposal each round; the bracket always shrinks.
  double a = lo, fa = flo, b = hi, fb = fhi;
  for (int iter = 0; iter < 200; ++iter) {
    double c = b - fb * (b - a) / (fb - fa);
    const double mid = 0.5 * (a + b);
    if (!std::isfinite(c) || c <= a || c >= b) c = mid;
    // alternate toward bisection if the secant point hugs one end
    if (std::min(c - a, b - c) < 0.01 * (b - a)) c = 0.5 * (c + mid);
    const double fc = gamma_at(c);
    if (std::abs(fc) < gamma_tol) return c;
    if (fa * fc < 0.0) {
      b = c;
      fb = fc;
    } else {
      a = c;
      fa = fc;
    }
    if (b - a < 1e-13 * std::max(1.0, b)) break;
  }
  throw numeric_error("calibrate_alpha: root refinement did not reach tolerance");
}

AsymptoticSd asymptotic_sd(double alpha0, double kappa4, double sigma2_gamma,
                           std::size_t n) {
  if (n == 0) throw std::invalid_argument("asymptotic_sd: n must be at least 1");
  if (!(alpha0 > 0.0) || !(kappa4 >= 1.0) || !(sigma2_gamma >= 0.0)) {
    throw std::invalid_argument("asymptotic_sd: need alpha0 > 0, kappa4 >= 1, sigma2 >= 0");
  }
  const double nd = static_cast<double>(n);
  AsymptoticSd sd;
  sd.sd_phi = std::sqrt(alpha0 / nd);
  sd.sd_alpha = alpha0 * std::sqrt((kappa4 - 1.0) / nd);
  sd.sd_gamma = std::sqrt(sigma2_gamma / nd);
  return sd;
}

AsymptoticSd asymptotic_sd(const DarwinParams& params, Innovation spec, std::size_t n) {
  const LyapunovProfile profile = lyapunov_moments(params, spec);
  return asymptotic_sd(params.alpha, kurtosis(spec), profile.sigma2, n);
}

CltReport clt_path_check(const DarwinParams& params, Innovation spec,
                         const CltOptions& opts) {
  params.validate();
  if (opts.n < 500 || opts.replications < 500) {
    throw std::invalid_argument("clt_path_check: need n >= 500 and replications >= 500");
  }
  if (opts.s_grid.empty()) throw std::invalid_argument("clt_path_check: empty s grid");
  for (std::size_t j = 0; j < opts.s_grid.size(); ++j) {
    const double s = opts.s_grid[j];
    if (!(s > 0.0) || s > 1.0 || (j > 0 && s <= opts.s_grid[j - 1])) {
      throw std::invalid_argument(
          "clt_path_check: s grid must be strictly increasing inside (0,1]");
    }
  }

  CltReport report;
  report.params = params;
  report.spec = spec;
  report.profile = lyapunov_moments(params, spec);
  report.n = opts.n;
  report.replications = opts.replications;

  const double gamma0 = report.profile.gamma0;
  const double sigma2 = report.profile.sigma2;
  const std::size_t G = opts.s_grid.size();
  const double sqrt_n = std::sqrt(static_cast<double>(opts.n));

  std::vector<std::size_t> cut(G);
  for (std::size_t j = 0; j < G; ++j) {
    cut[j] = static_cast<std::size_t>(std::floor(static_cast<double>(opts.n) * opts.s_grid[j]));
    if (cut[j] == 0) {
      throw std::invalid_argument("clt_path_check: grid point below 1/n has no sample");
    }
  }

  std::vector<double> z(opts.replications * G);
  parallel_for(opts.replications, opts.workers, [&](std::size_t m) {
    const Path path = simulate_auxiliary(params, spec, opts.n, 1.0, opts.seed,
                                         {0xC17, static_cast<std::uint64_t>(m)});
    for (std::size_t j = 0; j < G; ++j) {
      const double la = path.logabs[cut[j]];
      z[m * G + j] = (la - static_cast<double>(cut[j]) * gamma0) / sqrt_n;
    }
  });

  report.points.resize(G);
  report.all_pass = true;
  for (std::size_t j = 0; j < G; ++j) {
    CltPoint& pt = report.points[j];
    pt.s = opts.s_grid[j];
    pt.target_variance =
        sigma2 * static_cast<double>(cut[j]) / static_cast<double>(opts.n);

    std::vector<double> col(opts.replications);
    for (std::size_t m = 0; m < opts.replications; ++m) col[m] = z[m * G + j];
    const double mean = compensated_mean(col);
    CompensatedSum ss;
    for (double v : col) ss.add((v - mean) * (v - mean));
    pt.variance = ss.value() / static_cast<double>(opts.replications - 1);

    const double scale = std::sqrt(pt.target_variance);
    std::vector<double> standardized(col.size());
    for (std::size_t m = 0; m < col.size(); ++m) standardized[m] = col[m] / scale;
    const auto ks = stats::ks_test(std::move(standardized), stats::normal_cdf);
    pt.ks_stat = ks.stat;
    pt.ks_p = ks.p_value;

    if (j > 0) {
      // corr of Z(s_{j-1}) with the increment Z(s_j) - Z(s_{j-1})
      CompensatedSum num, den_a, den_b;
      double mean_prev = 0.0, mean_inc = 0.0;
      {
        CompensatedSum mp, mi;
        for (std::size_t m = 0; m < opts.replications; ++m) {
          mp.add(z[m * G + j - 1]);
          mi.add(z[m * G + j] - z[m * G + j - 1]);
        }
        mean_prev = mp.value() / static_cast<double>(opts.replications);
        mean_inc = mi.value() / static_cast<double>(opts.replications);
      }
      for (std::size_t m = 0; m < opts.replications; ++m) {
        const double da = z[m * G + j - 1] - mean_prev;
        const double db = (z[m * G + j] - z[m * G + j - 1]) - mean_inc;
        num.add(da * db);
        den_a.add(da * da);
        den_b.add(db * db);
      }
      pt.corr_prev_increment = num.value() / std::sqrt(den_a.value() * den_b.value());
    }

    const bool var_ok =
        std::abs(pt.variance - pt.target_variance) <= opts.var_rtol * pt.target_variance;
    pt.pass = (pt.ks_p >= opts.ks_level) && var_ok;
    report.all_pass = report.all_pass && pt.pass;
  }
  return report;
}

}  // namespace darwin
