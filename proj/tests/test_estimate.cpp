#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "darwin/accum.hpp"
#include "darwin/errors.hpp"
#include "darwin/estimate.hpp"
#include "darwin/stats.hpp"

using namespace darwin;

namespace {

Series scaled(const Series& s, double c) {
  std::vector<double> v = s.values();
  for (auto& x : v) x *= c;
  return Series(std::move(v));
}

// Stationary simulation of the full model in levels, for the comparison fit.
std::vector<double> simulate_dar_levels(const DarParams& p, std::size_t n, Rng& rng) {
  std::vector<double> y(n + 1);
  y[0] = 1.0;
  for (std::size_t t = 1; t <= n; ++t) {
    const double eta = draw_std_normal(rng);
    y[t] = p.phi * y[t - 1] + eta * std::sqrt(p.omega + p.alpha * y[t - 1] * y[t - 1]);
    if (y[t] == 0.0) y[t] = 1e-12;  // keep the series valid (probability ~0)
  }
  return y;
}

}  // namespace

TEST_CASE("stability report on the (1, e, e^3) hand example") {
  const Series s({1.0, std::exp(1.0), std::exp(3.0)});
  const StabilityReport r = lyapunov_estimate(s);
  CHECK(r.n == 2);
  CHECK(r.gamma_hat == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(r.sigma2_hat == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(r.t_stat == doctest::Approx(std::sqrt(2.0) * 1.5 / 0.5).epsilon(1e-10));
  CHECK(r.p_value ==
        doctest::Approx(2.0 * (1.0 - stats::normal_cdf(r.t_stat))).epsilon(1e-9));
}

TEST_CASE("identical log-ratios are a degenerate-variance error") {
  const Series s({1.0, std::exp(1.0), std::exp(2.0)});
  CHECK_THROWS_AS(lyapunov_estimate(s), numeric_error);
}

TEST_CASE("exponent estimator is centered with the predicted spread") {
  const std::size_t reps = 1000, n = 200;
  std::vector<double> gammas(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const Path path = simulate_darwin({0.5, 3.3058}, Innovation::Gaussian, n,
                                      InitialValue::random(), 101u, {r});
    gammas[r] = lyapunov_estimate(path).gamma_hat;
  }
  const double mean = compensated_mean(gammas);
  const double sd = sample_sd(gammas);
  CHECK(std::abs(mean) < 0.005);
  CHECK(std::abs(sd - 0.0785) < 0.1 * 0.0785);
}

TEST_CASE("qmle on the (1, 2, 1) hand example") {
  const Series s({1.0, 2.0, 1.0});
  const QmleFit fit = qmle_fit(s);
  CHECK(fit.n == 2);
  CHECK(fit.phi_hat == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(fit.alpha_hat == doctest::Approx(0.5625).epsilon(1e-12));
  CHECK(fit.alpha_star == doctest::Approx(1.125).epsilon(1e-12));
  CHECK(fit.kappa_hat == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(fit.residuals.size() == 2);
  CHECK(fit.residuals[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.residuals[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(fit.sigma_phi == doctest::Approx(0.5625).epsilon(1e-12));
  CHECK(fit.sigma_alpha == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fit.se_phi == doctest::Approx(std::sqrt(0.5625 / 2.0)).epsilon(1e-12));
}

TEST_CASE("identical ratios are a degenerate-alpha error") {
  CHECK_THROWS_AS(qmle_fit(Series({1.0, 2.0, 4.0, 8.0})), numeric_error);
}

TEST_CASE("residual identities hold to 1e-12 on random inputs") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Path path = simulate_darwin({0.4, 2.7}, Innovation::LaplaceStd, 400,
                                      InitialValue::random(), seed);
    const QmleFit fit = qmle_fit(path);
    CompensatedSum sum, sum_sq;
    for (double e : fit.residuals) {
      sum.add(e);
      sum_sq.add(e * e);
    }
    CHECK(std::abs(sum.value() / static_cast<double>(fit.n)) < 1e-12);
    CHECK(std::abs(sum_sq.value() / static_cast<double>(fit.n) - 1.0) < 1e-12);
  }
}

TEST_CASE("estimates are invariant under common rescaling of the series") {
  const Path path = simulate_darwin({0.5, 3.3058}, Innovation::Gaussian, 300,
                                    InitialValue::random(), 55u);
  const Series base(to_levels(path).values);
  const QmleFit fit0 = qmle_fit(base);
  const StabilityReport st0 = lyapunov_estimate(base);
  for (double c : {1e-6, 1e6}) {
    const Series s = scaled(base, c);
    const QmleFit fit = qmle_fit(s);
    CHECK(fit.phi_hat == doctest::Approx(fit0.phi_hat).epsilon(1e-12));
    CHECK(fit.alpha_hat == doctest::Approx(fit0.alpha_hat).epsilon(1e-12));
    CHECK(fit.kappa_hat == doctest::Approx(fit0.kappa_hat).epsilon(1e-12));
    const StabilityReport st = lyapunov_estimate(s);
    CHECK(st.gamma_hat == doctest::Approx(st0.gamma_hat).epsilon(1e-12));
    CHECK(st.t_stat == doctest::Approx(st0.t_stat).epsilon(1e-12));
    const WaldReport w0 = wald_test(fit0, {{1.0, 0.0}}, {0.0});
    const WaldReport w = wald_test(fit, {{1.0, 0.0}}, {0.0});
    CHECK(w.w_stat == doctest::Approx(w0.w_stat).epsilon(1e-12));
    const auto acf0 = residual_acf(fit0.residuals, 5);
    const auto acf = residual_acf(fit.residuals, 5);
    for (std::size_t k = 0; k < acf.size(); ++k) {
      CHECK(acf[k] == doctest::Approx(acf0[k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("ratio-based exponent equals the telescoped form") {
  const Path path = simulate_darwin({0.5, 3.1}, Innovation::Gaussian, 250,
                                    InitialValue::random(), 77u);
  const Levels levels = to_levels(path);
  const Series s(levels.values);
  const double from_series = lyapunov_estimate(s).gamma_hat;
  const auto& y = s.values();
  const double telescoped = (std::log(std::abs(y.back())) - std::log(std::abs(y.front()))) /
                            static_cast<double>(s.step_count());
  CHECK(from_series == doctest::Approx(telescoped).epsilon(1e-10));
}

TEST_CASE("qmle means match the bias law over replications") {
  const std::size_t reps = 1000, n = 200;
  std::vector<double> phis(reps), alphas(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const Path path = simulate_darwin({0.5, 3.3058}, Innovation::Gaussian, n,
                                      InitialValue::random(), 303u, {r});
    const QmleFit fit = qmle_fit(path);
    phis[r] = fit.phi_hat;
    alphas[r] = fit.alpha_hat;
  }
  CHECK(std::abs(compensated_mean(phis) - 0.5) < 0.01);
  // E alpha_hat = (n-1)/n * alpha0
  CHECK(std::abs(compensated_mean(alphas) - (199.0 / 200.0) * 3.3058) < 0.04);
}

TEST_CASE("standardized qmle is asymptotically normal with diagonal covariance") {
  const std::size_t reps = 2000, n = 200;
  const double alpha0 = 3.3058, phi0 = 0.5;
  std::vector<double> z_phi(reps), d_phi(reps), d_alpha(reps);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  for (std::size_t r = 0; r < reps; ++r) {
    const Path path = simulate_darwin({phi0, alpha0}, Innovation::Gaussian, n,
                                      InitialValue::random(), 404u, {r});
    const QmleFit fit = qmle_fit(path);
    d_phi[r] = sqrt_n * (fit.phi_hat - phi0);
    d_alpha[r] = sqrt_n * (fit.alpha_hat - alpha0);
    z_phi[r] = d_phi[r] / std::sqrt(alpha0);
  }
  const auto ks = stats::ks_test(z_phi, stats::normal_cdf);
  CHECK(ks.p_value > 0.01);

  // sample correlation of the two standardized deviations
  const double m1 = compensated_mean(d_phi), m2 = compensated_mean(d_alpha);
  CompensatedSum num, v1, v2;
  for (std::size_t r = 0; r < reps; ++r) {
    num.add((d_phi[r] - m1) * (d_alpha[r] - m2));
    v1.add((d_phi[r] - m1) * (d_phi[r] - m1));
    v2.add((d_alpha[r] - m2) * (d_alpha[r] - m2));
  }
  const double corr = num.value() / std::sqrt(v1.value() * v2.value());
  CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("wald statistic on hand examples") {
  // zero deviation gives W = 0 (needs a fit with kappa > 1 so Sigma inverts)
  const QmleFit full = qmle_fit(Series({1.0, 2.0, 1.0, 3.0, -1.0}));
  const WaldReport zero = wald_test(full, {{1.0, 0.0}, {0.0, 1.0}},
                                    {full.phi_hat, full.alpha_hat});
  CHECK(zero.w_stat == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(zero.p_value == doctest::Approx(1.0).epsilon(1e-12));

  const QmleFit fit = qmle_fit(Series({1.0, 2.0, 1.0}));
  const WaldReport phi0 = wald_test(fit, {{1.0, 0.0}}, {0.0});
  CHECK(phi0.w_stat == doctest::Approx(2.0 * 1.25 * 1.25 / 0.5625).epsilon(1e-10));
  CHECK(phi0.df == 1);
  CHECK(phi0.p_value ==
        doctest::Approx(stats::chi2_sf(phi0.w_stat, 1.0)).epsilon(1e-12));
}

TEST_CASE("wald rejects invalid constraints") {
  const QmleFit fit = qmle_fit(Series({1.0, 2.0, 1.0, 3.0}));
  CHECK_THROWS_AS(wald_test(fit, {{1.0, 0.0}, {2.0, 0.0}}, {0.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(wald_test(fit, {{0.0, 0.0}}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(wald_test(fit, {{1.0, 0.0}}, {0.0, 1.0}), std::invalid_argument);
  // kappa = 1 makes Sigma_22 zero: the alpha restriction is singular there
  const QmleFit degenerate = qmle_fit(Series({1.0, 2.0, 1.0}));
  CHECK_THROWS_AS(wald_test(degenerate, {{0.0, 1.0}}, {0.0}), numeric_error);
}

TEST_CASE("wald test rejects a false null with high power") {
  const std::size_t reps = 1000, n = 691;
  std::size_t rejections = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    const Path path = simulate_darwin({0.5, 3.3058}, Innovation::Gaussian, n,
                                      InitialValue::random(), 505u, {r});
    const WaldReport w = wald_test(qmle_fit(path), {{1.0, 0.0}}, {0.0});
    if (w.p_value < 0.05) ++rejections;
  }
  CHECK(static_cast<double>(rejections) / static_cast<double>(reps) > 0.9);
}

TEST_CASE("residual acf on the (1, -1) hand example") {
  const std::vector<double> residuals{1.0, -1.0};
  const auto acf = residual_acf(residuals, 1);
  REQUIRE(acf.size() == 1);
  CHECK(acf[0] == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("residual acf formula and guards") {
  // mean is zero by construction
  const std::vector<double> residuals{1.0, -1.0, 1.0, -1.0, 1.0, -1.0};
  const auto acf = residual_acf(residuals, 2);
  REQUIRE(acf.size() == 2);
  // lag 1: all 5 products are -1 -> -5/6; lag 2: all 4 products are +1 -> 4/6
  CHECK(acf[0] == doctest::Approx(-5.0 / 6.0).epsilon(1e-12));
  CHECK(acf[1] == doctest::Approx(4.0 / 6.0).epsilon(1e-12));

  CHECK_THROWS_AS(residual_acf(std::vector<double>{2.0, 2.0, 2.0, 2.0, 2.0}, 2),
                  numeric_error);
  CHECK_THROWS_AS(residual_acf(residuals, 6), std::invalid_argument);
  CHECK_THROWS_AS(residual_acf(residuals, 0), std::invalid_argument);
}

TEST_CASE("acf of white-noise residuals stays inside 4/sqrt(n) bands") {
  const std::size_t seeds = 100, n = 2000, lags = 20;
  std::size_t inside = 0, total = 0;
  const double band = 4.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t s = 0; s < seeds; ++s) {
    Rng rng(606, {s});
    std::vector<double> eta(n);
    for (auto& v : eta) v = draw_std_normal(rng);
    const auto acf = residual_acf(eta, lags);
    for (double a : acf) {
      ++total;
      if (std::abs(a) < band) ++inside;
    }
  }
  CHECK(static_cast<double>(inside) / static_cast<double>(total) >= 0.99);
}

TEST_CASE("squared-residual acf uses the squares") {
  const std::vector<double> residuals{1.0, -2.0, 1.0, 2.0, -1.0, 2.0, 1.0, -2.0};
  const auto direct = residual_acf(residuals, 2, true);
  std::vector<double> squares(residuals.size());
  std::transform(residuals.begin(), residuals.end(), squares.begin(),
                 [](double v) { return v * v; });
  const auto via_squares = residual_acf(squares, 2, false);
  for (std::size_t k = 0; k < direct.size(); ++k) {
    CHECK(direct[k] == doctest::Approx(via_squares[k]).epsilon(1e-14));
  }
}

TEST_CASE("durbin-levinson recovers an AR(1) partial acf exactly") {
  const double a = 0.6;
  std::vector<double> acf(8);
  double rho = 1.0;
  for (auto& v : acf) {
    rho *= a;
    v = rho;
  }
  const auto pacf = pacf_from_acf(acf);
  CHECK(pacf[0] == doctest::Approx(a).epsilon(1e-12));
  for (std::size_t k = 1; k < pacf.size(); ++k) {
    CHECK(pacf[k] == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("plugin exponent on the hand fit is exactly zero") {
  const QmleFit fit = qmle_fit(Series({1.0, 2.0, 1.0}));
  const PluginLyapunov plugin = plugin_lyapunov(fit);
  // terms are log 2 and log 0.5, which cancel
  CHECK(std::abs(plugin.value) < 1e-15);
  CHECK(plugin.skipped == 0);
}

TEST_CASE("plugin exponent skips exactly singular terms") {
  QmleFit fit;
  fit.phi_hat = 1.0;
  fit.alpha_hat = 1.0;
  fit.residuals = {-1.0, 0.5};
  fit.n = 2;
  const PluginLyapunov plugin = plugin_lyapunov(fit);
  CHECK(plugin.skipped == 1);
  CHECK(plugin.value == doctest::Approx(std::log(1.5)).epsilon(1e-12));

  fit.residuals = {-1.0};
  CHECK_THROWS_AS(plugin_lyapunov(fit), numeric_error);
}

TEST_CASE("plugin exponent tracks the direct estimator on long stable paths") {
  const Path path = simulate_darwin({0.5, 3.3058}, Innovation::Gaussian, 10'000,
                                    InitialValue::random(), 707u);
  const double direct = lyapunov_estimate(path).gamma_hat;
  const double plugged = plugin_lyapunov(qmle_fit(path)).value;
  CHECK(std::abs(plugged - direct) < 0.05);
}

TEST_CASE("plugin exponent is positive for strongly explosive data") {
  const Path path = simulate_darwin({0.5, 8.0}, Innovation::Gaussian, 2000,
                                    InitialValue::random(), 808u);
  CHECK(plugin_lyapunov(qmle_fit(path)).value > 0.0);
}

TEST_CASE("comparison fit recovers stationary parameters within three ses") {
  Rng rng(909, {0});
  const DarParams truth{0.5, 1.0, 0.3};
  const Series s(simulate_dar_levels(truth, 5000, rng));
  const DarFit fit = dar_qmle_fit(s, {0.0, 0.5, 0.1});
  CHECK(fit.converged);
  CHECK(fit.loglik >= dar_loglik(s, {0.0, 0.5, 0.1}));
  REQUIRE(std::isfinite(fit.se[0]));
  REQUIRE(std::isfinite(fit.se[1]));
  REQUIRE(std::isfinite(fit.se[2]));
  CHECK(std::abs(fit.params.phi - truth.phi) < 3.0 * fit.se[0]);
  CHECK(std::abs(fit.params.omega - truth.omega) < 3.0 * fit.se[1]);
  CHECK(std::abs(fit.params.alpha - truth.alpha) < 3.0 * fit.se[2]);
}

TEST_CASE("comparison fit drives the intercept to the boundary on intercept-free data") {
  const Path path = simulate_darwin({0.5, 3.3058}, Innovation::Gaussian, 2000,
                                    InitialValue::random(), 111u);
  const Series s(to_levels(path).values);
  std::vector<double> sq(s.values().size());
  std::transform(s.values().begin(), s.values().end(), sq.begin(),
                 [](double v) { return v * v; });
  std::nth_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(sq.size() / 2),
                   sq.end());
  const double median_sq = sq[sq.size() / 2];

  const DarFit fit = dar_qmle_fit(s, {0.0, 0.5 * median_sq, 0.1});
  CHECK(fit.params.omega < 1e-3 * fit.params.alpha * median_sq);
}

TEST_CASE("comparison fit validates its inputs") {
  CHECK_THROWS_AS(dar_qmle_fit(Series({1.0, 2.0, 1.0}), {0.0, 1.0, 0.1}),
                  std::invalid_argument);
}
