#include "darwin/montecarlo.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "darwin/accum.hpp"
#include "darwin/concurrency.hpp"
#include "darwin/errors.hpp"
#include "darwin/stats.hpp"

namespace darwin {

namespace {

// Stream salts per study kind; replication streams never collide across
// drivers even under one master seed.
constexpr std::uint64_t kSaltStudy = 0x57D1;
constexpr std::uint64_t kSaltPower = 0x90E6;
constexpr std::uint64_t kSaltHist = 0x415A;

struct ReplicateDraws {
  double y0 = 0.0;
  std::vector<double> eta;
};

// One replication's randomness: the initial level first, then the
// innovation vector, all from the named stream.
ReplicateDraws make_draws(Innovation spec, std::size_t n, std::uint64_t master,
                          std::uint64_t salt, std::uint64_t a, std::uint64_t b) {
  Rng rng(master, {salt, a, b});
  ReplicateDraws d;
  d.y0 = draw_std_normal(rng);
  while (d.y0 == 0.0) d.y0 = draw_std_normal(rng);
  d.eta = sample(spec, n, rng);
  return d;
}

EstimatorSummary summarize(std::span<const double> values, double asd) {
  EstimatorSummary s;
  s.em = compensated_mean(values);
  s.esd = sample_sd(values);
  s.asd = asd;
  return s;
}

double quantile_abs_reject(double level) {
  // |T| threshold of the two-sided test; p < level <=> |T| > this.
  return stats::normal_quantile(1.0 - 0.5 * level);
}

}  // namespace

StudyTable run_estimation_study(const StudyConfig& config) {
  if (config.replications < 1) {
    throw std::invalid_argument("run_estimation_study: need at least one replication");
  }
  if (config.alpha_list.empty() || config.n_list.empty()) {
    throw std::invalid_argument("run_estimation_study: empty alpha or n list");
  }

  StudyTable table;
  table.config = config;

  // Theory per alpha, shared across n cells.
  std::map<double, LyapunovProfile> profiles;
  for (double alpha : config.alpha_list) {
    profiles.emplace(alpha, lyapunov_moments({config.phi, alpha}, config.spec));
  }
  const double kappa4 = kurtosis(config.spec);

  std::uint64_t cell_index = 0;
  for (double alpha : config.alpha_list) {
    for (std::size_t n : config.n_list) {
      const DarwinParams params{config.phi, alpha};
      const std::size_t R = config.replications;

      struct Slot {
        double phi = 0.0, alpha = 0.0, alpha_star = 0.0, gamma = 0.0;
        bool ok = false;
      };
      std::vector<Slot> slots(R);

      parallel_for(R, config.workers, [&](std::size_t r) {
        const ReplicateDraws d =
            make_draws(config.spec, n, config.master_seed, kSaltStudy, cell_index, r);
        try {
          const Path path = simulate_darwin(params, d.eta, d.y0);
          const QmleFit fit = qmle_fit(path);
          const StabilityReport st = lyapunov_estimate(path);
          slots[r] = {fit.phi_hat, fit.alpha_hat, fit.alpha_star, st.gamma_hat, true};
        } catch (const numeric_error&) {
          slots[r].ok = false;  // recorded as an exclusion
        }
      });

      std::vector<double> phis, alphas, alpha_stars, gammas;
      phis.reserve(R);
      alphas.reserve(R);
      alpha_stars.reserve(R);
      gammas.reserve(R);
      std::size_t excluded = 0;
      for (const Slot& s : slots) {
        if (!s.ok) {
          ++excluded;
          continue;
        }
        phis.push_back(s.phi);
        alphas.push_back(s.alpha);
        alpha_stars.push_back(s.alpha_star);
        gammas.push_back(s.gamma);
      }
      if (phis.empty()) {
        throw numeric_error("run_estimation_study: every replication degenerated");
      }

      const LyapunovProfile& profile = profiles.at(alpha);
      const AsymptoticSd asd = asymptotic_sd(alpha, kappa4, profile.sigma2, n);
      const double nd = static_cast<double>(n);

      StudyRow row;
      row.spec = config.spec;
      row.alpha0 = alpha;
      row.n = n;
      row.gamma0 = profile.gamma0;
      row.sigma2 = profile.sigma2;
      row.phi = summarize(phis, asd.sd_phi);
      row.alpha = summarize(alphas, asd.sd_alpha);
      row.alpha_star = summarize(alpha_stars, nd / (nd - 1.0) * asd.sd_alpha);
      row.gamma = summarize(gammas, asd.sd_gamma);
      row.replications = R;
      row.excluded = excluded;
      table.rows.push_back(std::move(row));
      ++cell_index;
    }
  }
  return table;
}

PowerTable run_size_power(const PowerConfig& config) {
  if (config.replications < 1) {
    throw std::invalid_argument("run_size_power: need at least one replication");
  }
  if (config.alpha_grid.empty() || config.n_list.empty()) {
    throw std::invalid_argument("run_size_power: empty alpha grid or n list");
  }
  if (!(config.level > 0.0) || config.level > 1.0) {
    throw std::invalid_argument("run_size_power: level must lie in (0,1]");
  }

  PowerTable table;
  table.config = config;
  const double threshold =
      config.level >= 1.0 ? 0.0 : quantile_abs_reject(config.level);

  std::map<double, double> gamma0;
  for (double alpha : config.alpha_grid) {
    gamma0.emplace(alpha, lyapunov_gamma({config.phi, alpha}, config.spec));
  }

  const std::size_t G = config.alpha_grid.size();
  for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
    const std::size_t n = config.n_list[ni];
    const std::size_t R = config.replications;

    // outcome per (replication, alpha): 1 reject, 0 keep, -1 excluded
    std::vector<std::int8_t> outcome(R * G, 0);

    parallel_for(R, config.workers, [&](std::size_t r) {
      const ReplicateDraws d = make_draws(config.spec, n, config.master_seed, kSaltPower,
                                          static_cast<std::uint64_t>(ni), r);
      for (std::size_t g = 0; g < G; ++g) {
        const DarwinParams params{config.phi, config.alpha_grid[g]};
        try {
          const Path path = simulate_darwin(params, d.eta, d.y0);
          const StabilityReport st = lyapunov_estimate(path);
          outcome[r * G + g] = std::abs(st.t_stat) > threshold ? 1 : 0;
        } catch (const numeric_error&) {
          outcome[r * G + g] = -1;
        }
      }
    });

    for (std::size_t g = 0; g < G; ++g) {
      std::size_t rejections = 0, excluded = 0, kept = 0;
      for (std::size_t r = 0; r < R; ++r) {
        const std::int8_t o = outcome[r * G + g];
        if (o < 0) {
          ++excluded;
        } else {
          ++kept;
          rejections += o;
        }
      }
      PowerPoint pt;
      pt.alpha0 = config.alpha_grid[g];
      pt.gamma0 = gamma0.at(pt.alpha0);
      pt.n = n;
      pt.rejection_rate =
          kept > 0 ? static_cast<double>(rejections) / static_cast<double>(kept) : 0.0;
      pt.replications = R;
      pt.excluded = excluded;
      table.points.push_back(pt);
    }
  }
  return table;
}

std::vector<double> default_power_alpha_grid(double phi, Innovation spec,
                                             std::size_t points, double gamma_span) {
  if (points < 2) throw std::invalid_argument("default_power_alpha_grid: need >= 2 points");
  if (!(gamma_span > 0.0)) {
    throw std::invalid_argument("default_power_alpha_grid: span must be positive");
  }
  const double boundary = calibrate_alpha(phi, spec);
  std::vector<double> grid;
  grid.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double target = -gamma_span + 2.0 * gamma_span * static_cast<double>(i) /
                                            static_cast<double>(points - 1);
    if (std::abs(target) < 1e-12) {
      grid.push_back(boundary);
      continue;
    }
    // solve gamma0(alpha) = target by shifting the calibration root finder
    const double lo = boundary * 0.2, hi = boundary * 5.0;
    double a = lo, b = hi;
    double fa = lyapunov_gamma({phi, a}, spec) - target;
    double fb = lyapunov_gamma({phi, b}, spec) - target;
    if (fa * fb > 0.0) {
      throw numeric_error("default_power_alpha_grid: target exponent out of range");
    }
    for (int iter = 0; iter < 100; ++iter) {
      double c = b - fb * (b - a) / (fb - fa);
      if (!std::isfinite(c) || c <= a || c >= b) c = 0.5 * (a + b);
      const double fc = lyapunov_gamma({phi, c}, spec) - target;
      if (std::abs(fc) < 1e-6) {
        a = b = c;
        break;
      }
      if (fa * fc < 0.0) {
        b = c;
        fb = fc;
      } else {
        a = c;
        fa = fc;
      }
    }
    grid.push_back(0.5 * (a + b));
  }
  return grid;
}

SamplingDistribution sampling_distribution(const StudyConfig& config, StudyTarget target) {
  if (config.alpha_list.size() != 1 || config.n_list.size() != 1) {
    throw std::invalid_argument("sampling_distribution: config must name exactly one cell");
  }
  const double alpha = config.alpha_list.front();
  const std::size_t n = config.n_list.front();
  const DarwinParams params{config.phi, alpha};
  const LyapunovProfile profile = lyapunov_moments(params, config.spec);
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  SamplingDistribution out;
  out.target = target;
  out.spec = config.spec;
  out.phi = config.phi;
  out.alpha0 = alpha;
  out.n = n;
  switch (target) {
    case StudyTarget::GammaHat:
      out.truth = profile.gamma0;
      out.overlay_variance = profile.sigma2;
      break;
    case StudyTarget::PhiHat:
      out.truth = config.phi;
      out.overlay_variance = alpha;
      break;
    case StudyTarget::AlphaHat:
      out.truth = alpha;
      out.overlay_variance = (kurtosis(config.spec) - 1.0) * alpha * alpha;
      break;
  }

  const std::size_t R = config.replications;
  std::vector<double> slots(R, 0.0);
  std::vector<std::int8_t> ok(R, 0);
  parallel_for(R, config.workers, [&](std::size_t r) {
    const ReplicateDraws d =
        make_draws(config.spec, n, config.master_seed, kSaltHist, 0, r);
    try {
      const Path path = simulate_darwin(params, d.eta, d.y0);
      double estimate = 0.0;
      switch (target) {
        case StudyTarget::GammaHat: estimate = lyapunov_estimate(path).gamma_hat; break;
        case StudyTarget::PhiHat: estimate = qmle_fit(path).phi_hat; break;
        case StudyTarget::AlphaHat: estimate = qmle_fit(path).alpha_hat; break;
      }
      slots[r] = sqrt_n * (estimate - out.truth);
      ok[r] = 1;
    } catch (const numeric_error&) {
      ok[r] = 0;
    }
  });

  out.standardized.reserve(R);
  for (std::size_t r = 0; r < R; ++r) {
    if (ok[r]) {
      out.standardized.push_back(slots[r]);
    } else {
      ++out.excluded;
    }
  }
  return out;
}

}  // namespace darwin
