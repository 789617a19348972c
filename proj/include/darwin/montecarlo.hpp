#pragma once

#include <cstdint>
#include <vector>

#include "darwin/estimate.hpp"
#include "darwin/process.hpp"
#include "darwin/theory.hpp"

namespace darwin {

// A simulation study: all (alpha, n) cells share phi, the innovation law,
// the replication count and a master seed. Replication r of cell c draws
// from stream (master_seed, {salt, c, r}), so any worker count reproduces
// the same table bit for bit.
struct StudyConfig {
  Innovation spec = Innovation::Gaussian;
  double phi = 0.5;
  std::vector<double> alpha_list;
  std::vector<std::size_t> n_list;
  std::size_t replications = 1000;
  std::uint64_t master_seed = 1;
  unsigned workers = 0;  // 0 = auto; DARWIN_WORKERS overrides
};

struct EstimatorSummary {
  double em = 0.0;   // empirical mean across replications
  double esd = 0.0;  // empirical standard deviation (n-1 denominator)
  double asd = 0.0;  // theory-implied asymptotic standard deviation
};

struct StudyRow {
  Innovation spec = Innovation::Gaussian;
  double alpha0 = 0.0;
  std::size_t n = 0;
  double gamma0 = 0.0;  // theoretical exponent for the cell (quadrature)
  double sigma2 = 0.0;
  EstimatorSummary phi, alpha, alpha_star, gamma;
  std::size_t replications = 0;
  std::size_t excluded = 0;  // degenerate replications, recorded and skipped
};

struct StudyTable {
  StudyConfig config;
  std::vector<StudyRow> rows;
};

StudyTable run_estimation_study(const StudyConfig& config);

// Size/power of the stability test across an alpha grid. All alphas at a
// given (n, r) share one innovation stream (common random numbers), so the
// curve is smooth in alpha and size/power differences are not noise-driven.
struct PowerConfig {
  Innovation spec = Innovation::Gaussian;
  double phi = 0.5;
  std::vector<double> alpha_grid;
  std::vector<std::size_t> n_list;
  std::size_t replications = 1000;
  double level = 0.05;
  std::uint64_t master_seed = 1;
  unsigned workers = 0;
};

struct PowerPoint {
  double alpha0 = 0.0;
  double gamma0 = 0.0;
  std::size_t n = 0;
  double rejection_rate = 0.0;
  std::size_t replications = 0;
  std::size_t excluded = 0;
};

struct PowerTable {
  PowerConfig config;
  std::vector<PowerPoint> points;
};

PowerTable run_size_power(const PowerConfig& config);

// Default power-curve grid: alphas whose exponents sweep
// [-gamma_span, +gamma_span] uniformly, found by root-finding per point.
std::vector<double> default_power_alpha_grid(double phi, Innovation spec,
                                             std::size_t points = 11,
                                             double gamma_span = 0.05);

enum class StudyTarget { GammaHat, PhiHat, AlphaHat };

// Standardized sampling distribution of one estimator in one cell:
// sqrt(n) * (estimate - truth) per replication, plus the N(0, variance)
// overlay implied by the asymptotic theory.
struct SamplingDistribution {
  StudyTarget target = StudyTarget::GammaHat;
  Innovation spec = Innovation::Gaussian;
  double phi = 0.0;
  double alpha0 = 0.0;
  std::size_t n = 0;
  double truth = 0.0;             // gamma0, phi0 or alpha0
  double overlay_variance = 0.0;  // sigma2, alpha0 or (kappa4-1)*alpha0^2
  std::vector<double> standardized;
  std::size_t excluded = 0;
};

// Uses the first alpha and n of the config (exactly one cell expected).
SamplingDistribution sampling_distribution(const StudyConfig& config, StudyTarget target);

}  // namespace darwin
