#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "darwin/accum.hpp"
#include "darwin/io.hpp"
#include "darwin/montecarlo.hpp"
#include "darwin/stats.hpp"

using namespace darwin;

namespace {

StudyConfig small_config() {
  StudyConfig cfg;
  cfg.spec = Innovation::Gaussian;
  cfg.phi = 0.5;
  cfg.alpha_list = {3.1, 3.3058};
  cfg.n_list = {100};
  cfg.replications = 200;
  cfg.master_seed = 17;
  return cfg;
}

std::string serialize(const StudyTable& table) {
  std::ostringstream os;
  io::write_study_csv(os, table);
  os << io::to_json(table).dump();
  return os.str();
}

}  // namespace

TEST_CASE("a single replication gives EM equal to the estimate and zero ESD") {
  StudyConfig cfg = small_config();
  cfg.alpha_list = {3.3058};
  cfg.replications = 1;
  const StudyTable table = run_estimation_study(cfg);
  REQUIRE(table.rows.size() == 1);
  const StudyRow& row = table.rows[0];
  CHECK(row.phi.esd == 0.0);
  CHECK(row.alpha.esd == 0.0);
  CHECK(row.gamma.esd == 0.0);
  CHECK(std::isfinite(row.phi.em));
  CHECK(row.excluded == 0);
  CHECK(row.replications == 1);
}

TEST_CASE("study summaries match the reference cell at n=200") {
  StudyConfig cfg;
  cfg.spec = Innovation::Gaussian;
  cfg.phi = 0.5;
  cfg.alpha_list = {3.3058};
  cfg.n_list = {200};
  cfg.replications = 1000;
  cfg.master_seed = 5;
  const StudyTable table = run_estimation_study(cfg);
  REQUIRE(table.rows.size() == 1);
  const StudyRow& row = table.rows[0];

  CHECK(std::abs(row.phi.em - 0.5) <= 0.012);
  CHECK(std::abs(row.phi.esd - 0.1286) <= 0.015);
  CHECK(io::fixed4(row.phi.asd) == "0.1286");
  CHECK(io::fixed4(row.alpha.asd) == "0.3306");
  CHECK(io::fixed4(row.gamma.asd) == "0.0785");
  CHECK(row.excluded == 0);

  // ASD columns are exactly the theory outputs for the cell
  const AsymptoticSd sd = asymptotic_sd(3.3058, 3.0, row.sigma2, 200);
  CHECK(row.phi.asd == sd.sd_phi);
  CHECK(row.alpha.asd == sd.sd_alpha);
  CHECK(row.gamma.asd == sd.sd_gamma);
  CHECK(row.alpha_star.asd == 200.0 / 199.0 * sd.sd_alpha);
}

TEST_CASE("study tables are identical for any worker count") {
  StudyConfig cfg = small_config();
  cfg.workers = 1;
  const std::string serial = serialize(run_estimation_study(cfg));
  cfg.workers = 4;
  const std::string parallel = serialize(run_estimation_study(cfg));
  CHECK(serial == parallel);
}

TEST_CASE("study validates its configuration") {
  StudyConfig cfg = small_config();
  cfg.replications = 0;
  CHECK_THROWS_AS(run_estimation_study(cfg), std::invalid_argument);
  cfg = small_config();
  cfg.alpha_list.clear();
  CHECK_THROWS_AS(run_estimation_study(cfg), std::invalid_argument);
}

TEST_CASE("size at the boundary is near nominal and beta=1 always rejects") {
  PowerConfig cfg;
  cfg.spec = Innovation::Gaussian;
  cfg.phi = 0.5;
  cfg.alpha_grid = {3.1, 3.3058, 3.5};
  cfg.n_list = {200};
  cfg.replications = 500;
  cfg.level = 0.05;
  cfg.master_seed = 23;
  const PowerTable table = run_size_power(cfg);
  REQUIRE(table.points.size() == 3);
  const PowerPoint& size_point = table.points[1];
  CHECK(size_point.alpha0 == 3.3058);
  CHECK(size_point.rejection_rate > 0.02);
  CHECK(size_point.rejection_rate < 0.09);
  for (const auto& pt : table.points) CHECK(pt.excluded == 0);

  cfg.level = 1.0;
  const PowerTable always = run_size_power(cfg);
  for (const auto& pt : always.points) CHECK(pt.rejection_rate == 1.0);
}

TEST_CASE("power tables are identical for any worker count") {
  PowerConfig cfg;
  cfg.spec = Innovation::LaplaceStd;
  cfg.phi = 0.5;
  cfg.alpha_grid = {5.0, 5.1726};
  cfg.n_list = {100};
  cfg.replications = 200;
  cfg.master_seed = 29;
  cfg.workers = 1;
  const PowerTable a = run_size_power(cfg);
  cfg.workers = 4;
  const PowerTable b = run_size_power(cfg);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].rejection_rate == b.points[i].rejection_rate);
  }
}

TEST_CASE("default power grid sweeps the exponent range symmetrically") {
  const auto grid = default_power_alpha_grid(0.5, Innovation::Gaussian, 5, 0.04);
  REQUIRE(grid.size() == 5);
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
  const double targets[5] = {-0.04, -0.02, 0.0, 0.02, 0.04};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(lyapunov_gamma({0.5, grid[i]}, Innovation::Gaussian) - targets[i]) <
          1e-5);
  }
}

TEST_CASE("sampling distribution of the exponent estimator is the predicted normal") {
  StudyConfig cfg;
  cfg.spec = Innovation::Gaussian;
  cfg.phi = 0.5;
  cfg.alpha_list = {3.3058};
  cfg.n_list = {200};
  cfg.replications = 1000;
  cfg.master_seed = 37;
  const SamplingDistribution hist = sampling_distribution(cfg, StudyTarget::GammaHat);
  REQUIRE(hist.standardized.size() == 1000);
  CHECK(hist.excluded == 0);

  const LyapunovProfile profile = lyapunov_moments({0.5, 3.3058}, Innovation::Gaussian);
  CHECK(hist.overlay_variance == profile.sigma2);
  CHECK(hist.truth == profile.gamma0);

  // mean within 3 MC standard errors of zero
  const double mean = compensated_mean(hist.standardized);
  const double se = sample_sd(hist.standardized) / std::sqrt(1000.0);
  CHECK(std::abs(mean) < 3.0 * se);

  const double scale = std::sqrt(hist.overlay_variance);
  std::vector<double> standardized = hist.standardized;
  for (auto& v : standardized) v /= scale;
  CHECK(stats::ks_test(standardized, stats::normal_cdf).p_value > 0.01);
}

TEST_CASE("sampling distribution overlays for the qmle targets") {
  StudyConfig cfg;
  cfg.spec = Innovation::StudentT5Std;
  cfg.phi = 0.5;
  cfg.alpha_list = {4.3697};
  cfg.n_list = {100};
  cfg.replications = 300;
  cfg.master_seed = 41;
  const SamplingDistribution phi_hist = sampling_distribution(cfg, StudyTarget::PhiHat);
  CHECK(phi_hist.truth == 0.5);
  CHECK(phi_hist.overlay_variance == 4.3697);
  const SamplingDistribution alpha_hist =
      sampling_distribution(cfg, StudyTarget::AlphaHat);
  CHECK(alpha_hist.truth == 4.3697);
  CHECK(alpha_hist.overlay_variance == doctest::Approx(8.0 * 4.3697 * 4.3697));
}

TEST_CASE("sampling distribution requires exactly one cell") {
  StudyConfig cfg = small_config();  // two alphas
  CHECK_THROWS_AS(sampling_distribution(cfg, StudyTarget::GammaHat),
                  std::invalid_argument);
}

TEST_CASE("sampling distributions are identical for any worker count") {
  StudyConfig cfg;
  cfg.spec = Innovation::Gaussian;
  cfg.phi = 0.5;
  cfg.alpha_list = {3.3058};
  cfg.n_list = {100};
  cfg.replications = 300;
  cfg.master_seed = 43;
  cfg.workers = 1;
  const SamplingDistribution a = sampling_distribution(cfg, StudyTarget::GammaHat);
  cfg.workers = 4;
  const SamplingDistribution b = sampling_distribution(cfg, StudyTarget::GammaHat);
  CHECK(a.standardized == b.standardized);
}
