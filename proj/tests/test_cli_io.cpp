#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "darwin/cli.hpp"
#include "darwin/errors.hpp"
#include "darwin/estimate.hpp"
#include "darwin/io.hpp"

using namespace darwin;
using nlohmann::json;

namespace {

int run_cli(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"darwin"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(storage.size());
  for (const auto& s : storage) argv.push_back(s.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) { return json::parse(read_file(path)); }

const char* kTinyCsv = "cli_io_tiny.csv";

struct TinyFixture {
  TinyFixture() { write_file(kTinyCsv, "p\n1\n2\n1\n"); }
};

}  // namespace

TEST_CASE("load_series applies the log-return transform") {
  write_file("cli_io_prices.csv", "price\n1\n2.718281828459045\n1\n");
  io::IngestConfig cfg;
  cfg.path = "cli_io_prices.csv";
  cfg.column = "price";
  cfg.transform = io::Transform::LogReturn;
  const Series s = io::load_series(cfg);
  REQUIRE(s.values().size() == 2);
  CHECK(s.values()[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.values()[1] == doctest::Approx(-1.0).epsilon(1e-12));

  cfg.transform = io::Transform::LogReturnPct;
  const Series pct = io::load_series(cfg);
  CHECK(pct.values()[0] == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("692 prices yield 691 returns") {
  std::ostringstream csv;
  csv << "price\n";
  for (int t = 0; t < 692; ++t) {
    csv << (100.0 * std::exp(1e-4 * (t % 2 == 0 ? t : -t))) << '\n';
  }
  write_file("cli_io_fx.csv", csv.str());
  io::IngestConfig cfg;
  cfg.path = "cli_io_fx.csv";
  cfg.column = "price";
  cfg.transform = io::Transform::LogReturn;
  CHECK(io::load_series(cfg).values().size() == 691);
}

TEST_CASE("ingestion errors name the offending line") {
  io::IngestConfig cfg;
  cfg.transform = io::Transform::LogReturn;
  cfg.column = "p";

  write_file("cli_io_zero_ret.csv", "p\n1\n2\n2\n3\n");
  cfg.path = "cli_io_zero_ret.csv";
  CHECK_THROWS_WITH_AS(io::load_series(cfg), doctest::Contains("line 4"), data_error);

  write_file("cli_io_negative.csv", "p\n1\n-2\n3\n");
  cfg.path = "cli_io_negative.csv";
  CHECK_THROWS_WITH_AS(io::load_series(cfg), doctest::Contains("line 3"), data_error);

  write_file("cli_io_text.csv", "p\n1\noops\n3\n");
  cfg.path = "cli_io_text.csv";
  CHECK_THROWS_WITH_AS(io::load_series(cfg), doctest::Contains("oops"), data_error);

  cfg.path = "cli_io_does_not_exist.csv";
  CHECK_THROWS_AS(io::load_series(cfg), data_error);

  write_file("cli_io_zero_val.csv", "p\n1\n0\n3\n");
  cfg.path = "cli_io_zero_val.csv";
  cfg.transform = io::Transform::None;
  CHECK_THROWS_WITH_AS(io::load_series(cfg), doctest::Contains("line 3"), data_error);
}

TEST_CASE("missing values honor drop_na") {
  write_file("cli_io_na.csv", "p\n1\nNA\n2\n\n4\n");
  io::IngestConfig cfg;
  cfg.path = "cli_io_na.csv";
  cfg.column = "p";
  CHECK_THROWS_WITH_AS(io::load_series(cfg), doctest::Contains("line 3"), data_error);
  cfg.drop_na = true;
  const Series s = io::load_series(cfg);
  CHECK(s.values() == std::vector<double>{1.0, 2.0, 4.0});
}

TEST_CASE("CSV dialect tolerates CRLF, quoted headers and blank lines") {
  write_file("cli_io_dialect.csv", "\"a\",\"p\"\r\n1,10\r\n\r\n2,20\r\n");
  io::IngestConfig cfg;
  cfg.path = "cli_io_dialect.csv";
  cfg.column = "p";
  CHECK(io::load_series(cfg).values() == std::vector<double>{10.0, 20.0});
}

TEST_CASE("columns resolve by name first, then by index") {
  write_file("cli_io_cols.csv", "a,b\n1,10\n2,20\n");
  io::IngestConfig cfg;
  cfg.path = "cli_io_cols.csv";
  cfg.column = "b";
  CHECK(io::load_series(cfg).values() == std::vector<double>{10.0, 20.0});
  cfg.column = "1";
  CHECK(io::load_series(cfg).values() == std::vector<double>{10.0, 20.0});
  cfg.column = "c";
  CHECK_THROWS_WITH_AS(io::load_series(cfg), doctest::Contains("column 'c'"), data_error);
  cfg.column = "7";
  CHECK_THROWS_AS(io::load_series(cfg), data_error);
}

TEST_CASE("fit prints the estimate (se) layout") {
  TinyFixture fixture;
  REQUIRE(run_cli({"fit", "--data", kTinyCsv, "--column", "p", "--out",
                   "cli_io_fit.txt"}) == 0);
  const std::string text = read_file("cli_io_fit.txt");
  CHECK(text.find("phi     1.2500 (0.5303)") != std::string::npos);
  CHECK(text.find("alpha   0.5625 (0.0000)") != std::string::npos);
}

TEST_CASE("fit JSON round-trips its standard errors exactly") {
  TinyFixture fixture;
  REQUIRE(run_cli({"fit", "--data", kTinyCsv, "--column", "p", "--format", "json",
                   "--out", "cli_io_fit.json"}) == 0);
  const json envelope = read_json("cli_io_fit.json");
  CHECK(envelope["command"] == "fit");
  CHECK(envelope.contains("seeds"));
  CHECK(envelope.contains("warnings"));
  const json& fit = envelope["results"];
  const double alpha = fit["alpha_hat"];
  const double kappa = fit["kappa_hat"];
  const auto n = static_cast<double>(fit["n"].get<std::size_t>());
  CHECK(fit["phi_hat"] == 1.25);
  CHECK(alpha == 0.5625);
  // recomputing the ses from the parsed values reproduces the printed ses
  CHECK(fit["se_phi"].get<double>() == std::sqrt(alpha / n));
  CHECK(fit["se_alpha"].get<double>() == std::sqrt((kappa - 1.0) * alpha * alpha / n));
}

TEST_CASE("calibrate matches the reference boundary through the CLI") {
  REQUIRE(run_cli({"calibrate", "--phi", "0.5", "--dist", "laplace", "--format", "json",
                   "--out", "cli_io_cal.json"}) == 0);
  const json envelope = read_json("cli_io_cal.json");
  CHECK(std::abs(envelope["results"]["alpha"].get<double>() - 5.1726) < 1e-3);
  CHECK(std::abs(envelope["results"]["gamma_at_root"].get<double>()) < 1e-6);
}

TEST_CASE("simulate output feeds the stability command end to end") {
  REQUIRE(run_cli({"simulate", "--phi", "0.5", "--alpha", "3.3058", "--n", "691",
                   "--seed", "2024", "--format", "csv", "--out", "cli_io_sim.csv"}) == 0);
  const std::string csv = read_file("cli_io_sim.csv");
  CHECK(csv.rfind("t,sign,logabs,level", 0) == 0);

  REQUIRE(run_cli({"stability", "--data", "cli_io_sim.csv", "--column", "level",
                   "--format", "json", "--out", "cli_io_stab.json"}) == 0);
  const json report = read_json("cli_io_stab.json")["results"];
  CHECK(report["n"] == 691);
  const double p = report["p_value"];
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);

  // levels parsed back from the CSV agree with the library values
  io::IngestConfig cfg;
  cfg.path = "cli_io_sim.csv";
  cfg.column = "level";
  const Series parsed = io::load_series(cfg);
  const Path path = simulate_darwin({0.5, 3.3058}, Innovation::Gaussian, 691,
                                    InitialValue::random(), 2024u);
  const Levels levels = to_levels(path);
  REQUIRE(parsed.values().size() == levels.values.size());
  for (std::size_t t = 0; t < levels.values.size(); ++t) {
    CHECK(parsed.values()[t] == levels.values[t]);  // shortest form round-trips
  }
}

TEST_CASE("stability keeps its size on stable simulated paths") {
  std::size_t accepted = 0;
  const std::size_t seeds = 100;
  for (std::size_t s = 0; s < seeds; ++s) {
    const Path path = simulate_darwin({0.5, 3.3058}, Innovation::Gaussian, 691,
                                      InitialValue::random(), 4242u, {s});
    if (lyapunov_estimate(path).p_value > 0.05) ++accepted;
  }
  CHECK(static_cast<double>(accepted) / static_cast<double>(seeds) >= 0.9);
}

TEST_CASE("identical inputs and seed give byte-identical outputs") {
  for (int round = 0; round < 2; ++round) {
    const std::string path = round == 0 ? "cli_io_mc_a.json" : "cli_io_mc_b.json";
    REQUIRE(run_cli({"mc-table", "--alphas", "3.3058", "--ns", "100", "--reps", "50",
                     "--seed", "9", "--format", "json", "--out", path}) == 0);
  }
  CHECK(read_file("cli_io_mc_a.json") == read_file("cli_io_mc_b.json"));
  // study metadata records how initial levels were drawn
  const json results = read_json("cli_io_mc_a.json")["results"];
  CHECK(results.contains("y0_policy"));
}

TEST_CASE("DARWIN_WORKERS overrides the worker count without changing bytes") {
  REQUIRE(run_cli({"mc-table", "--alphas", "3.3058", "--ns", "100", "--reps", "30",
                   "--seed", "13", "--workers", "1", "--format", "json", "--out",
                   "cli_io_env_a.json"}) == 0);
  REQUIRE(setenv("DARWIN_WORKERS", "2", 1) == 0);
  const int rc = run_cli({"mc-table", "--alphas", "3.3058", "--ns", "100", "--reps",
                          "30", "--seed", "13", "--workers", "1", "--format", "json",
                          "--out", "cli_io_env_b.json"});
  unsetenv("DARWIN_WORKERS");
  REQUIRE(rc == 0);
  CHECK(read_file("cli_io_env_a.json") == read_file("cli_io_env_b.json"));
}

TEST_CASE("worker count never leaks into the output bytes") {
  REQUIRE(run_cli({"mc-table", "--alphas", "3.1,3.3058", "--ns", "100", "--reps", "40",
                   "--seed", "11", "--workers", "1", "--format", "csv", "--out",
                   "cli_io_w1.csv"}) == 0);
  REQUIRE(run_cli({"mc-table", "--alphas", "3.1,3.3058", "--ns", "100", "--reps", "40",
                   "--seed", "11", "--workers", "4", "--format", "csv", "--out",
                   "cli_io_w4.csv"}) == 0);
  CHECK(read_file("cli_io_w1.csv") == read_file("cli_io_w4.csv"));
}

TEST_CASE("volatility emits the fitted log-volatility sequence") {
  TinyFixture fixture;
  REQUIRE(run_cli({"volatility", "--data", kTinyCsv, "--column", "p", "--format", "json",
                   "--out", "cli_io_vol.json"}) == 0);
  const json results = read_json("cli_io_vol.json")["results"];
  CHECK(results["alpha_hat"] == 0.5625);
  const auto values = results["log_volatility"].get<std::vector<double>>();
  REQUIRE(values.size() == 2);
  CHECK(values[0] == doctest::Approx(std::log(0.5625)).epsilon(1e-12));
  CHECK(values[1] == doctest::Approx(std::log(0.5625 * 4.0)).epsilon(1e-12));
}

TEST_CASE("wald through the CLI tests phi0 = 0 by default") {
  REQUIRE(run_cli({"simulate", "--phi", "0.5", "--alpha", "3.3058", "--n", "300",
                   "--seed", "77", "--format", "csv", "--out", "cli_io_sim2.csv"}) == 0);
  REQUIRE(run_cli({"wald", "--data", "cli_io_sim2.csv", "--column", "level", "--format",
                   "json", "--out", "cli_io_wald.json"}) == 0);
  const json envelope = read_json("cli_io_wald.json");
  CHECK(envelope["config"]["constraint_matrix"][0] == json::array({1.0, 0.0}));
  const double w = envelope["results"]["w_stat"];
  const double p = envelope["results"]["p_value"];
  CHECK(w >= 0.0);
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);
  CHECK(envelope["results"]["df"] == 1);
}

TEST_CASE("dar-fit runs end to end on ingested data") {
  std::ostringstream csv;
  csv << "y\n";
  Rng rng(31415, {0});
  double y = 1.0;
  for (int t = 0; t < 400; ++t) {
    y = 0.3 * y + draw_std_normal(rng) * std::sqrt(1.0 + 0.2 * y * y);
    if (y == 0.0) y = 1e-9;
    csv << io::format_double(y) << '\n';
  }
  write_file("cli_io_dar.csv", csv.str());
  REQUIRE(run_cli({"dar-fit", "--data", "cli_io_dar.csv", "--column", "y", "--format",
                   "json", "--out", "cli_io_dar.json"}) == 0);
  const json fit = read_json("cli_io_dar.json")["results"];
  CHECK(fit["converged"] == true);
  CHECK(std::abs(fit["phi"].get<double>() - 0.3) < 0.25);
}

TEST_CASE("theory subcommand reports the asymptotic sds") {
  REQUIRE(run_cli({"theory", "--phi", "0.5", "--alpha", "3.3058", "--n", "100",
                   "--format", "json", "--out", "cli_io_theory.json"}) == 0);
  const json results = read_json("cli_io_theory.json")["results"];
  CHECK(io::fixed4(results["asymptotic_sd"]["sd_phi"].get<double>()) == "0.1818");
  CHECK(io::fixed4(results["asymptotic_sd"]["sd_alpha"].get<double>()) == "0.4675");
  CHECK(io::fixed4(results["asymptotic_sd"]["sd_gamma"].get<double>()) == "0.1110");
  CHECK(results["method"] == "quadrature");
}

TEST_CASE("fit exports residuals and the correlogram as CSV") {
  REQUIRE(run_cli({"simulate", "--phi", "0.5", "--alpha", "3.3058", "--n", "120",
                   "--seed", "88", "--format", "csv", "--out", "cli_io_sim3.csv"}) == 0);
  REQUIRE(run_cli({"fit", "--data", "cli_io_sim3.csv", "--column", "level", "--acf-lags",
                   "8", "--acf-out", "cli_io_acf.csv", "--residuals-out",
                   "cli_io_res.csv", "--format", "json", "--out", "cli_io_fit3.json"}) ==
          0);

  const std::string acf_csv = read_file("cli_io_acf.csv");
  CHECK(acf_csv.rfind("lag,acf,pacf,acf_squared,pacf_squared", 0) == 0);
  std::size_t lines = 0;
  for (char ch : acf_csv) lines += ch == '\n' ? 1 : 0;
  CHECK(lines == 9);  // header + 8 lags

  const std::string res_csv = read_file("cli_io_res.csv");
  CHECK(res_csv.rfind("t,residual", 0) == 0);

  const json results = read_json("cli_io_fit3.json")["results"];
  REQUIRE(results.contains("correlogram"));
  const auto acf = results["correlogram"]["acf"].get<std::vector<double>>();
  const auto residuals = results["residuals"].get<std::vector<double>>();
  REQUIRE(acf.size() == 8);
  // the JSON correlogram is the library ACF of the JSON residuals
  const auto expected = residual_acf(residuals, 8);
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(acf[k] == doctest::Approx(expected[k]).epsilon(1e-12));
  }
}

TEST_CASE("mc-hist CSV has one row per replication") {
  REQUIRE(run_cli({"mc-hist", "--alpha", "3.3058", "--n", "100", "--reps", "64",
                   "--seed", "3", "--format", "csv", "--out", "cli_io_hist.csv"}) == 0);
  const std::string csv = read_file("cli_io_hist.csv");
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 65);  // header + 64 values
}

TEST_CASE("series serialize to CSV and JSON") {
  const Series s({1.5, -2.0, 0.25});
  std::ostringstream csv;
  io::write_series_csv(csv, s);
  CHECK(csv.str() == "t,value\n0,1.5\n1,-2\n2,0.25\n");
  const json j = io::to_json(s);
  CHECK(j["values"].get<std::vector<double>>() == s.values());
}

TEST_CASE("man page covers every subcommand") {
  REQUIRE(run_cli({"man", "--out", "cli_io_man.troff"}) == 0);
  const std::string man = read_file("cli_io_man.troff");
  CHECK(man.rfind(".TH DARWIN 1", 0) == 0);
  for (const char* name : {"simulate", "fit", "stability", "wald", "calibrate", "theory",
                           "mc-table", "mc-power", "mc-hist", "clt-check", "dar-fit",
                           "volatility"}) {
    CAPTURE(name);
    CHECK(man.find(std::string(".B ") + name) != std::string::npos);
  }
  CHECK(man.find("DARWIN_WORKERS") != std::string::npos);
}

TEST_CASE("exit codes distinguish usage from data errors") {
  CHECK(run_cli({"no-such-command"}) == 1);
  CHECK(run_cli({"fit"}) == 1);  // --data is required
  CHECK(run_cli({"fit", "--data", "cli_io_does_not_exist.csv"}) == 2);
  CHECK(run_cli({"calibrate", "--phi", "0.5", "--dist", "cauchy"}) == 1);
  CHECK(run_cli({"simulate", "--phi", "0.5", "--alpha", "3.3058", "--n", "10", "--y0",
                 "0"}) == 2);

  write_file("cli_io_degenerate.csv", "p\n1\n2\n4\n8\n");
  CHECK(run_cli({"fit", "--data", "cli_io_degenerate.csv", "--column", "p"}) == 2);
}

TEST_CASE("the installed binary behaves like the in-process surface") {
  TinyFixture fixture;
  const std::string cmd = std::string(DARWIN_CLI_PATH) +
                          " fit --data cli_io_tiny.csv --column p --format json --out "
                          "cli_io_bin.json > /dev/null 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  const json fit = read_json("cli_io_bin.json")["results"];
  CHECK(fit["phi_hat"] == 1.25);

  const std::string bad = std::string(DARWIN_CLI_PATH) + " fit --data missing.csv 2>/dev/null";
  const int status = std::system(bad.c_str());
  CHECK(WEXITSTATUS(status) == 2);
}
