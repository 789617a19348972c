#include "darwin/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "darwin/errors.hpp"
#include "darwin/io.hpp"

namespace darwin::cli {

namespace {

using io::json;

struct CommonOpts {
  std::string format = "text";
  std::string out;
  std::uint64_t seed = 1;
  bool timings = false;
  unsigned workers = 0;
};

void add_common(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--format", c.format, "output format")
      ->check(CLI::IsMember({"text", "json", "csv"}))
      ->capture_default_str();
  sub->add_option("-o,--out", c.out, "write output to a file instead of stdout");
  sub->add_option("--seed", c.seed, "master RNG seed")->capture_default_str();
  sub->add_flag("--timings", c.timings, "include wall time in JSON output");
  sub->add_option("--workers", c.workers,
                  "worker threads for parallel commands (0 = auto; DARWIN_WORKERS overrides)");
}

struct IngestOpts {
  std::string data;
  std::string column = "0";
  std::string transform = "none";
  bool drop_na = false;
};

void add_ingest(CLI::App* sub, IngestOpts& i) {
  sub->add_option("--data", i.data, "input CSV file (header row required)")->required();
  sub->add_option("--column", i.column, "column name or 0-based index")->capture_default_str();
  sub->add_option("--transform", i.transform, "none | logret | logret_pct")
      ->check(CLI::IsMember({"none", "logret", "logret_pct"}))
      ->capture_default_str();
  sub->add_flag("--drop-na", i.drop_na, "skip rows with missing values");
}

Series ingest(const IngestOpts& i) {
  io::IngestConfig cfg;
  cfg.path = i.data;
  cfg.column = i.column;
  cfg.transform = io::transform_from_string(i.transform);
  cfg.drop_na = i.drop_na;
  return io::load_series(cfg);
}

json ingest_config_json(const IngestOpts& i) {
  return json{{"data", i.data},
              {"column", i.column},
              {"transform", i.transform},
              {"drop_na", i.drop_na}};
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + ": empty list");
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  const auto doubles = parse_double_list(text, what);
  std::vector<std::size_t> out;
  for (double v : doubles) {
    if (!(v >= 1.0) || v != std::floor(v)) {
      throw std::invalid_argument(std::string(what) + ": entries must be positive integers");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

// Emits the selected format to --out or stdout. Output files depend only on
// the experiment (inputs + seed), never on worker count or clock, except for
// the opt-in wall-time field.
class Emitter {
 public:
  Emitter(std::string command, const CommonOpts& common)
      : command_(std::move(command)),
        common_(common),
        start_(std::chrono::steady_clock::now()) {}

  void warn(std::string msg) { warnings_.push_back(std::move(msg)); }

  void emit(const json& config, const json& results,
            const std::function<void(std::ostream&)>& text_fn,
            const std::function<void(std::ostream&)>& csv_fn) const {
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!common_.out.empty()) {
      file.open(common_.out, std::ios::binary);
      if (!file) throw data_error("cannot open output file '" + common_.out + "'");
      os = &file;
    }
    if (common_.format == "json") {
      json envelope{{"command", command_},
                    {"config", config},
                    {"results", results},
                    {"seeds", json{{"master", common_.seed}}},
                    {"warnings", warnings_}};
      if (common_.timings) {
        const auto elapsed = std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - start_)
                                 .count();
        envelope["wall_time_seconds"] = elapsed;
      }
      *os << envelope.dump(2) << '\n';
    } else if (common_.format == "csv") {
      csv_fn(*os);
    } else {
      text_fn(*os);
      for (const auto& w : warnings_) *os << "warning: " << w << '\n';
    }
  }

 private:
  std::string command_;
  const CommonOpts& common_;
  std::vector<std::string> warnings_;
  std::chrono::steady_clock::time_point start_;
};

void text_kv(std::ostream& os, std::string_view key, const std::string& value) {
  os << std::left << std::setw(12) << key << value << '\n';
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  CommonOpts common;
  double phi = 0.0;
  double alpha = 1.0;
  std::size_t n = 100;
  std::string dist = "gaussian";
  std::string y0 = "random";
  bool auxiliary = false;
  double x0 = 1.0;
};

void run_simulate(const SimulateArgs& a) {
  Emitter emitter("simulate", a.common);
  const Innovation spec = innovation_from_string(a.dist);
  const DarwinParams params{a.phi, a.alpha};

  Path path;
  if (a.auxiliary) {
    path = simulate_auxiliary(params, spec, a.n, a.x0, a.common.seed);
  } else {
    InitialValue policy = InitialValue::random();
    if (a.y0 != "random") {
      try {
        policy = InitialValue::fixed(std::stod(a.y0));
      } catch (const std::exception&) {
        throw std::invalid_argument("--y0 expects a number or 'random'");
      }
    }
    path = simulate_darwin(params, spec, a.n, policy, a.common.seed);
  }

  const json config{{"phi", a.phi},     {"alpha", a.alpha}, {"n", a.n},
                    {"dist", a.dist},   {"y0", a.y0},       {"auxiliary", a.auxiliary},
                    {"x0", a.x0}};
  auto csv = [&path](std::ostream& os) { io::write_path_csv(os, path); };
  emitter.emit(config, io::to_json(path), csv, csv);
}

// --------------------------------------------------------------------- fit

struct FitArgs {
  CommonOpts common;
  IngestOpts ingest;
  std::size_t acf_lags = 0;      // 0: no correlogram
  std::string acf_out;           // CSV file for the correlogram
  std::string residuals_out;     // CSV file for the residual sequence
};

void run_fit(const FitArgs& a) {
  Emitter emitter("fit", a.common);
  const Series series = ingest(a.ingest);
  const QmleFit fit = qmle_fit(series);

  io::AcfTable acf_table;
  if (a.acf_lags > 0 || !a.acf_out.empty()) {
    const std::size_t lags = a.acf_lags > 0 ? a.acf_lags : 20;
    acf_table = io::residual_acf_table(fit.residuals, lags);
    if (!a.acf_out.empty()) {
      std::ofstream out(a.acf_out, std::ios::binary);
      if (!out) throw data_error("cannot open output file '" + a.acf_out + "'");
      io::write_acf_csv(out, acf_table);
    }
  }
  if (!a.residuals_out.empty()) {
    std::ofstream out(a.residuals_out, std::ios::binary);
    if (!out) throw data_error("cannot open output file '" + a.residuals_out + "'");
    io::write_residuals_csv(out, fit.residuals);
  }

  auto text = [&fit](std::ostream& os) {
    os << "phi     " << io::fixed4(fit.phi_hat) << " (" << io::fixed4(fit.se_phi) << ")\n";
    os << "alpha   " << io::fixed4(fit.alpha_hat) << " (" << io::fixed4(fit.se_alpha) << ")\n";
    os << "alpha*  " << io::fixed4(fit.alpha_star) << '\n';
    os << "kappa   " << io::fixed4(fit.kappa_hat) << '\n';
    os << "n       " << fit.n << '\n';
  };
  auto csv = [&fit](std::ostream& os) {
    os << "param,estimate,se\n";
    os << "phi," << io::format_double(fit.phi_hat) << ',' << io::format_double(fit.se_phi)
       << '\n';
    os << "alpha," << io::format_double(fit.alpha_hat) << ','
       << io::format_double(fit.se_alpha) << '\n';
    os << "alpha_star," << io::format_double(fit.alpha_star) << ",\n";
    os << "kappa," << io::format_double(fit.kappa_hat) << ",\n";
  };
  json config = ingest_config_json(a.ingest);
  config["acf_lags"] = a.acf_lags;
  json results = io::to_json(fit);
  if (a.acf_lags > 0) results["correlogram"] = io::to_json(acf_table);
  emitter.emit(config, results, text, csv);
}

// --------------------------------------------------------------- stability

void run_stability(const IngestOpts& ingest_opts, const CommonOpts& common) {
  Emitter emitter("stability", common);
  const Series series = ingest(ingest_opts);
  const StabilityReport report = lyapunov_estimate(series);

  auto text = [&report](std::ostream& os) {
    text_kv(os, "gamma_hat", io::fixed4(report.gamma_hat));
    text_kv(os, "sigma2_hat", io::fixed4(report.sigma2_hat));
    text_kv(os, "t_stat", io::fixed4(report.t_stat));
    text_kv(os, "p_value", io::fixed4(report.p_value));
    text_kv(os, "n", std::to_string(report.n));
  };
  auto csv = [&report](std::ostream& os) {
    os << "gamma_hat,sigma2_hat,t_stat,p_value,n\n";
    os << io::format_double(report.gamma_hat) << ',' << io::format_double(report.sigma2_hat)
       << ',' << io::format_double(report.t_stat) << ',' << io::format_double(report.p_value)
       << ',' << report.n << '\n';
  };
  emitter.emit(ingest_config_json(ingest_opts), io::to_json(report), text, csv);
}

// -------------------------------------------------------------------- wald

struct WaldArgs {
  CommonOpts common;
  IngestOpts ingest;
  std::string gamma;  // "a,b" or "a,b;c,d"
  std::string r;      // "v" or "v,w"
  double test_phi = 0.0;
  bool has_test_phi = false;
  double test_alpha = 0.0;
  bool has_test_alpha = false;
};

void run_wald(const WaldArgs& a) {
  Emitter emitter("wald", a.common);
  const Series series = ingest(a.ingest);
  const QmleFit fit = qmle_fit(series);

  std::vector<std::array<double, 2>> constraint;
  std::vector<double> rhs;
  if (!a.gamma.empty()) {
    std::stringstream ss(a.gamma);
    std::string row;
    while (std::getline(ss, row, ';')) {
      const auto cells = parse_double_list(row, "--gamma");
      if (cells.size() != 2) {
        throw std::invalid_argument("--gamma rows must have exactly two entries");
      }
      constraint.push_back({cells[0], cells[1]});
    }
    if (a.r.empty()) {
      rhs.assign(constraint.size(), 0.0);
    } else {
      rhs = parse_double_list(a.r, "--r");
    }
  } else {
    if (a.has_test_phi) {
      constraint.push_back({1.0, 0.0});
      rhs.push_back(a.test_phi);
    }
    if (a.has_test_alpha) {
      constraint.push_back({0.0, 1.0});
      rhs.push_back(a.test_alpha);
    }
    if (constraint.empty()) {  // default: the phi0 = 0 hypothesis
      constraint.push_back({1.0, 0.0});
      rhs.push_back(0.0);
    }
  }

  const WaldReport report = wald_test(fit, constraint, rhs);
  json config = ingest_config_json(a.ingest);
  config["constraint_matrix"] = io::to_json(report)["constraint_matrix"];
  config["constraint_value"] = rhs;

  auto text = [&](std::ostream& os) {
    text_kv(os, "w_stat", io::fixed4(report.w_stat));
    text_kv(os, "df", std::to_string(report.df));
    text_kv(os, "p_value", io::fixed4(report.p_value));
    os << "fit: phi " << io::fixed4(fit.phi_hat) << " (" << io::fixed4(fit.se_phi)
       << "), alpha " << io::fixed4(fit.alpha_hat) << " (" << io::fixed4(fit.se_alpha)
       << ")\n";
  };
  auto csv = [&report](std::ostream& os) {
    os << "w_stat,df,p_value\n";
    os << io::format_double(report.w_stat) << ',' << report.df << ','
       << io::format_double(report.p_value) << '\n';
  };
  json results = io::to_json(report);
  results["fit"] = io::to_json(fit, false);
  emitter.emit(config, results, text, csv);
}

// --------------------------------------------------------------- calibrate

struct CalibrateArgs {
  CommonOpts common;
  double phi = 0.5;
  std::string dist = "gaussian";
  double lo = 1e-6;
  double hi = 1e3;
};

void run_calibrate(const CalibrateArgs& a) {
  Emitter emitter("calibrate", a.common);
  const Innovation spec = innovation_from_string(a.dist);
  const double alpha = calibrate_alpha(a.phi, spec, a.lo, a.hi);
  const double gamma = lyapunov_gamma({a.phi, alpha}, spec);

  const json config{{"phi", a.phi}, {"dist", a.dist}, {"bracket", {a.lo, a.hi}}};
  const json results{{"alpha", alpha}, {"gamma_at_root", gamma}};
  auto text = [&](std::ostream& os) { text_kv(os, "alpha", io::fixed4(alpha)); };
  auto csv = [&](std::ostream& os) {
    os << "alpha,gamma_at_root\n"
       << io::format_double(alpha) << ',' << io::format_double(gamma) << '\n';
  };
  emitter.emit(config, results, text, csv);
}

// ------------------------------------------------------------------ theory

struct TheoryArgs {
  CommonOpts common;
  double phi = 0.5;
  double alpha = 1.0;
  std::string dist = "gaussian";
  std::string method = "quadrature";
  std::uint64_t draws = 10'000'000;
  std::size_t n = 0;  // optional: also report asymptotic sds
};

void run_theory(const TheoryArgs& a) {
  Emitter emitter("theory", a.common);
  const Innovation spec = innovation_from_string(a.dist);
  LyapunovOptions opts;
  opts.method =
      a.method == "montecarlo" ? LyapunovMethod::MonteCarlo : LyapunovMethod::Quadrature;
  opts.mc_draws = a.draws;
  opts.mc_seed = a.common.seed;
  opts.workers = a.common.workers;
  const LyapunovProfile profile = lyapunov_moments({a.phi, a.alpha}, spec, opts);
  if (profile.fell_back) emitter.warn("quadrature did not converge; Monte Carlo fallback used");

  json results = io::to_json(profile);
  if (a.n > 0) {
    results["asymptotic_sd"] =
        io::to_json(asymptotic_sd(a.alpha, kurtosis(spec), profile.sigma2, a.n));
  }
  const json config{{"phi", a.phi},       {"alpha", a.alpha}, {"dist", a.dist},
                    {"method", a.method}, {"draws", a.draws}, {"n", a.n}};
  auto text = [&](std::ostream& os) {
    text_kv(os, "gamma0", io::fixed4(profile.gamma0));
    text_kv(os, "sigma2", io::fixed4(profile.sigma2));
    text_kv(os, "method",
            profile.method == LyapunovMethod::Quadrature ? "quadrature" : "montecarlo");
    if (a.n > 0) {
      const auto sd = asymptotic_sd(a.alpha, kurtosis(spec), profile.sigma2, a.n);
      text_kv(os, "sd_phi", io::fixed4(sd.sd_phi));
      text_kv(os, "sd_alpha", io::fixed4(sd.sd_alpha));
      text_kv(os, "sd_gamma", io::fixed4(sd.sd_gamma));
    }
  };
  auto csv = [&](std::ostream& os) {
    os << "gamma0,sigma2,method,err_estimate\n";
    os << io::format_double(profile.gamma0) << ',' << io::format_double(profile.sigma2) << ','
       << (profile.method == LyapunovMethod::Quadrature ? "quadrature" : "montecarlo") << ','
       << io::format_double(profile.err_estimate) << '\n';
  };
  emitter.emit(config, results, text, csv);
}

// ---------------------------------------------------------------- mc-table

struct McTableArgs {
  CommonOpts common;
  std::string dist = "gaussian";
  double phi = 0.5;
  std::string alphas;
  std::string ns;
  std::size_t reps = 1000;
};

void run_mc_table(const McTableArgs& a) {
  Emitter emitter("mc-table", a.common);
  StudyConfig config;
  config.spec = innovation_from_string(a.dist);
  config.phi = a.phi;
  config.alpha_list = parse_double_list(a.alphas, "--alphas");
  config.n_list = parse_size_list(a.ns, "--ns");
  config.replications = a.reps;
  config.master_seed = a.common.seed;
  config.workers = a.common.workers;

  const StudyTable table = run_estimation_study(config);
  for (const auto& row : table.rows) {
    if (row.excluded > 0) {
      emitter.warn(std::to_string(row.excluded) + " replications excluded in cell alpha=" +
                   io::format_double(row.alpha0) + ", n=" + std::to_string(row.n));
    }
  }

  const json cfg{{"dist", a.dist}, {"phi", a.phi},   {"alphas", config.alpha_list},
                 {"ns", config.n_list}, {"reps", a.reps}};
  auto text = [&table](std::ostream& os) {
    os << std::left << std::setw(10) << "alpha0" << std::setw(6) << "n" << std::setw(5) << ""
       << std::setw(9) << "phi" << std::setw(9) << "alpha" << std::setw(9) << "gamma" << '\n';
    for (const auto& row : table.rows) {
      const char* labels[3] = {"EM", "ESD", "ASD"};
      for (int line = 0; line < 3; ++line) {
        os << std::left << std::setw(10) << (line == 0 ? io::fixed4(row.alpha0) : "")
           << std::setw(6) << (line == 0 ? std::to_string(row.n) : "") << std::setw(5)
           << labels[line];
        auto pick = [line](const EstimatorSummary& s) {
          return line == 0 ? s.em : (line == 1 ? s.esd : s.asd);
        };
        os << std::setw(9) << io::fixed4(pick(row.phi)) << std::setw(9)
           << io::fixed4(pick(row.alpha)) << std::setw(9) << io::fixed4(pick(row.gamma))
           << '\n';
      }
    }
  };
  auto csv = [&table](std::ostream& os) { io::write_study_csv(os, table); };
  emitter.emit(cfg, io::to_json(table), text, csv);
}

// ---------------------------------------------------------------- mc-power

struct McPowerArgs {
  CommonOpts common;
  std::string dist = "gaussian";
  double phi = 0.5;
  std::string alphas;  // empty: default grid around the stability boundary
  std::string ns = "100,200";
  std::size_t reps = 1000;
  double level = 0.05;
  std::size_t grid_points = 11;
  double gamma_span = 0.05;
};

void run_mc_power(const McPowerArgs& a) {
  Emitter emitter("mc-power", a.common);
  PowerConfig config;
  config.spec = innovation_from_string(a.dist);
  config.phi = a.phi;
  config.alpha_grid =
      a.alphas.empty()
          ? default_power_alpha_grid(a.phi, config.spec, a.grid_points, a.gamma_span)
          : parse_double_list(a.alphas, "--alphas");
  config.n_list = parse_size_list(a.ns, "--ns");
  config.replications = a.reps;
  config.level = a.level;
  config.master_seed = a.common.seed;
  config.workers = a.common.workers;

  const PowerTable table = run_size_power(config);
  const json cfg{{"dist", a.dist},       {"phi", a.phi},   {"alphas", config.alpha_grid},
                 {"ns", config.n_list},  {"reps", a.reps}, {"level", a.level}};
  auto text = [&table](std::ostream& os) {
    os << std::left << std::setw(10) << "alpha0" << std::setw(10) << "gamma0" << std::setw(6)
       << "n" << "rejection\n";
    for (const auto& pt : table.points) {
      os << std::left << std::setw(10) << io::fixed4(pt.alpha0) << std::setw(10)
         << io::fixed4(pt.gamma0) << std::setw(6) << std::to_string(pt.n)
         << io::fixed4(pt.rejection_rate) << '\n';
    }
  };
  auto csv = [&table](std::ostream& os) { io::write_power_csv(os, table); };
  emitter.emit(cfg, io::to_json(table), text, csv);
}

// ----------------------------------------------------------------- mc-hist

struct McHistArgs {
  CommonOpts common;
  std::string dist = "gaussian";
  double phi = 0.5;
  double alpha = 1.0;
  std::size_t n = 200;
  std::size_t reps = 1000;
  std::string target = "gamma";
};

void run_mc_hist(const McHistArgs& a) {
  Emitter emitter("mc-hist", a.common);
  StudyConfig config;
  config.spec = innovation_from_string(a.dist);
  config.phi = a.phi;
  config.alpha_list = {a.alpha};
  config.n_list = {a.n};
  config.replications = a.reps;
  config.master_seed = a.common.seed;
  config.workers = a.common.workers;

  const SamplingDistribution hist =
      sampling_distribution(config, io::study_target_from_string(a.target));
  if (hist.excluded > 0) {
    emitter.warn(std::to_string(hist.excluded) + " replications excluded");
  }

  const json cfg{{"dist", a.dist}, {"phi", a.phi},   {"alpha", a.alpha},
                 {"n", a.n},       {"reps", a.reps}, {"target", a.target}};
  auto text = [&hist](std::ostream& os) {
    text_kv(os, "target", std::string(io::to_string(hist.target)));
    text_kv(os, "count", std::to_string(hist.standardized.size()));
    text_kv(os, "truth", io::fixed4(hist.truth));
    text_kv(os, "overlay_var", io::fixed4(hist.overlay_variance));
  };
  auto csv = [&hist](std::ostream& os) { io::write_hist_csv(os, hist); };
  emitter.emit(cfg, io::to_json(hist), text, csv);
}

// --------------------------------------------------------------- clt-check

struct CltArgs {
  CommonOpts common;
  double phi = 0.5;
  double alpha = 3.3058;
  std::string dist = "gaussian";
  std::size_t n = 2000;
  std::size_t reps = 1000;
  std::string s_grid = "0.25,0.5,0.75,1";
};

void run_clt_check(const CltArgs& a) {
  Emitter emitter("clt-check", a.common);
  CltOptions opts;
  opts.n = a.n;
  opts.replications = a.reps;
  opts.s_grid = parse_double_list(a.s_grid, "--s-grid");
  opts.seed = a.common.seed;
  opts.workers = a.common.workers;

  const CltReport report = clt_path_check({a.phi, a.alpha}, innovation_from_string(a.dist), opts);
  const json cfg{{"phi", a.phi}, {"alpha", a.alpha},   {"dist", a.dist},
                 {"n", a.n},     {"reps", a.reps},     {"s_grid", opts.s_grid}};
  auto text = [&report](std::ostream& os) {
    os << std::left << std::setw(8) << "s" << std::setw(12) << "var" << std::setw(12)
       << "target" << std::setw(10) << "ks_p" << "pass\n";
    for (const auto& pt : report.points) {
      os << std::left << std::setw(8) << io::fixed4(pt.s) << std::setw(12)
         << io::fixed4(pt.variance) << std::setw(12) << io::fixed4(pt.target_variance)
         << std::setw(10) << io::fixed4(pt.ks_p) << (pt.pass ? "yes" : "no") << '\n';
    }
    os << "all_pass    " << (report.all_pass ? "yes" : "no") << '\n';
  };
  auto csv = [&report](std::ostream& os) { io::write_clt_csv(os, report); };
  emitter.emit(cfg, io::to_json(report), text, csv);
}

// ----------------------------------------------------------------- dar-fit

struct DarFitArgs {
  CommonOpts common;
  IngestOpts ingest;
  double init_phi = 0.0;
  double init_omega = 0.0;  // 0: scale-derived default
  double init_alpha = 0.1;
  std::size_t max_iter = 4000;
};

void run_dar_fit(const DarFitArgs& a) {
  Emitter emitter("dar-fit", a.common);
  const Series series = ingest(a.ingest);

  double init_omega = a.init_omega;
  if (init_omega <= 0.0) {
    double msq = 0.0;
    for (double v : series.values()) msq += v * v;
    msq /= static_cast<double>(series.values().size());
    init_omega = 0.5 * msq;
  }
  DarFitOptions opts;
  opts.max_iterations = a.max_iter;
  const DarFit fit = dar_qmle_fit(series, {a.init_phi, init_omega, a.init_alpha}, opts);
  if (!fit.converged) emitter.warn("optimizer hit the iteration cap; best point reported");

  json config = ingest_config_json(a.ingest);
  config["init"] = {{"phi", a.init_phi}, {"omega", init_omega}, {"alpha", a.init_alpha}};
  config["max_iter"] = a.max_iter;

  auto se_text = [&fit](int i) {
    return std::isfinite(fit.se[static_cast<std::size_t>(i)])
               ? io::fixed4(fit.se[static_cast<std::size_t>(i)])
               : std::string("n/a");
  };
  auto text = [&](std::ostream& os) {
    os << "phi     " << io::fixed4(fit.params.phi) << " (" << se_text(0) << ")\n";
    os << "omega   " << io::format_double(fit.params.omega) << " (" << se_text(1) << ")\n";
    os << "alpha   " << io::fixed4(fit.params.alpha) << " (" << se_text(2) << ")\n";
    text_kv(os, "loglik", io::fixed4(fit.loglik));
    text_kv(os, "converged", fit.converged ? "yes" : "no");
    text_kv(os, "iterations", std::to_string(fit.iterations));
  };
  auto csv = [&fit](std::ostream& os) {
    os << "param,estimate,se\n";
    const char* names[3] = {"phi", "omega", "alpha"};
    const double values[3] = {fit.params.phi, fit.params.omega, fit.params.alpha};
    for (int i = 0; i < 3; ++i) {
      os << names[i] << ',' << io::format_double(values[i]) << ',';
      if (std::isfinite(fit.se[static_cast<std::size_t>(i)])) {
        os << io::format_double(fit.se[static_cast<std::size_t>(i)]);
      }
      os << '\n';
    }
  };
  emitter.emit(config, io::to_json(fit), text, csv);
}

// -------------------------------------------------------------- volatility

void run_volatility(const IngestOpts& ingest_opts, const CommonOpts& common) {
  Emitter emitter("volatility", common);
  const Series series = ingest(ingest_opts);
  const QmleFit fit = qmle_fit(series);

  // log(alpha_hat * y_{t-1}^2) = log(alpha_hat) + 2 log|y_{t-1}|, t = 1..n
  const double log_alpha = std::log(fit.alpha_hat);
  const auto& y = series.values();
  std::vector<double> logvol(y.size() - 1);
  for (std::size_t t = 1; t < y.size(); ++t) {
    logvol[t - 1] = log_alpha + 2.0 * std::log(std::abs(y[t - 1]));
  }

  const json results{{"alpha_hat", fit.alpha_hat}, {"log_volatility", logvol}};
  auto csv = [&logvol](std::ostream& os) {
    os << "t,log_volatility\n";
    for (std::size_t i = 0; i < logvol.size(); ++i) {
      os << (i + 1) << ',' << io::format_double(logvol[i]) << '\n';
    }
  };
  emitter.emit(ingest_config_json(ingest_opts), results, csv, csv);
}

// --------------------------------------------------------------------- man

void write_man_page(std::ostream& os, const CLI::App& app,
                    const std::vector<const CLI::App*>& subs) {
  os << ".TH DARWIN 1 \"\" \"darwin\" \"User Commands\"\n";
  os << ".SH NAME\n";
  os << "darwin \\- " << app.get_description() << '\n';
  os << ".SH SYNOPSIS\n.B darwin\n.I command\n[options]\n";
  os << ".SH COMMANDS\n";
  for (const auto* sub : subs) {
    os << ".TP\n.B " << sub->get_name() << '\n' << sub->get_description() << '\n';
    os << ".RS\n";
    for (const auto* opt : sub->get_options()) {
      if (opt->get_name() == "--help") continue;
      os << ".TP\n.B " << opt->get_name();
      if (!opt->get_type_name().empty()) os << ' ' << opt->get_type_name();
      if (opt->get_required()) os << " (required)";
      os << '\n' << opt->get_description() << '\n';
    }
    os << ".RE\n";
  }
  os << ".SH EXIT STATUS\n"
     << "0 on success, 1 on a usage error, 2 on a data or numeric error.\n";
  os << ".SH ENVIRONMENT\n.TP\n.B DARWIN_WORKERS\n"
     << "Overrides the worker-thread count of the mc-* and clt-check commands.\n";
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{
      "simulation, estimation and stability testing for the intercept-free "
      "double-autoregressive model"};
  app.require_subcommand(1);
  std::vector<const CLI::App*> subs;

  SimulateArgs sim;
  auto* simulate =
      app.add_subcommand("simulate", "simulate a trajectory in log-sign form");
  simulate->add_option("--phi", sim.phi, "drift coefficient")->required();
  simulate->add_option("--alpha", sim.alpha, "volatility coefficient (> 0)")->required();
  simulate->add_option("--n", sim.n, "number of steps")->required();
  simulate->add_option("--dist", sim.dist, "innovation law: gaussian | t5std | laplace")
      ->capture_default_str();
  simulate->add_option("--y0", sim.y0, "initial level: a number, or 'random'")
      ->capture_default_str();
  simulate->add_flag("--auxiliary", sim.auxiliary, "simulate the positive auxiliary process");
  simulate->add_option("--x0", sim.x0, "auxiliary initial level (> 0)")->capture_default_str();
  add_common(simulate, sim.common);
  simulate->callback([&sim] { run_simulate(sim); });
  subs.push_back(simulate);

  FitArgs fita;
  auto* fit = app.add_subcommand("fit", "closed-form QMLE of (phi, alpha) on a series");
  add_ingest(fit, fita.ingest);
  fit->add_option("--acf-lags", fita.acf_lags,
                  "add a residual correlogram with this many lags to the results");
  fit->add_option("--acf-out", fita.acf_out, "write the residual correlogram CSV here");
  fit->add_option("--residuals-out", fita.residuals_out,
                  "write the residual sequence CSV here");
  add_common(fit, fita.common);
  fit->callback([&fita] { run_fit(fita); });
  subs.push_back(fit);

  IngestOpts stab_ingest;
  CommonOpts stab_common;
  auto* stability =
      app.add_subcommand("stability", "Lyapunov-exponent estimate and stability test");
  add_ingest(stability, stab_ingest);
  add_common(stability, stab_common);
  stability->callback(
      [&stab_ingest, &stab_common] { run_stability(stab_ingest, stab_common); });
  subs.push_back(stability);

  WaldArgs wald;
  auto* wald_cmd = app.add_subcommand("wald", "Wald test of linear restrictions on (phi, alpha)");
  add_ingest(wald_cmd, wald.ingest);
  wald_cmd->add_option("--gamma", wald.gamma, "restriction rows 'a,b' or 'a,b;c,d'");
  wald_cmd->add_option("--r", wald.r, "restriction values 'v' or 'v,w'");
  auto* tp = wald_cmd->add_option("--test-phi", wald.test_phi, "test phi = VALUE");
  auto* ta = wald_cmd->add_option("--test-alpha", wald.test_alpha, "test alpha = VALUE");
  add_common(wald_cmd, wald.common);
  wald_cmd->callback([&wald, tp, ta] {
    wald.has_test_phi = tp->count() > 0;
    wald.has_test_alpha = ta->count() > 0;
    run_wald(wald);
  });
  subs.push_back(wald_cmd);

  CalibrateArgs cal;
  auto* calibrate =
      app.add_subcommand("calibrate", "alpha at the stability boundary (gamma0 = 0)");
  calibrate->add_option("--phi", cal.phi, "drift coefficient")->required();
  calibrate->add_option("--dist", cal.dist, "innovation law")->capture_default_str();
  calibrate->add_option("--lo", cal.lo, "bracket lower end")->capture_default_str();
  calibrate->add_option("--hi", cal.hi, "bracket upper end")->capture_default_str();
  add_common(calibrate, cal.common);
  calibrate->callback([&cal] { run_calibrate(cal); });
  subs.push_back(calibrate);

  TheoryArgs theory;
  auto* theory_cmd =
      app.add_subcommand("theory", "theoretical Lyapunov exponent and variance");
  theory_cmd->add_option("--phi", theory.phi, "drift coefficient")->required();
  theory_cmd->add_option("--alpha", theory.alpha, "volatility coefficient")->required();
  theory_cmd->add_option("--dist", theory.dist, "innovation law")->capture_default_str();
  theory_cmd->add_option("--method", theory.method, "quadrature | montecarlo")
      ->check(CLI::IsMember({"quadrature", "montecarlo"}))
      ->capture_default_str();
  theory_cmd->add_option("--draws", theory.draws, "Monte Carlo draw count")
      ->capture_default_str();
  theory_cmd->add_option("--n", theory.n, "sample size for asymptotic sds (optional)");
  add_common(theory_cmd, theory.common);
  theory_cmd->callback([&theory] { run_theory(theory); });
  subs.push_back(theory_cmd);

  McTableArgs mct;
  auto* mc_table = app.add_subcommand(
      "mc-table", "estimation study: EM/ESD/ASD of the QMLE and exponent estimator");
  mc_table->add_option("--dist", mct.dist, "innovation law")->capture_default_str();
  mc_table->add_option("--phi", mct.phi, "drift coefficient")->capture_default_str();
  mc_table->add_option("--alphas", mct.alphas, "comma-separated alpha values")->required();
  mc_table->add_option("--ns", mct.ns, "comma-separated sample sizes")->required();
  mc_table->add_option("--reps", mct.reps, "replications per cell")->capture_default_str();
  add_common(mc_table, mct.common);
  mc_table->callback([&mct] { run_mc_table(mct); });
  subs.push_back(mc_table);

  McPowerArgs mcp;
  auto* mc_power =
      app.add_subcommand("mc-power", "size and power of the stability test over alpha");
  mc_power->add_option("--dist", mcp.dist, "innovation law")->capture_default_str();
  mc_power->add_option("--phi", mcp.phi, "drift coefficient")->capture_default_str();
  mc_power->add_option("--alphas", mcp.alphas,
                       "comma-separated alpha grid (default: exponent sweep around the "
                       "stability boundary)");
  mc_power->add_option("--ns", mcp.ns, "comma-separated sample sizes")->capture_default_str();
  mc_power->add_option("--reps", mcp.reps, "replications")->capture_default_str();
  mc_power->add_option("--level", mcp.level, "nominal significance level")
      ->capture_default_str();
  mc_power->add_option("--grid-points", mcp.grid_points, "default grid size")
      ->capture_default_str();
  mc_power->add_option("--gamma-span", mcp.gamma_span, "default grid exponent half-width")
      ->capture_default_str();
  add_common(mc_power, mcp.common);
  mc_power->callback([&mcp] { run_mc_power(mcp); });
  subs.push_back(mc_power);

  McHistArgs mch;
  auto* mc_hist = app.add_subcommand(
      "mc-hist", "sampling distribution of an estimator with its normal overlay");
  mc_hist->add_option("--dist", mch.dist, "innovation law")->capture_default_str();
  mc_hist->add_option("--phi", mch.phi, "drift coefficient")->capture_default_str();
  mc_hist->add_option("--alpha", mch.alpha, "volatility coefficient")->required();
  mc_hist->add_option("--n", mch.n, "sample size")->capture_default_str();
  mc_hist->add_option("--reps", mch.reps, "replications")->capture_default_str();
  mc_hist->add_option("--target", mch.target, "gamma | phi | alpha")
      ->check(CLI::IsMember({"gamma", "phi", "alpha"}))
      ->capture_default_str();
  add_common(mc_hist, mch.common);
  mc_hist->callback([&mch] { run_mc_hist(mch); });
  subs.push_back(mc_hist);

  CltArgs clt;
  auto* clt_cmd = app.add_subcommand(
      "clt-check", "functional-CLT check of renormalized log levels on a grid");
  clt_cmd->add_option("--phi", clt.phi, "drift coefficient")->capture_default_str();
  clt_cmd->add_option("--alpha", clt.alpha, "volatility coefficient")->capture_default_str();
  clt_cmd->add_option("--dist", clt.dist, "innovation law")->capture_default_str();
  clt_cmd->add_option("--n", clt.n, "path length (>= 500)")->capture_default_str();
  clt_cmd->add_option("--reps", clt.reps, "replications (>= 500)")->capture_default_str();
  clt_cmd->add_option("--s-grid", clt.s_grid, "grid inside (0,1]")->capture_default_str();
  add_common(clt_cmd, clt.common);
  clt_cmd->callback([&clt] { run_clt_check(clt); });
  subs.push_back(clt_cmd);

  DarFitArgs dar;
  auto* dar_cmd = app.add_subcommand(
      "dar-fit", "comparison fit of the full model with a variance intercept");
  add_ingest(dar_cmd, dar.ingest);
  dar_cmd->add_option("--init-phi", dar.init_phi, "initial phi")->capture_default_str();
  dar_cmd->add_option("--init-omega", dar.init_omega,
                      "initial omega (0: derived from the data scale)");
  dar_cmd->add_option("--init-alpha", dar.init_alpha, "initial alpha")->capture_default_str();
  dar_cmd->add_option("--max-iter", dar.max_iter, "iteration cap")->capture_default_str();
  add_common(dar_cmd, dar.common);
  dar_cmd->callback([&dar] { run_dar_fit(dar); });
  subs.push_back(dar_cmd);

  IngestOpts vol_ingest;
  CommonOpts vol_common;
  auto* volatility =
      app.add_subcommand("volatility", "fitted log-volatility series of the QMLE model");
  add_ingest(volatility, vol_ingest);
  add_common(volatility, vol_common);
  volatility->callback(
      [&vol_ingest, &vol_common] { run_volatility(vol_ingest, vol_common); });
  subs.push_back(volatility);

  CommonOpts man_common;
  auto* man = app.add_subcommand("man", "emit the manual page (troff)");
  man->add_option("-o,--out", man_common.out, "write output to a file instead of stdout");
  man->callback([&app, &subs, &man_common] {
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!man_common.out.empty()) {
      file.open(man_common.out, std::ios::binary);
      if (!file) throw data_error("cannot open output file '" + man_common.out + "'");
      os = &file;
    }
    write_man_page(*os, app, subs);
  });
  subs.push_back(man);

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const data_error& e) {
    std::cerr << "darwin: error: data: " << e.what() << '\n';
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "darwin: error: numeric: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "darwin: error: usage: " << e.what() << '\n';
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "darwin: error: usage: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "darwin: error: internal: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace darwin::cli
