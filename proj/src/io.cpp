#include "darwin/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

#include "darwin/errors.hpp"

namespace darwin::io {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  // strip one layer of double quotes
  if (e - b >= 2 && s[b] == '"' && s[e - 1] == '"') {
    ++b;
    --e;
  }
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      cur.push_back(c);
    } else if (c == ',' && !quoted) {
      cells.push_back(trim(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

bool is_na_cell(const std::string& cell) {
  const std::string l = lower(cell);
  return l.empty() || l == "na" || l == "nan" || l == "null";
}

// Level is printed only while it round-trips as a normal double.
bool level_representable(double logabs) {
  constexpr double kLogMax = 709.78;
  constexpr double kLogMin = -708.39;
  return logabs <= kLogMax && logabs >= kLogMin;
}

}  // namespace

Transform transform_from_string(std::string_view name) {
  const std::string l = lower(name);
  if (l == "none") return Transform::None;
  if (l == "logret") return Transform::LogReturn;
  if (l == "logret_pct") return Transform::LogReturnPct;
  throw std::invalid_argument("unknown transform '" + std::string(name) +
                              "' (expected none, logret or logret_pct)");
}

std::string_view to_string(Transform t) {
  switch (t) {
    case Transform::None: return "none";
    case Transform::LogReturn: return "logret";
    case Transform::LogReturnPct: return "logret_pct";
  }
  throw std::logic_error("unreachable transform");
}

Series load_series(const IngestConfig& cfg) {
  std::ifstream in(cfg.path);
  if (!in) throw data_error("cannot open file '" + cfg.path + "'");

  std::string line;
  if (!std::getline(in, line)) throw data_error("'" + cfg.path + "': empty file");
  const auto header = split_csv_line(line);

  std::size_t col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == cfg.column) {
      col = i;
      break;
    }
  }
  if (col == header.size()) {
    const bool numeric = !cfg.column.empty() &&
                         std::all_of(cfg.column.begin(), cfg.column.end(),
                                     [](unsigned char c) { return std::isdigit(c); });
    if (numeric) col = static_cast<std::size_t>(std::stoul(cfg.column));
    if (col >= header.size()) {
      throw data_error("'" + cfg.path + "': column '" + cfg.column + "' not found (header has " +
                       std::to_string(header.size()) + " columns)");
    }
  }

  std::vector<double> raw;
  std::vector<std::size_t> lines;  // file line per raw value, for error messages
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (col >= cells.size()) {
      throw data_error("'" + cfg.path + "': line " + std::to_string(lineno) +
                       " has only " + std::to_string(cells.size()) + " columns");
    }
    const std::string& cell = cells[col];
    if (is_na_cell(cell)) {
      if (cfg.drop_na) continue;
      throw data_error("'" + cfg.path + "': missing value at line " + std::to_string(lineno) +
                       " (use drop_na to skip)");
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw data_error("'" + cfg.path + "': cannot parse numeric value '" + cell +
                       "' at line " + std::to_string(lineno));
    }
    if (!std::isfinite(v)) {
      throw data_error("'" + cfg.path + "': non-finite value at line " + std::to_string(lineno));
    }
    raw.push_back(v);
    lines.push_back(lineno);
  }

  std::vector<double> values;
  if (cfg.transform == Transform::None) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == 0.0) {
        throw data_error("'" + cfg.path + "': zero value at line " + std::to_string(lines[i]));
      }
    }
    values = std::move(raw);
  } else {
    const double scale = cfg.transform == Transform::LogReturnPct ? 100.0 : 1.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (!(raw[i] > 0.0)) {
        throw data_error("'" + cfg.path + "': nonpositive price at line " +
                         std::to_string(lines[i]) + " (log returns need positive inputs)");
      }
      if (i == 0) continue;
      const double r = scale * std::log(raw[i] / raw[i - 1]);
      if (r == 0.0) {
        throw data_error("'" + cfg.path + "': zero return at line " + std::to_string(lines[i]));
      }
      values.push_back(r);
    }
  }

  try {
    return Series(std::move(values));
  } catch (const data_error& e) {
    throw data_error("'" + cfg.path + "': " + e.what());
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void write_path_csv(std::ostream& os, const Path& path) {
  os << "t,sign,logabs,level\n";
  for (std::size_t t = 0; t < path.logabs.size(); ++t) {
    os << t << ',' << static_cast<int>(path.signs[t]) << ',' << format_double(path.logabs[t])
       << ',';
    if (level_representable(path.logabs[t])) {
      os << format_double(static_cast<double>(path.signs[t]) * std::exp(path.logabs[t]));
    }
    os << '\n';
  }
}

void write_series_csv(std::ostream& os, const Series& series) {
  os << "t,value\n";
  const auto& y = series.values();
  for (std::size_t t = 0; t < y.size(); ++t) {
    os << t << ',' << format_double(y[t]) << '\n';
  }
}

void write_residuals_csv(std::ostream& os, std::span<const double> residuals) {
  os << "t,residual\n";
  for (std::size_t t = 0; t < residuals.size(); ++t) {
    os << (t + 1) << ',' << format_double(residuals[t]) << '\n';
  }
}

AcfTable residual_acf_table(std::span<const double> residuals, std::size_t max_lag) {
  AcfTable table;
  table.acf = residual_acf(residuals, max_lag, false);
  table.pacf = pacf_from_acf(table.acf);
  table.acf_squared = residual_acf(residuals, max_lag, true);
  table.pacf_squared = pacf_from_acf(table.acf_squared);
  return table;
}

void write_acf_csv(std::ostream& os, const AcfTable& table) {
  os << "lag,acf,pacf,acf_squared,pacf_squared\n";
  for (std::size_t k = 0; k < table.acf.size(); ++k) {
    os << (k + 1) << ',' << format_double(table.acf[k]) << ','
       << format_double(table.pacf[k]) << ',' << format_double(table.acf_squared[k]) << ','
       << format_double(table.pacf_squared[k]) << '\n';
  }
}

json to_json(const AcfTable& table) {
  return json{{"acf", table.acf},
              {"pacf", table.pacf},
              {"acf_squared", table.acf_squared},
              {"pacf_squared", table.pacf_squared}};
}

void write_study_csv(std::ostream& os, const StudyTable& table) {
  os << "dist,phi,alpha0,n,gamma0,sigma2,replications,excluded,"
        "em_phi,esd_phi,asd_phi,em_alpha,esd_alpha,asd_alpha,"
        "em_alpha_star,esd_alpha_star,asd_alpha_star,em_gamma,esd_gamma,asd_gamma\n";
  for (const auto& row : table.rows) {
    os << to_string(row.spec) << ',' << format_double(table.config.phi) << ','
       << format_double(row.alpha0) << ',' << row.n << ',' << format_double(row.gamma0) << ','
       << format_double(row.sigma2) << ',' << row.replications << ',' << row.excluded;
    for (const auto* s : {&row.phi, &row.alpha, &row.alpha_star, &row.gamma}) {
      os << ',' << format_double(s->em) << ',' << format_double(s->esd) << ','
         << format_double(s->asd);
    }
    os << '\n';
  }
}

void write_power_csv(std::ostream& os, const PowerTable& table) {
  os << "dist,phi,level,n,alpha0,gamma0,rejection_rate,replications,excluded\n";
  for (const auto& pt : table.points) {
    os << to_string(table.config.spec) << ',' << format_double(table.config.phi) << ','
       << format_double(table.config.level) << ',' << pt.n << ',' << format_double(pt.alpha0)
       << ',' << format_double(pt.gamma0) << ',' << format_double(pt.rejection_rate) << ','
       << pt.replications << ',' << pt.excluded << '\n';
  }
}

void write_hist_csv(std::ostream& os, const SamplingDistribution& hist) {
  os << "standardized\n";
  for (double v : hist.standardized) os << format_double(v) << '\n';
}

void write_clt_csv(std::ostream& os, const CltReport& report) {
  os << "s,variance,target_variance,ks_stat,ks_p,corr_prev_increment,pass\n";
  for (const auto& pt : report.points) {
    os << format_double(pt.s) << ',' << format_double(pt.variance) << ','
       << format_double(pt.target_variance) << ',' << format_double(pt.ks_stat) << ','
       << format_double(pt.ks_p) << ',' << format_double(pt.corr_prev_increment) << ','
       << (pt.pass ? 1 : 0) << '\n';
  }
}

json to_json(const Path& path) {
  json signs = json::array();
  for (auto s : path.signs) signs.push_back(static_cast<int>(s));
  json j{
      {"kind", path.meta.kind == ProcessKind::Darwin ? "darwin" : "auxiliary"},
      {"params", {{"phi", path.meta.params.phi}, {"alpha", path.meta.params.alpha}}},
      {"spec", std::string(to_string(path.meta.spec))},
      {"injected", path.meta.injected},
      {"y0", path.meta.y0},
      {"signs", std::move(signs)},
      {"logabs", path.logabs},
  };
  if (!path.meta.injected) {
    j["seed"] = {{"master", path.meta.master_seed}, {"stream", path.meta.stream}};
  }
  return j;
}

json to_json(const Series& series) { return json{{"values", series.values()}}; }

json to_json(const StabilityReport& report) {
  return json{{"gamma_hat", report.gamma_hat}, {"sigma2_hat", report.sigma2_hat},
              {"t_stat", report.t_stat},       {"p_value", report.p_value},
              {"n", report.n}};
}

json to_json(const QmleFit& fit, bool include_residuals) {
  json j{{"phi_hat", fit.phi_hat},
         {"alpha_hat", fit.alpha_hat},
         {"alpha_star", fit.alpha_star},
         {"kappa_hat", fit.kappa_hat},
         {"sigma_phi", fit.sigma_phi},
         {"sigma_alpha", fit.sigma_alpha},
         {"se_phi", fit.se_phi},
         {"se_alpha", fit.se_alpha},
         {"n", fit.n}};
  if (include_residuals) j["residuals"] = fit.residuals;
  return j;
}

json to_json(const WaldReport& report) {
  json rows = json::array();
  for (const auto& row : report.constraint_matrix) rows.push_back({row[0], row[1]});
  return json{{"w_stat", report.w_stat},
              {"df", report.df},
              {"p_value", report.p_value},
              {"constraint_matrix", std::move(rows)},
              {"constraint_value", report.constraint_value}};
}

json to_json(const LyapunovProfile& profile) {
  return json{{"gamma0", profile.gamma0},
              {"sigma2", profile.sigma2},
              {"method", profile.method == LyapunovMethod::Quadrature ? "quadrature" : "montecarlo"},
              {"err_estimate", profile.err_estimate},
              {"fell_back", profile.fell_back}};
}

json to_json(const AsymptoticSd& sd) {
  return json{{"sd_phi", sd.sd_phi}, {"sd_alpha", sd.sd_alpha}, {"sd_gamma", sd.sd_gamma}};
}

namespace {
json to_json(const EstimatorSummary& s) {
  return json{{"em", s.em}, {"esd", s.esd}, {"asd", s.asd}};
}
}  // namespace

json to_json(const StudyTable& table) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    rows.push_back(json{{"dist", std::string(to_string(row.spec))},
                        {"alpha0", row.alpha0},
                        {"n", row.n},
                        {"gamma0", row.gamma0},
                        {"sigma2", row.sigma2},
                        {"phi", to_json(row.phi)},
                        {"alpha", to_json(row.alpha)},
                        {"alpha_star", to_json(row.alpha_star)},
                        {"gamma", to_json(row.gamma)},
                        {"replications", row.replications},
                        {"excluded", row.excluded}});
  }
  return json{{"phi", table.config.phi},
              {"dist", std::string(to_string(table.config.spec))},
              {"replications", table.config.replications},
              {"y0_policy", "standard normal draw per replication"},
              {"rows", std::move(rows)}};
}

json to_json(const PowerTable& table) {
  json points = json::array();
  for (const auto& pt : table.points) {
    points.push_back(json{{"alpha0", pt.alpha0},
                          {"gamma0", pt.gamma0},
                          {"n", pt.n},
                          {"rejection_rate", pt.rejection_rate},
                          {"replications", pt.replications},
                          {"excluded", pt.excluded}});
  }
  return json{{"phi", table.config.phi},
              {"dist", std::string(to_string(table.config.spec))},
              {"level", table.config.level},
              {"replications", table.config.replications},
              {"y0_policy", "standard normal draw per replication"},
              {"points", std::move(points)}};
}

json to_json(const SamplingDistribution& hist) {
  return json{{"target", std::string(to_string(hist.target))},
              {"dist", std::string(to_string(hist.spec))},
              {"phi", hist.phi},
              {"alpha0", hist.alpha0},
              {"n", hist.n},
              {"truth", hist.truth},
              {"overlay_variance", hist.overlay_variance},
              {"y0_policy", "standard normal draw per replication"},
              {"standardized", hist.standardized},
              {"excluded", hist.excluded}};
}

json to_json(const CltReport& report) {
  json points = json::array();
  for (const auto& pt : report.points) {
    points.push_back(json{{"s", pt.s},
                          {"variance", pt.variance},
                          {"target_variance", pt.target_variance},
                          {"ks_stat", pt.ks_stat},
                          {"ks_p", pt.ks_p},
                          {"corr_prev_increment", pt.corr_prev_increment},
                          {"pass", pt.pass}});
  }
  return json{{"params", {{"phi", report.params.phi}, {"alpha", report.params.alpha}}},
              {"dist", std::string(to_string(report.spec))},
              {"profile", to_json(report.profile)},
              {"n", report.n},
              {"replications", report.replications},
              {"points", std::move(points)},
              {"all_pass", report.all_pass}};
}

json to_json(const DarFit& fit) {
  json se = json::array();
  for (double v : fit.se) {
    if (std::isfinite(v)) {
      se.push_back(v);
    } else {
      se.push_back(nullptr);
    }
  }
  return json{{"phi", fit.params.phi},
              {"omega", fit.params.omega},
              {"alpha", fit.params.alpha},
              {"loglik", fit.loglik},
              {"converged", fit.converged},
              {"iterations", fit.iterations},
              {"se", std::move(se)}};
}

std::string_view to_string(StudyTarget target) {
  switch (target) {
    case StudyTarget::GammaHat: return "gamma";
    case StudyTarget::PhiHat: return "phi";
    case StudyTarget::AlphaHat: return "alpha";
  }
  throw std::logic_error("unreachable study target");
}

StudyTarget study_target_from_string(std::string_view name) {
  const std::string l = lower(name);
  if (l == "gamma" || l == "gamma_hat") return StudyTarget::GammaHat;
  if (l == "phi" || l == "phi_hat") return StudyTarget::PhiHat;
  if (l == "alpha" || l == "alpha_hat") return StudyTarget::AlphaHat;
  throw std::invalid_argument("unknown target '" + std::string(name) +
                              "' (expected gamma, phi or alpha)");
}

}  // namespace darwin::io
