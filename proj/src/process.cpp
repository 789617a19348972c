#include "darwin/process.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "darwin/errors.hpp"

namespace darwin {

namespace {

// exp(logabs) stays a normal double inside this band.
constexpr double kLogMax = 709.78;   // just under log(DBL_MAX)
constexpr double kLogMin = -708.39;  // just above log(smallest normal)

// One recursion step shared by both processes. With
// g = phi*sign(y_{t-1}) + eta*sqrt(alpha) the model gives
// y_t = |y_{t-1}| * g, so |y_t| = |y_{t-1}|*|g| and sign(y_t) = sign(g).
// The auxiliary process takes the absolute value, so its sign stays +1.
struct StepState {
  std::int8_t sign;
  double logabs;
};

void advance(StepState& st, double phi, double sqrt_alpha, double eta, ProcessKind kind,
             std::size_t t) {
  const double g = phi * static_cast<double>(st.sign) + eta * sqrt_alpha;
  if (g == 0.0) {
    throw numeric_error("simulate: zero ratio factor at step " + std::to_string(t));
  }
  const double inc = std::log(std::abs(g));
  if (!std::isfinite(inc)) {
    throw numeric_error("simulate: non-finite log increment at step " + std::to_string(t));
  }
  st.sign = kind == ProcessKind::Darwin ? static_cast<std::int8_t>(g < 0.0 ? -1 : 1)
                                        : static_cast<std::int8_t>(1);
  st.logabs += inc;
}

Path run_recursion(const DarwinParams& params, ProcessKind kind, double y0,
                   std::span<const double> innovations, PathMeta meta) {
  params.validate();
  if (y0 == 0.0 || !std::isfinite(y0)) {
    throw numeric_error("simulate: initial value must be finite and nonzero");
  }
  const double sqrt_alpha = std::sqrt(params.alpha);
  const std::size_t n = innovations.size();

  Path path;
  path.signs.reserve(n + 1);
  path.logabs.reserve(n + 1);
  StepState st{static_cast<std::int8_t>(y0 < 0.0 ? -1 : 1), std::log(std::abs(y0))};
  path.signs.push_back(st.sign);
  path.logabs.push_back(st.logabs);

  for (std::size_t t = 1; t <= n; ++t) {
    advance(st, params.phi, sqrt_alpha, innovations[t - 1], kind, t);
    path.signs.push_back(st.sign);
    path.logabs.push_back(st.logabs);
  }

  meta.kind = kind;
  meta.params = params;
  meta.y0 = y0;
  path.meta = std::move(meta);
  return path;
}

double resolve_initial(const InitialValue& policy, Rng& rng) {
  if (!policy.is_random) return policy.value;
  double y0 = draw_std_normal(rng);
  while (y0 == 0.0) y0 = draw_std_normal(rng);  // keep P(y0 = 0) at zero
  return y0;
}

}  // namespace

void DarwinParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha) || !std::isfinite(phi)) {
    throw std::invalid_argument("DarwinParams: need finite phi and alpha > 0");
  }
}

void DarParams::validate() const {
  if (!std::isfinite(phi) || !std::isfinite(omega) || !std::isfinite(alpha) ||
      omega < 0.0 || alpha < 0.0 || !(omega + alpha > 0.0)) {
    throw std::invalid_argument(
        "DarParams: need finite phi, omega >= 0, alpha >= 0, omega + alpha > 0");
  }
}

Series::Series(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw data_error("series: need at least two observations");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw data_error("series: non-finite value at index " + std::to_string(i));
    }
    if (values_[i] == 0.0) {
      throw data_error("series: zero value at index " + std::to_string(i));
    }
  }
}

Path simulate_darwin(const DarwinParams& params, Innovation spec, std::size_t n,
                     InitialValue y0, std::uint64_t seed,
                     std::vector<std::uint64_t> stream) {
  if (n == 0) throw std::invalid_argument("simulate_darwin: n must be at least 1");
  Rng rng(seed, stream);
  const double level0 = resolve_initial(y0, rng);
  const std::vector<double> eta = sample(spec, n, rng);
  PathMeta meta;
  meta.spec = spec;
  meta.master_seed = seed;
  meta.stream = std::move(stream);
  return run_recursion(params, ProcessKind::Darwin, level0, eta, std::move(meta));
}

Path simulate_darwin(const DarwinParams& params, std::span<const double> innovations,
                     double y0) {
  if (innovations.empty()) throw std::invalid_argument("simulate_darwin: n must be at least 1");
  PathMeta meta;
  meta.injected = true;
  return run_recursion(params, ProcessKind::Darwin, y0, innovations, std::move(meta));
}

Path simulate_auxiliary(const DarwinParams& params, Innovation spec, std::size_t n,
                        double x0, std::uint64_t seed,
                        std::vector<std::uint64_t> stream) {
  if (n == 0) throw std::invalid_argument("simulate_auxiliary: n must be at least 1");
  if (!(x0 > 0.0)) throw numeric_error("simulate_auxiliary: x0 must be positive");
  Rng rng(seed, stream);
  const std::vector<double> eta = sample(spec, n, rng);
  PathMeta meta;
  meta.spec = spec;
  meta.master_seed = seed;
  meta.stream = std::move(stream);
  return run_recursion(params, ProcessKind::Auxiliary, x0, eta, std::move(meta));
}

Path simulate_auxiliary(const DarwinParams& params, std::span<const double> innovations,
                        double x0) {
  if (innovations.empty()) {
    throw std::invalid_argument("simulate_auxiliary: n must be at least 1");
  }
  if (!(x0 > 0.0)) throw numeric_error("simulate_auxiliary: x0 must be positive");
  PathMeta meta;
  meta.injected = true;
  return run_recursion(params, ProcessKind::Auxiliary, x0, innovations, std::move(meta));
}

std::vector<double> ratios(const Path& path) {
  std::vector<double> out;
  out.reserve(path.steps());
  for (std::size_t t = 1; t < path.logabs.size(); ++t) {
    const double mag = std::exp(path.logabs[t] - path.logabs[t - 1]);
    const double s = static_cast<double>(path.signs[t]) * static_cast<double>(path.signs[t - 1]);
    out.push_back(s * mag);
  }
  return out;
}

std::vector<double> ratios(const Series& series) {
  const auto& y = series.values();
  std::vector<double> out;
  out.reserve(y.size() - 1);
  for (std::size_t t = 1; t < y.size(); ++t) {
    if (y[t - 1] == 0.0) {
      throw numeric_error("ratios: zero denominator at index " + std::to_string(t - 1));
    }
    out.push_back(y[t] / y[t - 1]);
  }
  return out;
}

std::vector<double> log_abs_ratios(const Path& path) {
  std::vector<double> out;
  out.reserve(path.steps());
  for (std::size_t t = 1; t < path.logabs.size(); ++t) {
    out.push_back(path.logabs[t] - path.logabs[t - 1]);
  }
  return out;
}

std::vector<double> log_abs_ratios(const Series& series) {
  const auto r = ratios(series);
  std::vector<double> out;
  out.reserve(r.size());
  for (double v : r) out.push_back(std::log(std::abs(v)));
  return out;
}

Levels to_levels(const Path& path, OverflowPolicy policy) {
  Levels levels;
  levels.values.reserve(path.logabs.size());
  for (std::size_t t = 0; t < path.logabs.size(); ++t) {
    const double la = path.logabs[t];
    if (la > kLogMax) {
      if (policy == OverflowPolicy::Error) {
        throw numeric_error("to_levels: overflow at t=" + std::to_string(t) +
                            " (logabs=" + std::to_string(la) + ")");
      }
      levels.saturated = true;
      levels.values.push_back(path.signs[t] > 0 ? HUGE_VAL : -HUGE_VAL);
      continue;
    }
    if (la < kLogMin) {
      if (policy == OverflowPolicy::Error) {
        throw numeric_error("to_levels: underflow at t=" + std::to_string(t) +
                            " (logabs=" + std::to_string(la) + ")");
      }
      levels.saturated = true;
      levels.values.push_back(0.0);
      continue;
    }
    levels.values.push_back(static_cast<double>(path.signs[t]) * std::exp(la));
  }
  return levels;
}

}  // namespace darwin
