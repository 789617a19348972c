#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "darwin/innovations.hpp"

namespace darwin {

// Parameters of the intercept-free model y_t = phi*y_{t-1} + eta_t*sqrt(alpha*y_{t-1}^2).
struct DarwinParams {
  double phi = 0.0;
  double alpha = 1.0;  // strictly positive

  void validate() const;
};

// Parameters of the full model y_t = phi*y_{t-1} + eta_t*sqrt(omega + alpha*y_{t-1}^2).
struct DarParams {
  double phi = 0.0;
  double omega = 0.0;  // nonnegative
  double alpha = 0.0;  // nonnegative; omega + alpha > 0

  void validate() const;
};

// Initial-value policy for simulation: an explicit nonzero level, or a
// standard normal draw (symmetric with no atom at zero).
struct InitialValue {
  static InitialValue random() { return {true, 0.0}; }
  static InitialValue fixed(double v) { return {false, v}; }

  bool is_random = true;
  double value = 0.0;
};

enum class ProcessKind { Darwin, Auxiliary };

struct PathMeta {
  ProcessKind kind = ProcessKind::Darwin;
  DarwinParams params;
  Innovation spec = Innovation::Gaussian;
  bool injected = false;  // innovations supplied by the caller, no RNG involved
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> stream;
  double y0 = 0.0;  // realized initial level
};

// A trajectory in overflow-safe log-sign form: level y_t = signs[t] * exp(logabs[t]).
// Both vectors have length n+1 (initial value plus n steps).
struct Path {
  std::vector<std::int8_t> signs;  // each +1 or -1
  std::vector<double> logabs;      // natural log of |y_t|, always finite
  PathMeta meta;

  std::size_t steps() const { return logabs.empty() ? 0 : logabs.size() - 1; }
};

// Observed data y_0..y_n. Entries must be finite and nonzero, length >= 2.
class Series {
 public:
  explicit Series(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t step_count() const { return values_.size() - 1; }

 private:
  std::vector<double> values_;
};

Path simulate_darwin(const DarwinParams& params, Innovation spec, std::size_t n,
                     InitialValue y0, std::uint64_t seed,
                     std::vector<std::uint64_t> stream = {});

// Test hook: run the recursion on a caller-supplied innovation vector.
Path simulate_darwin(const DarwinParams& params, std::span<const double> innovations,
                     double y0);

Path simulate_auxiliary(const DarwinParams& params, Innovation spec, std::size_t n,
                        double x0, std::uint64_t seed,
                        std::vector<std::uint64_t> stream = {});

Path simulate_auxiliary(const DarwinParams& params, std::span<const double> innovations,
                        double x0);

// Ratio sequence r_t = y_t / y_{t-1}, t = 1..n. From a Path this is
// signs[t]*signs[t-1]*exp(logabs[t]-logabs[t-1]), which never over- or
// underflows regardless of the level magnitude.
std::vector<double> ratios(const Path& path);
std::vector<double> ratios(const Series& series);

// log|r_t| increments; from a Path these are exact differences of logabs.
std::vector<double> log_abs_ratios(const Path& path);
std::vector<double> log_abs_ratios(const Series& series);

enum class OverflowPolicy { Error, Saturate };

struct Levels {
  std::vector<double> values;
  bool saturated = false;  // some entry left the double range (Saturate policy)
};

// Materialize levels y_t = signs[t]*exp(logabs[t]). Entries outside the
// double range either raise numeric_error or saturate to +-inf (overflow) /
// 0 (underflow) with the flag set, per policy.
Levels to_levels(const Path& path, OverflowPolicy policy = OverflowPolicy::Error);

}  // namespace darwin
