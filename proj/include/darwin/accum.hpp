#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace darwin {

// Neumaier-compensated accumulator. Summation order is part of the contract:
// reductions over replications always run in index order so serial and
// parallel drivers produce bit-identical results.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_total(std::span<const double> values) noexcept {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

inline double compensated_mean(std::span<const double> values) noexcept {
  return values.empty() ? 0.0 : compensated_total(values) / static_cast<double>(values.size());
}

// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
inline double sample_sd(std::span<const double> values) noexcept {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double m = compensated_mean(values);
  CompensatedSum acc;
  for (double v : values) {
    const double d = v - m;
    acc.add(d * d);
  }
  return std::sqrt(acc.value() / static_cast<double>(n - 1));
}

}  // namespace darwin
