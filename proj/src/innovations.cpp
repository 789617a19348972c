#include "darwin/innovations.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "darwin/stats.hpp"

namespace darwin {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt3 = 1.73205080756887729353;
constexpr double kT5Norm = 8.0 / (3.0 * kPi * kSqrt3);  // standardized t5 density at 0
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kSqrt35 = 0.7745966692414833770;  // sqrt(3/5)

double draw_t5_std(Rng& rng) {
  // t5 = Z / sqrt(V/5) with V ~ chi-square(5) built exactly as
  // 2(E1 + E2) + Z'^2; no rejection step, so no acceptance bias.
  const double z = draw_std_normal(rng);
  const double z2 = draw_std_normal(rng);
  const double e1 = -std::log(rng.next_open01());
  const double e2 = -std::log(rng.next_open01());
  const double v = 2.0 * (e1 + e2) + z2 * z2;
  return z / std::sqrt(v / 5.0) * kSqrt35;
}

double draw_laplace_std(Rng& rng) {
  const double u = rng.next_open01();
  return (u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u))) * kInvSqrt2;
}

}  // namespace

double draw_std_normal(Rng& rng) {
  // Box-Muller on open-(0,1) uniforms: exact transform, no rejection step.
  const double u1 = rng.next_open01();
  const double u2 = rng.next_open01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

Innovation innovation_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "gaussian") return Innovation::Gaussian;
  if (lower == "t5std") return Innovation::StudentT5Std;
  if (lower == "laplace") return Innovation::LaplaceStd;
  throw std::invalid_argument("unknown innovation '" + std::string(name) +
                              "' (expected gaussian, t5std or laplace)");
}

std::string_view to_string(Innovation kind) {
  switch (kind) {
    case Innovation::Gaussian: return "gaussian";
    case Innovation::StudentT5Std: return "t5std";
    case Innovation::LaplaceStd: return "laplace";
  }
  throw std::logic_error("unreachable innovation kind");
}

double density(Innovation kind, double x) {
  switch (kind) {
    case Innovation::Gaussian:
      return stats::normal_pdf(x);
    case Innovation::StudentT5Std: {
      const double b = 1.0 + x * x / 3.0;
      return kT5Norm / (b * b * b);
    }
    case Innovation::LaplaceStd:
      return kInvSqrt2 * std::exp(-kSqrt2 * std::abs(x));
  }
  throw std::logic_error("unreachable innovation kind");
}

double kurtosis(Innovation kind) {
  switch (kind) {
    case Innovation::Gaussian: return 3.0;
    case Innovation::StudentT5Std: return 9.0;
    case Innovation::LaplaceStd: return 6.0;
  }
  throw std::logic_error("unreachable innovation kind");
}

double draw(Innovation kind, Rng& rng) {
  switch (kind) {
    case Innovation::Gaussian: return draw_std_normal(rng);
    case Innovation::StudentT5Std: return draw_t5_std(rng);
    case Innovation::LaplaceStd: return draw_laplace_std(rng);
  }
  throw std::logic_error("unreachable innovation kind");
}

std::vector<double> sample(Innovation kind, std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample: n must be at least 1");
  std::vector<double> out(n);
  for (auto& v : out) v = draw(kind, rng);
  return out;
}

std::vector<double> sample(Innovation kind, std::size_t n, std::uint64_t seed) {
  Rng rng(seed, {0});
  return sample(kind, n, rng);
}

}  // namespace darwin
