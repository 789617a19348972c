#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "darwin/rng.hpp"

namespace darwin {

// The three innovation laws. All are symmetric with mean 0 and variance 1:
// standard normal, Student t with 5 df scaled by sqrt(3/5), and Laplace with
// scale 1/sqrt(2).
enum class Innovation { Gaussian, StudentT5Std, LaplaceStd };

// Accepts "gaussian", "t5std", "laplace" (case-insensitive).
Innovation innovation_from_string(std::string_view name);
std::string_view to_string(Innovation kind);

double density(Innovation kind, double x);

// Fourth moment: 3, 9, 6.
double kurtosis(Innovation kind);

// One variate from an already-positioned stream.
double draw(Innovation kind, Rng& rng);

std::vector<double> sample(Innovation kind, std::size_t n, Rng& rng);

// n i.i.d. draws on stream (seed, {0}); identical arguments give an
// identical vector.
std::vector<double> sample(Innovation kind, std::size_t n, std::uint64_t seed);

// Standard normal draw via the inverse CDF (one uniform per variate).
double draw_std_normal(Rng& rng);

}  // namespace darwin
