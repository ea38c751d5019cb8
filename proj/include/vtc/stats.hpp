#pragma once

#include <cstddef>
#include <vector>

namespace vtc {

/// Monte Carlo estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Sample mean and standard error (sample standard deviation / sqrt(n)).
/// Summation is serial and in index order. A single sample has se = 0.
Estimate sample_mean(const std::vector<double>& samples);

}  // namespace vtc
