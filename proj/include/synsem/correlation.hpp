#pragma once

#include <span>

namespace synsem {

/// Sample Pearson correlation. When either input is constant the
/// correlation is undefined: r is reported as 0 and `defined` is false.
struct Correlation {
  double r = 0.0;
  bool defined = false;
};

/// Requires equal lengths >= 3.
Correlation pearson(std::span<const double> a, std::span<const double> b);

}  // namespace synsem
