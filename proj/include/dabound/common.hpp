#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dab {

// Invalid user input (bad config, malformed file, contract violation at the
// API boundary). The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure during a computation (diverged training, non-finite
// intermediate). The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

using VecView = std::span<const double>;

inline double dot(VecView a, VecView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_distance(VecView a, VecView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double euclidean(VecView a, VecView b) {
  return std::sqrt(squared_distance(a, b));
}

// Shortest round-trip decimal form of a double.
std::string format_shortest(double v);

}  // namespace dab
