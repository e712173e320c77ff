#include "anedl/specfn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace anedl::specfn {

namespace {

void require_positive(double x, const char* fn) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw std::domain_error(std::string(fn) + ": argument must be a finite positive real, got " +
                            std::to_string(x));
  }
}

// Argument threshold above which the asymptotic series are used. With terms
// through x^-14 the truncation error at x = 10 is below 1e-16 relative.
constexpr double kAsymptoticThreshold = 10.0;

}  // namespace

double lgamma(double x) {
  require_positive(x, "lgamma");
  return std::lgamma(x);
}

double digamma(double x) {
  require_positive(x, "digamma");
  // Shift upward with psi(x) = psi(x+1) - 1/x until the asymptotic
  // expansion applies.
  double acc = 0.0;
  while (x < kAsymptoticThreshold) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  // psi(x) ~ ln x - 1/(2x) - sum_n B_{2n} / (2n x^{2n})
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  double p = inv2;
  series += (-1.0 / 12.0) * p;
  p *= inv2;
  series += (1.0 / 120.0) * p;
  p *= inv2;
  series += (-1.0 / 252.0) * p;
  p *= inv2;
  series += (1.0 / 240.0) * p;
  p *= inv2;
  series += (-1.0 / 132.0) * p;
  p *= inv2;
  series += (691.0 / 32760.0) * p;
  p *= inv2;
  series += (-1.0 / 12.0) * p;
  return acc + std::log(x) - 0.5 * inv + series;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  // psi1(x) = psi1(x+1) + 1/x^2
  double acc = 0.0;
  while (x < kAsymptoticThreshold) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  // psi1(x) ~ 1/x + 1/(2x^2) + sum_n B_{2n} x^{-(2n+1)}
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  double p = inv * inv2;  // x^-3
  series += (1.0 / 6.0) * p;
  p *= inv2;
  series += (-1.0 / 30.0) * p;
  p *= inv2;
  series += (1.0 / 42.0) * p;
  p *= inv2;
  series += (-1.0 / 30.0) * p;
  p *= inv2;
  series += (5.0 / 66.0) * p;
  p *= inv2;
  series += (-691.0 / 2730.0) * p;
  p *= inv2;
  series += (7.0 / 6.0) * p;
  return acc + inv + 0.5 * inv2 + series;
}

double tetragamma(double x) {
  require_positive(x, "tetragamma");
  // psi2(x) = psi2(x+1) - 2/x^3
  double acc = 0.0;
  while (x < kAsymptoticThreshold) {
    acc -= 2.0 / (x * x * x);
    x += 1.0;
  }
  // psi2(x) ~ -1/x^2 - 1/x^3 - sum_n (2n+1) B_{2n} x^{-(2n+2)}
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  double p = inv2 * inv2;  // x^-4
  series += -3.0 * (1.0 / 6.0) * p;
  p *= inv2;
  series += -5.0 * (-1.0 / 30.0) * p;
  p *= inv2;
  series += -7.0 * (1.0 / 42.0) * p;
  p *= inv2;
  series += -9.0 * (-1.0 / 30.0) * p;
  p *= inv2;
  series += -11.0 * (5.0 / 66.0) * p;
  p *= inv2;
  series += -13.0 * (-691.0 / 2730.0) * p;
  return acc - inv2 - inv * inv2 + series;
}

}  // namespace anedl::specfn
