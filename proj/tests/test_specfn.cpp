#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "anedl/specfn.hpp"
#include "oracles.hpp"

using namespace anedl;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("lgamma matches known values") {
  CHECK(specfn::lgamma(1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(specfn::lgamma(2.0) == doctest::Approx(0.0).epsilon(1e-15));
  // Gamma(5) = 24, Gamma(1/2) = sqrt(pi)
  CHECK(oracle::close(specfn::lgamma(5.0), 3.1780538303479456196469416012970554, 1e-12));
  CHECK(oracle::close(specfn::lgamma(0.5), 0.57236494292470008707171367567652936, 1e-12));
}

TEST_CASE("digamma matches reference values") {
  // Euler-Mascheroni constant with flipped sign.
  CHECK(std::fabs(specfn::digamma(1.0) - (-0.57721566490153286060651209008240243)) < 1e-12);
  CHECK(std::fabs(specfn::digamma(10.0) - 2.2517525890667211076474561638858515) < 1e-12);
  CHECK(std::fabs(specfn::digamma(0.5) - (-1.9635100260214234794409763329987556)) < 1e-12);
}

TEST_CASE("trigamma matches analytic identities") {
  CHECK(std::fabs(specfn::trigamma(1.0) - kPi * kPi / 6.0) < 1e-12);
  CHECK(std::fabs(specfn::trigamma(2.0) - (kPi * kPi / 6.0 - 1.0)) < 1e-12);
  CHECK(std::fabs(specfn::trigamma(0.5) - kPi * kPi / 2.0) < 1e-12);
  CHECK(oracle::close(specfn::trigamma(10.0), 0.10516633568168574612220100690805593, 1e-12));
}

TEST_CASE("tetragamma matches reference values") {
  // tetragamma(1) = -2 zeta(3)
  CHECK(oracle::close(specfn::tetragamma(1.0), -2.4041138063191885707994763230228999, 1e-12));
  CHECK(oracle::close(specfn::tetragamma(0.5), -16.828796644234319995596334261160300, 1e-12));
  CHECK(oracle::close(specfn::tetragamma(10.0), -0.011049834970802067462103749066803728, 1e-12));
  CHECK(oracle::close(specfn::tetragamma(2.5), -0.23620405164172740300374166856770728, 1e-12));
}

TEST_CASE("recurrence identities hold over random points") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(1e-3, 100.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng);
    // Residuals are compared against the size of the terms involved: near
    // zero the shifts 1/x and 1/x^2 dwarf 1e-10 in absolute terms.
    CHECK(std::fabs(specfn::lgamma(x + 1.0) - specfn::lgamma(x) - std::log(x)) < 1e-10);
    CHECK(std::fabs(specfn::digamma(x + 1.0) - specfn::digamma(x) - 1.0 / x) <
          1e-10 * std::max(1.0, 1.0 / x));
    CHECK(std::fabs(specfn::trigamma(x + 1.0) - specfn::trigamma(x) + 1.0 / (x * x)) <
          1e-10 * std::max(1.0, 1.0 / (x * x)));
    CHECK(std::fabs(specfn::tetragamma(x + 1.0) - specfn::tetragamma(x) -
                    2.0 / (x * x * x)) < 1e-9 * std::max(1.0, 2.0 / (x * x * x)));
  }
}

TEST_CASE("digamma and trigamma agree with the independent large-shift oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(1e-3, 1e4);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng);
    CHECK(std::fabs(specfn::digamma(x) - oracle::ref_digamma(x)) < 1e-10);
    CHECK(oracle::close(specfn::trigamma(x), oracle::ref_trigamma(x), 1e-10));
  }
}

TEST_CASE("each function is the derivative of the previous one") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 50.0);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng);
    const double h = 1e-5 * std::max(1.0, x);
    const double d_lgamma = (specfn::lgamma(x + h) - specfn::lgamma(x - h)) / (2 * h);
    const double d_digamma = (specfn::digamma(x + h) - specfn::digamma(x - h)) / (2 * h);
    const double d_trigamma = (specfn::trigamma(x + h) - specfn::trigamma(x - h)) / (2 * h);
    CHECK(oracle::close(d_lgamma, specfn::digamma(x), 1e-6, 1e-8));
    CHECK(oracle::close(d_digamma, specfn::trigamma(x), 1e-6, 1e-8));
    CHECK(oracle::close(d_trigamma, specfn::tetragamma(x), 1e-5, 1e-8));
  }
}

TEST_CASE("trigamma is strictly positive and strictly decreasing") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(1e-3, 1000.0);
  std::uniform_real_distribution<double> step(1e-3, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    CHECK(specfn::trigamma(x) > 0.0);
    CHECK(specfn::trigamma(x) > specfn::trigamma(x + step(rng)));
  }
}

TEST_CASE("non-positive and non-finite arguments are rejected") {
  CHECK_THROWS_AS(specfn::lgamma(0.0), std::domain_error);
  CHECK_THROWS_AS(specfn::lgamma(-1.5), std::domain_error);
  CHECK_THROWS_AS(specfn::digamma(0.0), std::domain_error);
  CHECK_THROWS_AS(specfn::trigamma(-2.0), std::domain_error);
  CHECK_THROWS_AS(specfn::tetragamma(0.0), std::domain_error);
  CHECK_THROWS_AS(specfn::digamma(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
  CHECK_THROWS_AS(specfn::trigamma(std::numeric_limits<double>::infinity()), std::domain_error);
}
