#pragma once

// Scalar special functions on the positive real axis. Everything downstream
// (Dirichlet summaries, Fisher information, KL terms and their gradients)
// reduces to these four functions, so they are kept accurate to near machine
// precision across [1e-3, 1e6].

namespace anedl::specfn {

// ln Gamma(x) for x > 0. Throws std::domain_error for x <= 0 or non-finite x.
double lgamma(double x);

// psi(x) = d/dx ln Gamma(x) for x > 0.
double digamma(double x);

// psi1(x) = d/dx psi(x) for x > 0. Strictly positive and strictly decreasing,
// which is what makes the trigamma-weighted losses concentrate their penalty
// on low-evidence classes.
double trigamma(double x);

// psi2(x) = d/dx psi1(x) for x > 0. Used by the analytic gradients of the
// trigamma-weighted losses.
double tetragamma(double x);

}  // namespace anedl::specfn
