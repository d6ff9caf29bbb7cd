#pragma once

#include <functional>
#include <stdexcept>

namespace wlab {

// Thrown when an improper integral fails the divergence heuristic.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown by operations whose numerical machinery could not reach its
// contract (non-convergent solve, over-clipped kernel, ...).
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Integrand = std::function<double(double)>;

// One Gauss(7)/Kronrod(15) panel on [a,b]; err receives the usual
// 200*|G7-K15|^{3/2} estimate.
double gk15_panel(const Integrand& f, double a, double b, double& err);

// Adaptive bisection with G7/K15 panels until the local error estimate
// meets max(abs_tol, rel_tol*|whole|).
double integrate_adaptive(const Integrand& f, double a, double b,
                          double rel_tol = 1e-9, double abs_tol = 0.0);

// Integral of f over [a, +inf) by dyadic blocks. Divergence rule: the value
// accumulated up to T ~ 2^20 must not keep growing by more than 5% per
// doubling of T; otherwise DivergenceError. Blocks continue (up to 2^60)
// until their contribution is negligible at rel_tol.
double integrate_upper_improper(const Integrand& f, double a,
                                double rel_tol = 1e-9);

// Integral of f over (0, b] for integrands possibly singular at 0, by dyadic
// blocks shrinking toward 0. Divergence rule: the value over [eps, b] must
// not grow by more than 5% per halving of eps once eps reaches 2^-20.
double integrate_lower_improper(const Integrand& f, double b,
                                double rel_tol = 1e-9);

}  // namespace wlab
