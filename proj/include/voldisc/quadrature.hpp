#pragma once

// Gaussian quadrature rules via the symmetric-tridiagonal (Golub-Welsch)
// eigenproblem.  Generalized Gauss-Laguerre rules are returned with weights
// normalized to sum 1; the total mass Gamma(nu+1) is carried separately in
// log form so callers can fold it into their own log-space prefactors without
// overflow.

#include <vector>

namespace voldisc {

struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Weight x^nu e^(-x) on (0, inf), nu > -1.  normweights sum to 1; the true
// weights are exp(log_mass) * normweights with log_mass = lgamma(nu + 1).
struct LaguerreRule {
  std::vector<double> nodes;
  std::vector<double> normweights;
  double log_mass = 0.0;
};

// n-point rule, exact for polynomials of degree 2n-1 against x^nu e^(-x).
LaguerreRule gauss_laguerre_generalized(int n, double nu);

// n-point Gauss-Legendre rule on [-1, 1].
QuadRule gauss_legendre(int n);

// Composite rule: `base` mapped onto consecutive intervals [edges[p], edges[p+1]].
QuadRule composite_on_panels(const QuadRule& base, const std::vector<double>& edges);

}  // namespace voldisc
