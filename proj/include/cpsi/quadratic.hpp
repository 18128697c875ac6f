#pragma once

#include "cpsi/interval_set.hpp"

namespace cpsi {

// alpha r^2 + beta r + gamma
struct QuadraticPolynomial {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  double eval(double r) const { return (alpha * r + beta) * r + gamma; }
  bool is_zero() const { return alpha == 0.0 && beta == 0.0 && gamma == 0.0; }

  QuadraticPolynomial operator-(const QuadraticPolynomial& o) const {
    return {alpha - o.alpha, beta - o.beta, gamma - o.gamma};
  }
  bool operator==(const QuadraticPolynomial&) const = default;
};

enum class Relation { le, ge, lt, gt };

// Exact solution set of p(r) REL 0 as a union of closed intervals. Strict
// relations are solved as their closures; |alpha| < 1e-12 falls back to the
// linear case and |beta| < 1e-12 to the constant case. The witness must
// satisfy the relation (within 1e-9 relative slack) and is always contained
// in the result; a violating witness raises InconsistencyError.
IntervalSet solve_quadratic_inequality(const QuadraticPolynomial& p, Relation rel, double witness);

}  // namespace cpsi
