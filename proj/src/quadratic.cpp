#include "cpsi/quadratic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cpsi/errors.hpp"

namespace cpsi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDegenerateEps = 1e-12;
constexpr double kWitnessTol = 1e-9;

[[noreturn]] void witness_violation(const QuadraticPolynomial& p, double z) {
  std::ostringstream os;
  os << "solve_quadratic_inequality: witness " << z << " violates constraint (" << p.alpha << ", "
     << p.beta << ", " << p.gamma << "), p(z) = " << p.eval(z);
  throw InconsistencyError(os.str());
}

// Roots of alpha r^2 + beta r + gamma with the two-branch formula; disc >= 0.
std::pair<double, double> stable_roots(double alpha, double beta, double gamma, double disc) {
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (beta + std::copysign(sq, beta));
  double r1, r2;
  if (q != 0.0) {
    r1 = q / alpha;
    r2 = gamma / q;
  } else {
    r1 = r2 = -beta / (2.0 * alpha);
  }
  if (r1 > r2) std::swap(r1, r2);
  return {r1, r2};
}

}  // namespace

IntervalSet solve_quadratic_inequality(const QuadraticPolynomial& p, Relation rel, double witness) {
  if (!std::isfinite(p.alpha) || !std::isfinite(p.beta) || !std::isfinite(p.gamma) ||
      !std::isfinite(witness))
    throw InvalidInput("solve_quadratic_inequality: non-finite input");

  // Normalize to p(r) <= 0; strict relations use the closure.
  QuadraticPolynomial q = p;
  if (rel == Relation::ge || rel == Relation::gt) {
    q.alpha = -q.alpha;
    q.beta = -q.beta;
    q.gamma = -q.gamma;
  }

  const double z = witness;
  const double scale = std::abs(q.alpha * z * z) + std::abs(q.beta * z) + std::abs(q.gamma) + 1.0;
  const double tol = kWitnessTol * scale;
  if (q.eval(z) > tol) witness_violation(q, z);

  if (std::abs(q.alpha) < kDegenerateEps) {
    if (std::abs(q.beta) < kDegenerateEps) {
      // Constant; the witness check above already passed, so the (closed)
      // solution set is the whole line.
      return IntervalSet::full_line();
    }
    const double root = -q.gamma / q.beta;
    if (q.beta > 0.0) return IntervalSet::single(-kInf, std::max(root, z));
    return IntervalSet::single(std::min(root, z), kInf);
  }

  const double disc = q.beta * q.beta - 4.0 * q.alpha * q.gamma;
  if (q.alpha > 0.0) {
    // Convex, <= 0 between roots.
    if (disc <= 0.0) {
      // Numerically touching at the vertex; witness passed the slack check.
      const double v = -q.beta / (2.0 * q.alpha);
      return IntervalSet::single(std::min(v, z), std::max(v, z));
    }
    auto [r1, r2] = stable_roots(q.alpha, q.beta, q.gamma, disc);
    return IntervalSet::single(std::min(r1, z), std::max(r2, z));
  }

  // Concave, <= 0 outside the roots. When rounding leaves the witness
  // marginally inside (r1, r2), widen the nearer branch to keep it contained.
  if (disc <= 0.0) return IntervalSet::full_line();
  auto [r1, r2] = stable_roots(q.alpha, q.beta, q.gamma, disc);
  double left_hi = r1;
  double right_lo = r2;
  if (z > r1 && z < r2) {
    if (z - r1 <= r2 - z)
      left_hi = z;
    else
      right_lo = z;
  }
  IntervalSet out;
  out.add(-kInf, left_hi);
  out.add(right_lo, kInf);
  return out;
}

}  // namespace cpsi
