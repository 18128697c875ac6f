#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cpsi/errors.hpp"
#include "cpsi/quadratic.hpp"

using namespace cpsi;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("unit parabola and linear cases") {
  const IntervalSet par = solve_quadratic_inequality({1, 0, -1}, Relation::le, 0.0);
  REQUIRE(par.size() == 1);
  CHECK(par[0].lo == doctest::Approx(-1.0));
  CHECK(par[0].hi == doctest::Approx(1.0));

  const IntervalSet lin = solve_quadratic_inequality({0, 2, -4}, Relation::ge, 5.0);
  REQUIRE(lin.size() == 1);
  CHECK(lin[0].lo == doctest::Approx(2.0));
  CHECK(lin[0].hi == kInf);

  const IntervalSet lin2 = solve_quadratic_inequality({0, -1, 2}, Relation::ge, 0.0);
  REQUIRE(lin2.size() == 1);
  CHECK(lin2[0].lo == -kInf);
  CHECK(lin2[0].hi == doctest::Approx(2.0));
}

TEST_CASE("constant polynomials: full line or inconsistency") {
  CHECK(solve_quadratic_inequality({0, 0, -1}, Relation::le, 3.0) == IntervalSet::full_line());
  CHECK(solve_quadratic_inequality({0, 0, 1}, Relation::ge, -7.0) == IntervalSet::full_line());
  CHECK_THROWS_AS(solve_quadratic_inequality({0, 0, 1}, Relation::le, 0.0), InconsistencyError);
}

TEST_CASE("witness violations are rejected") {
  CHECK_THROWS_AS(solve_quadratic_inequality({1, 0, -1}, Relation::le, 2.0), InconsistencyError);
  CHECK_THROWS_AS(solve_quadratic_inequality({0, 1, 0}, Relation::gt, -1.0), InconsistencyError);
}

TEST_CASE("concave case returns the two-sided complement") {
  // -(r^2 - 1) <= 0 outside [-1, 1]
  const IntervalSet out = solve_quadratic_inequality({-1, 0, 1}, Relation::le, 5.0);
  REQUIRE(out.size() == 2);
  CHECK(out[0].lo == -kInf);
  CHECK(out[0].hi == doctest::Approx(-1.0));
  CHECK(out[1].lo == doctest::Approx(1.0));
  CHECK(out[1].hi == kInf);
}

TEST_CASE("strict relations solve as closures") {
  const IntervalSet s = solve_quadratic_inequality({1, 0, -4}, Relation::lt, 0.0);
  REQUIRE(s.size() == 1);
  CHECK(s[0].lo == doctest::Approx(-2.0));
  CHECK(s[0].hi == doctest::Approx(2.0));
}

TEST_CASE("grid-sign oracle on random quadratics") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::uniform_real_distribution<double> pt(-8.0, 8.0);
  int done = 0;
  while (done < 60) {
    QuadraticPolynomial p{coef(rng), coef(rng), coef(rng)};
    if (std::abs(p.alpha) < 1e-6) continue;
    const Relation rel = (done % 2 == 0) ? Relation::le : Relation::gt;
    // find a witness satisfying the relation
    double z = 0;
    bool found = false;
    for (int t = 0; t < 200; ++t) {
      z = pt(rng);
      const double v = p.eval(z);
      if ((rel == Relation::le && v <= -1e-6) || (rel == Relation::gt && v >= 1e-6)) {
        found = true;
        break;
      }
    }
    if (!found) continue;
    const IntervalSet sol = solve_quadratic_inequality(p, rel, z);
    CHECK(sol.contains(z));
    for (int g = 0; g <= 400; ++g) {
      const double r = -8.0 + g * 16.0 / 400.0;
      const double v = p.eval(r);
      if (std::abs(v) < 1e-9) continue;  // too close to a root to classify
      const bool should = (rel == Relation::le) ? (v < 0.0) : (v > 0.0);
      CHECK(sol.contains(r) == should);
    }
    ++done;
  }
}
