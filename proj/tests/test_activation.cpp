#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cpsi/activation.hpp"
#include "cpsi/errors.hpp"

using namespace cpsi;

TEST_CASE("relu pieces and tie-break at the knot") {
  const PiecewiseLinearActivation relu = make_relu();
  auto [v1, p1] = activation_eval(relu, -3.0);
  CHECK(v1 == 0.0);
  CHECK(p1 == 0);
  auto [v2, p2] = activation_eval(relu, 2.0);
  CHECK(v2 == 2.0);
  CHECK(p2 == 1);
  // a value equal to the knot belongs to the lower piece
  CHECK(relu.piece_index(0.0) == 0);
  CHECK_THROWS_AS(activation_eval(relu, std::nan("")), InvalidInput);
}

TEST_CASE("pl-tanh with 4 segments matches the interpolation definition") {
  const PiecewiseLinearActivation t = make_pl_tanh(4.0, 4);
  REQUIRE(t.knots.size() == 5);
  for (int j = 0; j < 5; ++j) CHECK(t.knots[j] == doctest::Approx(-4.0 + 2.0 * j));
  CHECK(t.slopes.front() == 0.0);
  CHECK(t.slopes.back() == 0.0);
  CHECK(t.intercepts.front() == doctest::Approx(-std::tanh(4.0)));
  CHECK(t.intercepts.back() == doctest::Approx(std::tanh(4.0)));
  for (int j = 1; j <= 4; ++j) {
    const double k0 = t.knots[j - 1];
    const double expect = (std::tanh(k0 + 2.0) - std::tanh(k0)) / 2.0;
    CHECK(t.slopes[j] == doctest::Approx(expect).epsilon(1e-12));
  }
  auto [v, p] = activation_eval(t, 0.0);
  CHECK(v == 0.0);
  CHECK(p == 2);  // the piece ending at the center knot
}

TEST_CASE("pl-tanh dense-grid error below 1e-4 at 512 segments") {
  const PiecewiseLinearActivation t = make_pl_tanh(4.0, 512);
  double worst = 0.0;
  for (int i = 0; i <= 20000; ++i) {
    const double v = -4.0 + 8.0 * i / 20000.0;
    worst = std::max(worst, std::abs(activation_eval(t, v).first - std::tanh(v)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("pl-tanh is odd for even segment counts and monotone") {
  for (int segments : {4, 16, 512}) {
    const PiecewiseLinearActivation t = make_pl_tanh(4.0, segments);
    std::mt19937_64 rng(segments);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (int i = 0; i < 500; ++i) {
      const double v = u(rng);
      CHECK(activation_eval(t, -v).first ==
            doctest::Approx(-activation_eval(t, v).first).epsilon(1e-14));
    }
    for (double s : t.slopes) CHECK(s >= 0.0);
    t.validate();
  }
}

TEST_CASE("uniform-grid piece lookup matches lower_bound semantics exactly") {
  const PiecewiseLinearActivation t = make_pl_tanh(4.0, 64);
  REQUIRE(t.uniform);
  auto reference = [&](double v) {
    return static_cast<int>(std::lower_bound(t.knots.begin(), t.knots.end(), v) -
                            t.knots.begin());
  };
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng);
    CHECK(t.piece_index(v) == reference(v));
  }
  for (double k : t.knots) {
    CHECK(t.piece_index(k) == reference(k));
    CHECK(t.piece_index(std::nextafter(k, 10.0)) == reference(std::nextafter(k, 10.0)));
    CHECK(t.piece_index(std::nextafter(k, -10.0)) == reference(std::nextafter(k, -10.0)));
  }
}

TEST_CASE("validation catches broken tables") {
  PiecewiseLinearActivation bad = make_relu();
  bad.intercepts[1] = 0.5;  // discontinuity at the knot
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  CHECK_THROWS_AS(make_pl_tanh(-1.0, 8), InvalidInput);
  CHECK_THROWS_AS(make_pl_tanh(4.0, 1), InvalidInput);
}

TEST_CASE("piece continuity within 1e-12 at every knot") {
  const PiecewiseLinearActivation t = make_pl_tanh(4.0, 512);
  for (std::size_t i = 0; i < t.knots.size(); ++i) {
    const double a = t.slopes[i] * t.knots[i] + t.intercepts[i];
    const double b = t.slopes[i + 1] * t.knots[i] + t.intercepts[i + 1];
    CHECK(std::abs(a - b) <= 1e-12);
  }
}
