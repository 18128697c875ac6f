#include <doctest.h>

#include <cmath>
#include <limits>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "cpsi/errors.hpp"
#include "cpsi/truncnorm.hpp"

using namespace cpsi;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double quadrature_mass(double lo, double hi) {
  boost::math::quadrature::tanh_sinh<double> q;
  auto pdf = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); };
  return q.integrate(pdf, lo, hi, 1e-12);
}
}  // namespace

TEST_CASE("log_norm_sf against erfc and the asymptotic branch") {
  for (double x : {-3.0, -1.0, 0.0, 0.5, 2.0, 8.0, 20.0, 29.9}) {
    const double ref = std::log(0.5 * std::erfc(x / std::sqrt(2.0)));
    CHECK(log_norm_sf(x) == doctest::Approx(ref).epsilon(1e-12));
  }
  // branch continuity around the switch point
  CHECK(log_norm_sf(30.0001) == doctest::Approx(log_norm_sf(29.9999)).epsilon(1e-6));
  CHECK(log_norm_sf(-kInf) == 0.0);
  CHECK(log_norm_sf(kInf) == -kInf);
  CHECK(std::isfinite(log_norm_sf(38.0)));
}

TEST_CASE("full-line two-sided p at the 1.96 quantile") {
  const IntervalSet full = IntervalSet::full_line();
  const double p = truncated_normal_p(1.96 * 2.5, 2.5, full);
  CHECK(std::abs(p - 0.05) < 1e-4);
  CHECK(truncated_normal_p(0.0, 1.0, full) == doctest::Approx(1.0));
}

TEST_CASE("region equal to the rejection tails gives p = 1") {
  const double z = 1.3, sd = 0.7;
  IntervalSet tails;
  tails.add(-kInf, -z);
  tails.add(z, kInf);
  CHECK(truncated_normal_p(z, sd, tails) == doctest::Approx(1.0));
}

TEST_CASE("far-tail interval matches adaptive quadrature to 1e-6 relative") {
  IntervalSet region = IntervalSet::single(5.0, 6.0);
  const double p = truncated_normal_p(5.5, 1.0, region);
  const double ref = quadrature_mass(5.5, 6.0) / quadrature_mass(5.0, 6.0);
  CHECK(std::abs(p - ref) <= 1e-6 * ref);

  // no underflow even further out
  const double p2 = truncated_normal_p(7.75, 1.0, IntervalSet::single(7.5, 8.0));
  CHECK(std::isfinite(p2));
  CHECK(p2 > 0.0);
  CHECK(p2 < 1.0);
}

TEST_CASE("p is monotone decreasing in |z| on the full line") {
  const IntervalSet full = IntervalSet::full_line();
  double prev = 1.1;
  for (double z = 0.0; z <= 8.0; z += 0.25) {
    const double p = truncated_normal_p(z, 1.0, full);
    CHECK(p <= prev + 1e-15);
    prev = p;
  }
}

TEST_CASE("mass helpers cross-check against quadrature") {
  for (double sd : {0.5, 1.0, 3.0}) {
    for (auto [lo, hi] : std::vector<std::pair<double, double>>{
             {-1.0, 2.0}, {0.5, 0.6}, {-4.0, -3.0}, {2.0, kInf}}) {
      const double got = std::exp(log_norm_mass(lo, hi, sd));
      const double ref =
          quadrature_mass(lo / sd, hi == kInf ? 40.0 : hi / sd);
      CHECK(got == doctest::Approx(ref).epsilon(1e-9));
    }
  }
}

TEST_CASE("zero-mass region raises NumericError") {
  CHECK_THROWS_AS(truncated_normal_p(1.0, 1.0, IntervalSet::single(1.0, 1.0)), NumericError);
  CHECK_THROWS_AS(truncated_normal_p(1.0, 0.0, IntervalSet::full_line()), InvalidInput);
}

TEST_CASE("log_sum_exp and log_diff_exp handle infinities") {
  CHECK(log_sum_exp(-kInf, -kInf) == -kInf);
  CHECK(log_sum_exp(0.0, -kInf) == 0.0);
  CHECK(log_diff_exp(0.0, -kInf) == 0.0);
  CHECK(log_diff_exp(-1.0, -1.0) == -kInf);
  CHECK(log_sum_exp(std::log(0.3), std::log(0.2)) == doctest::Approx(std::log(0.5)));
  CHECK(log_diff_exp(std::log(0.5), std::log(0.2)) == doctest::Approx(std::log(0.3)));
}
