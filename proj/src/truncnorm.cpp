#include "cpsi/truncnorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpsi/errors.hpp"

namespace cpsi {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
const double kInvSqrt2 = 0.70710678118654752440;
const double kLogHalf = -0.69314718055994530942;
const double kHalfLog2Pi = 0.91893853320467274178;
}  // namespace

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

double log_diff_exp(double a, double b) {
  if (b == -kInf) return a;
  if (a <= b) return -kInf;
  return a + std::log1p(-std::exp(b - a));
}

double log_norm_sf(double x) {
  if (x == kInf) return -kInf;
  if (x == -kInf) return 0.0;
  if (x < 0.0) {
    // P(X >= x) = 1 - P(X >= -x)
    return std::log1p(-std::exp(log_norm_sf(-x)));
  }
  if (x <= 30.0) return kLogHalf + std::log(std::erfc(x * kInvSqrt2));
  // Asymptotic tail: sf(x) = phi(x)/x (1 - 1/x^2 + 3/x^4 - ...)
  const double x2 = x * x;
  return -0.5 * x2 - std::log(x) - kHalfLog2Pi + std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

double log_norm_mass(double lo, double hi, double sd) {
  if (!(sd > 0.0)) throw InvalidInput("log_norm_mass: sd must be positive");
  if (lo > hi) return -kInf;
  const double a = lo / sd;
  const double b = hi / sd;
  if (a == -kInf && b == kInf) return 0.0;
  if (a >= 0.0) return log_diff_exp(log_norm_sf(a), log_norm_sf(b));
  if (b <= 0.0) return log_diff_exp(log_norm_sf(-b), log_norm_sf(-a));
  // Straddles zero; both tails are moderate, so linear space is safe.
  const double mass = -std::expm1(log_sum_exp(log_norm_sf(b), log_norm_sf(-a)));
  return mass > 0.0 ? std::log(mass) : -kInf;
}

double log_norm_mass(const IntervalSet& region, double sd) {
  double acc = -kInf;
  for (const Interval& iv : region.intervals()) acc = log_sum_exp(acc, log_norm_mass(iv.lo, iv.hi, sd));
  return acc;
}

double truncated_normal_p(double z_obs, double sd, const IntervalSet& region) {
  if (!(sd > 0.0)) throw InvalidInput("truncated_normal_p: sd must be positive");
  const double log_den = log_norm_mass(region, sd);
  if (log_den == -kInf)
    throw NumericError("truncated_normal_p: truncation region carries no probability mass");

  const double t = std::abs(z_obs);
  double log_num = -kInf;
  for (const Interval& iv : region.intervals()) {
    // upper tail [t, inf)
    if (iv.hi >= t) log_num = log_sum_exp(log_num, log_norm_mass(std::max(iv.lo, t), iv.hi, sd));
    // lower tail (-inf, -t]
    if (iv.lo <= -t) log_num = log_sum_exp(log_num, log_norm_mass(iv.lo, std::min(iv.hi, -t), sd));
  }
  if (log_num == -kInf) return 0.0;
  return std::clamp(std::exp(log_num - log_den), 0.0, 1.0);
}

}  // namespace cpsi
