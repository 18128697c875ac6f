#include "cpsi/distributions.hpp"

#include <cmath>
#include <functional>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/skew_normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "cpsi/errors.hpp"
#include "cpsi/truncnorm.hpp"

namespace cpsi {

namespace {

constexpr double kTwoOverPi = 0.63661977236758134308;

double gennorm_sd(double beta) {
  // Var = Gamma(3/beta) / Gamma(1/beta)
  return std::sqrt(std::exp(std::lgamma(3.0 / beta) - std::lgamma(1.0 / beta)));
}

struct SkewMoments {
  double mean, sd;
};
SkewMoments skew_moments(double alpha) {
  const double d = alpha / std::sqrt(1.0 + alpha * alpha);
  const double mean = d * std::sqrt(kTwoOverPi);
  return {mean, std::sqrt(1.0 - d * d * kTwoOverPi)};
}

// EMG (normal + K * Exp(1)) distribution function, evaluated in log space so
// that small K stays stable.
double exponnorm_cdf(double x, double K) {
  const double lam = 1.0 / K;
  const double phi = -std::expm1(log_norm_sf(x));  // Phi(x)
  const double g = -lam * x + 0.5 * lam * lam + log_norm_sf(lam - x);
  return phi - std::exp(g);
}

double exponnorm_quantile_raw(double K, double u) {
  double lo = -16.0;
  double hi = 16.0 + K * 60.0;
  for (int i = 0; i < 200 && exponnorm_cdf(lo, K) > u; ++i) lo *= 2.0;
  for (int i = 0; i < 200 && exponnorm_cdf(hi, K) < u; ++i) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (exponnorm_cdf(mid, K) < u)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

const char* family_name(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::skewnorm: return "skewnorm";
    case NoiseFamily::exponnorm: return "exponnorm";
    case NoiseFamily::gennorm_steep: return "gennormsteep";
    case NoiseFamily::gennorm_flat: return "gennormflat";
    case NoiseFamily::student_t: return "t";
  }
  return "?";
}

NoiseFamily family_from_name(const std::string& name) {
  if (name == "gaussian" || name == "normal") return NoiseFamily::gaussian;
  if (name == "skewnorm") return NoiseFamily::skewnorm;
  if (name == "exponnorm") return NoiseFamily::exponnorm;
  if (name == "gennormsteep" || name == "gennorm-steep") return NoiseFamily::gennorm_steep;
  if (name == "gennormflat" || name == "gennorm-flat") return NoiseFamily::gennorm_flat;
  if (name == "t" || name == "student-t") return NoiseFamily::student_t;
  throw InvalidInput("unknown noise family: " + name);
}

double family_sample(NoiseFamily f, double param, std::mt19937_64& rng) {
  std::normal_distribution<double> stdnorm(0.0, 1.0);
  switch (f) {
    case NoiseFamily::gaussian:
      return stdnorm(rng);
    case NoiseFamily::skewnorm: {
      const double d = param / std::sqrt(1.0 + param * param);
      const double u0 = stdnorm(rng);
      const double v = stdnorm(rng);
      const double x = d * std::abs(u0) + std::sqrt(1.0 - d * d) * v;
      const SkewMoments m = skew_moments(param);
      return (x - m.mean) / m.sd;
    }
    case NoiseFamily::exponnorm: {
      std::exponential_distribution<double> ex(1.0);
      const double x = stdnorm(rng) + param * ex(rng);
      return (x - param) / std::sqrt(1.0 + param * param);
    }
    case NoiseFamily::gennorm_steep:
    case NoiseFamily::gennorm_flat: {
      std::gamma_distribution<double> gamma(1.0 / param, 1.0);
      std::bernoulli_distribution sign(0.5);
      const double g = std::pow(gamma(rng), 1.0 / param);
      return (sign(rng) ? g : -g) / gennorm_sd(param);
    }
    case NoiseFamily::student_t: {
      if (param <= 2.0) throw InvalidInput("student_t: dof must exceed 2");
      std::student_t_distribution<double> t(param);
      return t(rng) / std::sqrt(param / (param - 2.0));
    }
  }
  throw InvalidInput("family_sample: bad family");
}

double normal_quantile(double u) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), u);
}

double family_quantile(NoiseFamily f, double param, double u) {
  if (!(u > 0.0 && u < 1.0)) throw InvalidInput("family_quantile: u must be in (0,1)");
  switch (f) {
    case NoiseFamily::gaussian:
      return normal_quantile(u);
    case NoiseFamily::skewnorm: {
      boost::math::skew_normal_distribution<double> sn(0.0, 1.0, param);
      const SkewMoments m = skew_moments(param);
      return (boost::math::quantile(sn, u) - m.mean) / m.sd;
    }
    case NoiseFamily::exponnorm:
      return (exponnorm_quantile_raw(param, u) - param) / std::sqrt(1.0 + param * param);
    case NoiseFamily::gennorm_steep:
    case NoiseFamily::gennorm_flat: {
      const double beta = param;
      const double sd = gennorm_sd(beta);
      if (u >= 0.5) {
        const double g = boost::math::gamma_p_inv(1.0 / beta, 2.0 * u - 1.0);
        return std::pow(g, 1.0 / beta) / sd;
      }
      const double g = boost::math::gamma_p_inv(1.0 / beta, 1.0 - 2.0 * u);
      return -std::pow(g, 1.0 / beta) / sd;
    }
    case NoiseFamily::student_t: {
      if (param <= 2.0) throw InvalidInput("student_t: dof must exceed 2");
      boost::math::students_t_distribution<double> t(param);
      return boost::math::quantile(t, u) / std::sqrt(param / (param - 2.0));
    }
  }
  throw InvalidInput("family_quantile: bad family");
}

double wasserstein_to_normal(NoiseFamily f, double param) {
  if (f == NoiseFamily::gaussian) return 0.0;
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double eps = 1e-14;
  auto integrand = [&](double u) {
    return std::abs(family_quantile(f, param, u) - normal_quantile(u));
  };
  return integrator.integrate(integrand, eps, 1.0 - eps, 1e-9);
}

double calibrate_family(NoiseFamily f, double d) {
  if (!(d > 0.0 && d <= 0.2)) throw InvalidInput("calibrate_family: d must be in (0, 0.2]");
  if (f == NoiseFamily::gaussian)
    throw CalibrationError("calibrate_family: the gaussian family needs no calibration");

  // Map each family onto a parameter range where the distance is increasing.
  std::function<double(double)> param_of;
  double lo, hi;
  switch (f) {
    case NoiseFamily::skewnorm:
      lo = 1e-4, hi = 60.0;
      param_of = [](double s) { return s; };
      break;
    case NoiseFamily::exponnorm:
      lo = 1e-4, hi = 60.0;
      param_of = [](double s) { return s; };
      break;
    case NoiseFamily::gennorm_steep:
      // distance decreases in beta toward beta = 2, so sweep beta = 2 - s
      lo = 0.0, hi = 1.74;
      param_of = [](double s) { return 2.0 - s; };
      break;
    case NoiseFamily::gennorm_flat:
      lo = 0.0, hi = 98.0;
      param_of = [](double s) { return 2.0 + s; };
      break;
    case NoiseFamily::student_t:
      // distance increases in 1/nu
      lo = 1e-7, hi = 1.0 / 2.05;
      param_of = [](double s) { return 1.0 / s; };
      break;
    default:
      throw CalibrationError("calibrate_family: bad family");
  }

  auto dist = [&](double s) { return wasserstein_to_normal(f, param_of(s)); };
  double d_lo = dist(lo > 0 ? lo : 1e-6);
  double d_hi = dist(hi);
  if (d < d_lo || d > d_hi) {
    throw CalibrationError(std::string("calibrate_family: target distance unattainable for ") +
                           family_name(f));
  }
  double a = lo > 0 ? lo : 1e-6, b = hi;
  double mid = 0.5 * (a + b);
  for (int i = 0; i < 100; ++i) {
    mid = 0.5 * (a + b);
    const double dm = dist(mid);
    if (std::abs(dm - d) < 1e-5) break;
    if (dm < d)
      a = mid;
    else
      b = mid;
  }
  return param_of(mid);
}

}  // namespace cpsi
