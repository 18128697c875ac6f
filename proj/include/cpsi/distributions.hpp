#pragma once

#include <random>
#include <string>

namespace cpsi {

// Standardized noise families for the robustness protocol. Every member is
// shifted/scaled to zero mean and unit variance; the parameter moves it away
// from N(0,1).
enum class NoiseFamily { gaussian, skewnorm, exponnorm, gennorm_steep, gennorm_flat, student_t };

const char* family_name(NoiseFamily f);
NoiseFamily family_from_name(const std::string& name);

// One draw from the standardized member.
double family_sample(NoiseFamily f, double param, std::mt19937_64& rng);

// Quantile of the standardized member at u in (0, 1).
double family_quantile(NoiseFamily f, double param, double u);
double normal_quantile(double u);

// 1-Wasserstein distance between the standardized member and N(0,1),
// via quadrature of |F^-1(u) - Phi^-1(u)| over u.
double wasserstein_to_normal(NoiseFamily f, double param);

// Parameter whose standardized member sits at 1-Wasserstein distance d from
// N(0,1) (within 1e-4), found by bisection. Throws CalibrationError when the
// target is unattainable in the family's range.
double calibrate_family(NoiseFamily f, double d);

}  // namespace cpsi
