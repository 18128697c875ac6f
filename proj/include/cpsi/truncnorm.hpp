#pragma once

#include "cpsi/interval_set.hpp"

namespace cpsi {

// log(exp(a) + exp(b)), tolerating -inf.
double log_sum_exp(double a, double b);
// log(exp(a) - exp(b)) for a >= b; -inf when equal.
double log_diff_exp(double a, double b);

// log P(X >= x) for X ~ N(0,1); accurate far into the tail.
double log_norm_sf(double x);

// log P(lo <= Z <= hi) for Z ~ N(0, sd^2).
double log_norm_mass(double lo, double hi, double sd);
double log_norm_mass(const IntervalSet& region, double sd);

// Two-sided truncated-normal p-value
//   P(|Z| >= |z_obs| | Z in region),  Z ~ N(0, sd^2),
// computed in log space so far-tail regions stay accurate. Throws
// NumericError when the region carries no mass.
double truncated_normal_p(double z_obs, double sd, const IntervalSet& region);

}  // namespace cpsi
