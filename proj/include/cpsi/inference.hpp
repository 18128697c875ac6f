#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cpsi/affine_path.hpp"
#include "cpsi/covariance.hpp"
#include "cpsi/detector.hpp"
#include "cpsi/interval_set.hpp"
#include "cpsi/rnn.hpp"
#include "cpsi/truncnorm.hpp"

namespace cpsi {

enum class Problem { mean_shift, trend_shift };

// Contrast for the k-th detected CP (k 1-based); sentinels tau_0 = 0 and
// tau_{K+1} = n are implicit. Mean-shift: difference of segment averages.
std::vector<double> eta_mean_shift(const std::vector<int>& tau_det, int k, int n);
// Trend-shift: difference of OLS slopes of the two segments.
std::vector<double> eta_trend_shift(const std::vector<int>& tau_det, int k, int n);
// OLS slope weights for a unit-spaced segment of the given length (>= 2).
std::vector<double> segment_slope_weights(int length);

// The one-dimensional data line x = a + b z with z = eta^T x.
struct TestDirection {
  std::vector<double> eta;
  double z_obs = 0.0;
  double sd = 0.0;  // sqrt(eta^T Sigma eta)
  std::vector<double> a_line;
  std::vector<double> b_line;
  int k = 0;
  Problem problem = Problem::mean_shift;
};

TestDirection line_params(std::span<const double> x, std::span<const double> eta,
                          const Covariance& sigma);

struct PathOptions {
  double bounds_mult = 10.0;    // search bounds: z_obs +- bounds_mult * sd
  double step_fraction = 1e-4;  // witness inset into a gap, relative to sd
  long max_iterations = 100000; // oc-region evaluations per test
  int tie_retry_cap = 20;

  // Early-termination rules; exhaustive coverage when both are off.
  bool stop_on_tol = false;
  double tol = 1e-3;
  bool stop_on_alpha = false;
  double alpha = 0.05;
};

struct PathResult {
  IntervalSet region;             // Z: matched regions, clipped to the bounds
  IntervalSet explored;           // S
  IntervalSet oc_witness_region;  // Z^oc at the observed witness, unclipped
  long iterations = 0;
  double p_lower = 0.0;
  double p_upper = 1.0;
  bool decided = false;    // a stopping rule fired
  bool exhausted = false;  // bounds fully covered
  double bound_lo = 0.0;
  double bound_hi = 0.0;
};

// Parametric-programming sweep over the data line: repeatedly evaluates the
// over-conditioned region at uncovered witnesses (alternating between the
// uncovered point nearest 0 and nearest z_obs) and unions regions whose
// detection matches tau_det exactly. Throws PpCapExceeded past the iteration
// cap; degenerate ties skip the witness up to tie_retry_cap times and then
// propagate.
PathResult compute_solution_path(const TestDirection& dir, const std::vector<int>& tau_det,
                                 const RnnWeights& w, const DetectorConfig& cfg,
                                 const PathOptions& opt);

struct SiResult {
  int k = 0;
  int tau_k = 0;
  IntervalSet region;
  IntervalSet explored;
  double p_selective = 1.0;
  double p_oc = 1.0;
  double p_naive = 1.0;
  long iterations = 0;
  // present when the sweep terminated early; p_selective is then the midpoint
  std::optional<std::pair<double, double>> bounds;
};

struct BoundedP {
  double lower = 0.0;
  double upper = 1.0;
  bool decided = false;
  long iterations = 0;
};

// Early-terminating selective p-value: valid bounds from worst-case
// allocation of the unexplored mass, stopping once both bounds fall on the
// same side of alpha or their width drops below tol.
BoundedP bounded_selective_p(const TestDirection& dir, const std::vector<int>& tau_det,
                             const RnnWeights& w, const DetectorConfig& cfg, double alpha,
                             double tol, PathOptions base = {});

// Full per-CP analysis: detect once, then selective / over-conditioned /
// naive p-values for every k.
std::vector<SiResult> run_si(std::span<const double> x, const Covariance& sigma,
                             const RnnWeights& w, const DetectorConfig& cfg, Problem problem,
                             const PathOptions& opt);

}  // namespace cpsi
