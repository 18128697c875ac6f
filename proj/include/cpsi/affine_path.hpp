#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cpsi/detector.hpp"
#include "cpsi/interval_set.hpp"
#include "cpsi/quadratic.hpp"
#include "cpsi/rnn.hpp"

namespace cpsi {

// The parametrized sequence X(r) = a + b r, elementwise.
struct AffineVector {
  std::vector<double> a;
  std::vector<double> b;

  std::size_t size() const { return a.size(); }
  std::vector<double> eval(double r) const;
  void validate() const;
};

// Everything the detector committed to at one witness point: the active
// piece of every activation, the signs of adjacent anomaly-score
// differences, and the sort order of the local maxima. The region where the
// event is constant reproduces the witness detection everywhere on it.
struct SelectionEvent {
  // dims: base positions (l..n-m) x rollout step x time step x hidden unit
  int n_pos = 0, m = 0, l = 0, d_h = 0;
  std::vector<std::uint16_t> activation;
  std::vector<std::int8_t> signs;  // s[i+1]-s[i] (0-based), values -1/0/+1
  std::vector<int> maxima;         // 1-based positions
  std::vector<int> sort_perm;      // indices into maxima, descending score
  std::vector<int> detection;      // tau vector; empty when |maxima| < K

  bool operator==(const SelectionEvent&) const = default;
};

struct PropagateResult {
  double pred_a = 0.0;
  double pred_b = 0.0;
  IntervalSet constraints;  // single interval pinning every active piece
  ActivationTrace trace;
};

// Runs the recurrence over the affine window with every activation fixed at
// its witness-point piece, so the output stays affine in r. The constraint
// set is the r-interval on which the fixed pieces remain active.
PropagateResult propagate_window(std::span<const double> wa, std::span<const double> wb,
                                 const RnnWeights& w, double witness);

struct ErrorQuadratics {
  std::vector<QuadraticPolynomial> q;      // per position; zero outside [l, n-m]
  IntervalSet act_region;                  // intersection of all activation constraints
  std::vector<std::uint16_t> activation;   // full piece-index grid
  int n_pos = 0, m = 0, l = 0, d_h = 0;
};

ErrorQuadratics error_quadratics(const AffineVector& line, const RnnWeights& w,
                                 const DetectorConfig& cfg, double witness);

// Coefficient-wise moving average mirroring anomaly_scores exactly.
std::vector<QuadraticPolynomial> anomaly_quadratics(const std::vector<QuadraticPolynomial>& q,
                                                    int w);

struct SignRegion {
  IntervalSet region;
  std::vector<std::int8_t> signs;
};

// Signs of all adjacent anomaly-score differences at the witness, with the
// r-region where each keeps its sign. Identically-zero difference
// polynomials contribute sign 0 and no constraint; a nonzero polynomial
// vanishing at the witness raises DegenerateTie.
SignRegion sign_region(const std::vector<QuadraticPolynomial>& s_q, double witness);

std::vector<int> maxima_from_signs(const std::vector<std::int8_t>& signs);

struct SortRegion {
  IntervalSet region;
  std::vector<int> sort_perm;  // indices into maxima, descending score at witness
};

// Adjacent-rank chain pinning the score ordering of the maxima.
SortRegion sort_region(const std::vector<QuadraticPolynomial>& s_q, const std::vector<int>& maxima,
                       double witness);

struct OcRegionResult {
  IntervalSet region;
  SelectionEvent event;
};

// Over-conditioned region: activation, sign, and sort constraints
// intersected. The witness is always a member and the detector returns
// event.detection everywhere on the region. Requires detection to succeed at
// the witness (throws DetectionFailure otherwise).
OcRegionResult oc_region(const AffineVector& line, double witness, const RnnWeights& w,
                         const DetectorConfig& cfg);

// Sweep-friendly variant: identical except detection failure at the witness
// leaves event.detection empty instead of throwing.
OcRegionResult oc_region_any(const AffineVector& line, double witness, const RnnWeights& w,
                             const DetectorConfig& cfg);

}  // namespace cpsi
