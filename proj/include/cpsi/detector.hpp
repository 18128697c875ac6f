#pragma once

#include <span>
#include <vector>

#include "cpsi/rnn.hpp"

namespace cpsi {

// All positions in this module are 1-based, matching the sentinel convention
// tau_0 = 0 < tau_1 < ... < tau_K < tau_{K+1} = n used by the tests.

struct DetectorConfig {
  int K = 2;   // change points to report
  int l = 10;  // input window length
  int m = 10;  // rollout horizon
  int w = 5;   // odd smoothing width

  void validate(int n) const;  // throws InvalidInput / RangeError
};

struct DetectionResult {
  std::vector<int> tau_det;     // ascending positions, size K
  std::vector<int> score_rank;  // selection order (1 = highest score) per tau_det entry
  std::vector<double> e;        // error scores, length n
  std::vector<double> s_ano;    // anomaly scores, length n
  std::vector<int> maxima;      // ascending local-maxima positions
};

// e_i = (1/m) || rollout(i) - x_{i+1:i+m} ||^2 for i in [l, n-m]; zero outside.
std::vector<double> error_scores(std::span<const double> x, const RnnWeights& w,
                                 const DetectorConfig& cfg);

// Width-w centered moving average with zero extension.
std::vector<double> anomaly_scores(std::span<const double> e, int w);

// Strict local maxima over positions [2, n-1].
std::vector<int> local_maxima(std::span<const double> s);

// Iterative argmax selection: K positions by descending score (ties to the
// smaller position), reported ascending together with each position's
// selection rank. Throws DetectionFailure when |maxima| < K.
std::pair<std::vector<int>, std::vector<int>> select_top_k(std::span<const double> s_ano,
                                                           const std::vector<int>& maxima, int K);

// Top-K maxima by descending score (ties to the smaller position), reported
// in ascending position order. Throws DetectionFailure when |maxima| < K.
DetectionResult detect(std::span<const double> x, const RnnWeights& w, const DetectorConfig& cfg);

}  // namespace cpsi
