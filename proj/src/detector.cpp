#include "cpsi/detector.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cpsi/errors.hpp"
#include "cpsi/kernels.hpp"

namespace cpsi {

void DetectorConfig::validate(int n) const {
  if (K < 1) throw InvalidInput("DetectorConfig: K must be >= 1");
  if (l < 1 || m < 1) throw InvalidInput("DetectorConfig: l and m must be >= 1");
  if (w < 1 || w % 2 == 0) throw InvalidInput("DetectorConfig: w must be odd and >= 1");
  if (n <= l + m) {
    std::ostringstream os;
    os << "DetectorConfig: sequence length " << n << " too short for l + m = " << l + m;
    throw RangeError(os.str());
  }
}

std::vector<double> error_scores(std::span<const double> x, const RnnWeights& w,
                                 const DetectorConfig& cfg) {
  const int n = static_cast<int>(x.size());
  cfg.validate(n);
  std::vector<double> e(n, 0.0);
  const double inv_m = 1.0 / cfg.m;
  for (int pos = cfg.l; pos <= n - cfg.m; ++pos) {
    const std::vector<double> pred = rollout(w, x, pos, cfg.l, cfg.m);
    // targets are x_{pos+1..pos+m}, i.e. x[pos..pos+m-1] zero-based
    e[pos - 1] = kernels::squared_distance(pred.data(), x.data() + pos, cfg.m) * inv_m;
  }
  return e;
}

std::vector<double> anomaly_scores(std::span<const double> e, int w) {
  if (w < 1 || w % 2 == 0) throw InvalidInput("anomaly_scores: w must be odd and >= 1");
  std::vector<double> s(e.size());
  kernels::moving_average(e.data(), e.size(), w, s.data());
  return s;
}

std::vector<int> local_maxima(std::span<const double> s) {
  const int n = static_cast<int>(s.size());
  std::vector<int> maxima;
  for (int i = 1; i + 1 < n; ++i) {
    if (s[i] - s[i - 1] > 0.0 && s[i + 1] - s[i] < 0.0) maxima.push_back(i + 1);
  }
  return maxima;
}

std::pair<std::vector<int>, std::vector<int>> select_top_k(std::span<const double> s_ano,
                                                           const std::vector<int>& maxima,
                                                           int K) {
  if (static_cast<int>(maxima.size()) < K) {
    std::ostringstream os;
    os << "detection failure: " << maxima.size() << " local maxima, need " << K;
    throw DetectionFailure(os.str());
  }
  std::vector<int> remaining = maxima;
  std::vector<std::pair<int, int>> picked;  // (position, rank)
  for (int k = 1; k <= K; ++k) {
    int best = -1;
    double best_score = -1.0;
    for (int pos : remaining) {
      const double sc = s_ano[pos - 1];
      if (best < 0 || sc > best_score) {
        best = pos;
        best_score = sc;
      }
    }
    picked.emplace_back(best, k);
    remaining.erase(std::find(remaining.begin(), remaining.end(), best));
  }
  std::sort(picked.begin(), picked.end());
  std::vector<int> tau, rank;
  for (auto [pos, r] : picked) {
    tau.push_back(pos);
    rank.push_back(r);
  }
  return {std::move(tau), std::move(rank)};
}

DetectionResult detect(std::span<const double> x, const RnnWeights& w,
                       const DetectorConfig& cfg) {
  DetectionResult res;
  res.e = error_scores(x, w, cfg);
  res.s_ano = anomaly_scores(res.e, cfg.w);
  res.maxima = local_maxima(res.s_ano);
  std::tie(res.tau_det, res.score_rank) = select_top_k(res.s_ano, res.maxima, cfg.K);
  return res;
}

}  // namespace cpsi
