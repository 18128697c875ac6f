#include <doctest.h>

#include <algorithm>
#include <random>

#include "cpsi/detector.hpp"
#include "cpsi/errors.hpp"
#include "test_util.hpp"

using namespace cpsi;
using namespace cpsi::testutil;

TEST_CASE("pass-through net on a constant series gives zero error everywhere") {
  const RnnWeights pt = passthrough_net(5);
  const std::vector<double> x(30, 1.0);
  DetectorConfig cfg;
  cfg.K = 1;
  cfg.l = 5;
  cfg.m = 5;
  cfg.w = 5;
  const auto e = error_scores(x, pt, cfg);
  for (double v : e) CHECK(v == 0.0);
  CHECK_THROWS_AS(detect(x, pt, cfg), DetectionFailure);
}

TEST_CASE("pass-through net sees the jump as a squared step") {
  // zeros then a jump to c: the window ending just before the jump predicts
  // zero for all m horizons while every target is c
  const double c = 3.0;
  std::vector<double> x(30, 0.0);
  for (int i = 20; i < 30; ++i) x[i] = c;
  const RnnWeights pt = passthrough_net(5);
  DetectorConfig cfg;
  cfg.K = 1;
  cfg.l = 5;
  cfg.m = 5;
  cfg.w = 5;
  const auto e = error_scores(x, pt, cfg);
  CHECK(e[19] == doctest::Approx(c * c));  // 1-based position 20
  CHECK(e[24] == doctest::Approx(0.0));    // fully inside the new level
}

TEST_CASE("error scores match a two-loop reference") {
  const RnnWeights w = random_net(3, 4, 31, make_pl_tanh(4.0, 32));
  const std::vector<double> x = random_vec(25, 77, 2.0);
  DetectorConfig cfg;
  cfg.K = 1;
  cfg.l = 4;
  cfg.m = 3;
  cfg.w = 3;
  const auto e = error_scores(x, w, cfg);
  const int n = static_cast<int>(x.size());
  for (int pos = 1; pos <= n; ++pos) {
    if (pos < cfg.l || pos > n - cfg.m) {
      CHECK(e[pos - 1] == 0.0);
      continue;
    }
    const auto preds = rollout(w, x, pos, cfg.l, cfg.m);
    double s = 0.0;
    for (int j = 0; j < cfg.m; ++j) s += (preds[j] - x[pos + j]) * (preds[j] - x[pos + j]);
    CHECK(e[pos - 1] == doctest::Approx(s / cfg.m).epsilon(1e-10));
  }
}

TEST_CASE("local maxima: peak, plateau, brute force") {
  CHECK(local_maxima(std::vector<double>{0, 1, 0}) == std::vector<int>{2});
  CHECK(local_maxima(std::vector<double>{0, 1, 1, 0}).empty());

  const std::vector<double> s = random_vec(60, 1234, 1.0);
  const auto m = local_maxima(s);
  std::vector<int> ref;
  for (int i = 2; i <= 59; ++i)
    if (s[i - 1] > s[i - 2] && s[i - 1] > s[i]) ref.push_back(i);
  CHECK(m == ref);
}

TEST_CASE("top-K selection follows score order then position order") {
  std::vector<double> s(40, 0.0);
  s[9] = 3.0;
  s[29] = 2.0;
  s[19] = 1.0;
  const std::vector<int> maxima{10, 20, 30};
  auto [tau, rank] = select_top_k(s, maxima, 2);
  CHECK(tau == std::vector<int>{10, 30});
  CHECK(rank == std::vector<int>{1, 2});

  auto [tau2, rank2] = select_top_k(s, maxima, 3);
  CHECK(tau2 == std::vector<int>{10, 20, 30});
  CHECK(rank2 == std::vector<int>{1, 3, 2});

  CHECK_THROWS_AS(select_top_k(s, maxima, 4), DetectionFailure);
}

TEST_CASE("selection matches a sort-based oracle on random scores") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> s(50);
    for (auto& v : s) v = u(rng);
    const auto maxima = local_maxima(s);
    if (static_cast<int>(maxima.size()) < 2) continue;
    auto [tau, rank] = select_top_k(s, maxima, 2);
    std::vector<int> by_score = maxima;
    std::sort(by_score.begin(), by_score.end(),
              [&](int a, int b) { return s[a - 1] > s[b - 1]; });
    std::vector<int> expect(by_score.begin(), by_score.begin() + 2);
    std::sort(expect.begin(), expect.end());
    CHECK(tau == expect);
  }
}

TEST_CASE("detect is invariant under a shared shift of the anomaly scores") {
  const std::vector<double> s = random_vec(40, 4321, 1.0);
  const auto m1 = local_maxima(s);
  std::vector<double> shifted = s;
  for (auto& v : shifted) v += 10.0;
  CHECK(local_maxima(shifted) == m1);
  if (static_cast<int>(m1.size()) >= 2) {
    CHECK(select_top_k(s, m1, 2) == select_top_k(shifted, m1, 2));
  }
}

TEST_CASE("detect on a staircase with the pass-through net") {
  std::vector<double> x(40, 0.0);
  for (int i = 20; i < 40; ++i) x[i] = 4.0;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd(0.0, 0.1);
  for (auto& v : x) v += nd(rng);
  const RnnWeights pt = passthrough_net(5);
  DetectorConfig cfg;
  cfg.K = 1;
  cfg.l = 5;
  cfg.m = 5;
  cfg.w = 5;
  const DetectionResult det = detect(x, pt, cfg);
  CHECK(std::abs(det.tau_det[0] - 20) <= 2);
  for (int t : det.tau_det)
    CHECK(std::find(det.maxima.begin(), det.maxima.end(), t) != det.maxima.end());
}

TEST_CASE("config validation") {
  DetectorConfig cfg;
  cfg.w = 4;
  CHECK_THROWS_AS(cfg.validate(100), InvalidInput);
  cfg.w = 5;
  CHECK_THROWS_AS(cfg.validate(20), RangeError);  // n <= l + m
  CHECK_NOTHROW(cfg.validate(21));
}
