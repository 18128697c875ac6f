#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cpsi/errors.hpp"
#include "cpsi/harness.hpp"
#include "cpsi/rnn.hpp"
#include "cpsi/train.hpp"
#include "test_util.hpp"

using namespace cpsi;

namespace {

// Loss recomputed independently through rnn_forward, for the FD oracle.
double loss_reference(const RnnWeights& w, const std::vector<std::vector<double>>& data) {
  const int l = w.window_len;
  double loss = 0.0;
  long n = 0;
  for (const auto& seq : data) {
    for (int end = l - 1; end + 1 < static_cast<int>(seq.size()); ++end) {
      const std::vector<double> win(seq.begin() + (end - l + 1), seq.begin() + end + 1);
      const double p = rnn_forward(w, win).prediction;
      loss += (p - seq[end + 1]) * (p - seq[end + 1]);
      ++n;
    }
  }
  return loss / n;
}

}  // namespace

TEST_CASE("constant-zero sequences train to a near-zero prediction") {
  std::vector<std::vector<double>> data(8, std::vector<double>(40, 0.0));
  TrainConfig cfg;
  cfg.d_h = 4;
  cfg.window_len = 5;
  cfg.epochs = 60;
  cfg.pl_segments = 32;
  cfg.seed = 3;
  const TrainResult res = train_bptt(data, cfg);
  const double p = rnn_forward(res.weights, std::vector<double>(5, 0.0)).prediction;
  CHECK(std::abs(p) < 0.1);
}

TEST_CASE("training is bitwise deterministic under a fixed seed") {
  const auto data = make_training_sequences(6, 40, 1.5, 99);
  TrainConfig cfg;
  cfg.d_h = 3;
  cfg.window_len = 4;
  cfg.epochs = 20;
  cfg.pl_segments = 32;
  cfg.seed = 7;
  const TrainResult a = train_bptt(data, cfg);
  const TrainResult b = train_bptt(data, cfg);
  CHECK(a.weights.W_h == b.weights.W_h);
  CHECK(a.weights.W_x == b.weights.W_x);
  CHECK(a.weights.W_b == b.weights.W_b);
  CHECK(a.weights.W_p == b.weights.W_p);
  CHECK(a.epoch_loss == b.epoch_loss);
}

TEST_CASE("losses decrease and the returned weights are the best checkpoint") {
  const auto data = make_training_sequences(8, 50, 2.0, 5);
  TrainConfig cfg;
  cfg.d_h = 4;
  cfg.window_len = 5;
  cfg.epochs = 80;
  cfg.pl_segments = 64;
  cfg.seed = 11;
  const TrainResult res = train_bptt(data, cfg);
  REQUIRE(!res.epoch_loss.empty());
  CHECK(res.epoch_loss.back() < res.epoch_loss.front());
  const double best = *std::min_element(res.epoch_loss.begin(), res.epoch_loss.end());
  CHECK(loss_reference(res.weights, data) <= best + 1e-9);
}

TEST_CASE("analytic gradient matches central finite differences") {
  const auto data = make_training_sequences(3, 20, 1.0, 13);
  RnnWeights w = testutil::random_net(2, 4, 17, make_pl_tanh(4.0, 512), 0.3);

  const LossGradients g = training_loss_gradient(w, data);
  CHECK(g.loss == doctest::Approx(loss_reference(w, data)).epsilon(1e-12));

  const double step = 1e-5;
  auto check_grad = [&](std::vector<double>& param, const std::vector<double>& grad) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double saved = param[i];
      param[i] = saved + step;
      const double up = loss_reference(w, data);
      param[i] = saved - step;
      const double dn = loss_reference(w, data);
      param[i] = saved;
      const double fd = (up - dn) / (2.0 * step);
      CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-3));
    }
  };
  check_grad(w.W_h, g.W_h);
  check_grad(w.W_x, g.W_x);
  check_grad(w.W_b, g.W_b);
  check_grad(w.W_p, g.W_p);
}

TEST_CASE("diverging learning rate raises TrainingFailure") {
  const auto data = make_training_sequences(4, 30, 1.0, 23);
  TrainConfig cfg;
  cfg.d_h = 4;
  cfg.window_len = 5;
  cfg.epochs = 200;
  cfg.pl_segments = 32;
  cfg.learning_rate = 1e3;
  cfg.init_scale = 0.5;
  CHECK_THROWS_AS(train_bptt(data, cfg), TrainingFailure);
}

TEST_CASE("sequences shorter than the window are rejected") {
  std::vector<std::vector<double>> data{{1.0, 2.0, 3.0}};
  TrainConfig cfg;
  cfg.window_len = 5;
  CHECK_THROWS_AS(train_bptt(data, cfg), InvalidInput);
}
