#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include <json.hpp>

#include "cpsi/errors.hpp"
#include "cpsi/rnn.hpp"
#include "test_util.hpp"

using namespace cpsi;
using namespace cpsi::testutil;

namespace {

// Straight-line reimplementation of the recurrence, independent of the
// kernels and piece lookup in the library.
double forward_reference(const RnnWeights& w, const std::vector<double>& window,
                         std::vector<int>* trace = nullptr) {
  const int d = w.d_h;
  std::vector<double> h(d, 0.0), nh(d);
  for (double xt : window) {
    for (int j = 0; j < d; ++j) {
      double u = w.W_b[j] + w.W_x[j] * xt;
      for (int c = 0; c < d; ++c) u += w.W_h[j * d + c] * h[c];
      const int p = static_cast<int>(std::lower_bound(w.activation.knots.begin(),
                                                      w.activation.knots.end(), u) -
                                     w.activation.knots.begin());
      if (trace) trace->push_back(p);
      nh[j] = w.activation.slopes[p] * u + w.activation.intercepts[p];
    }
    h = nh;
  }
  double pred = 0.0;
  for (int j = 0; j < d; ++j) pred += w.W_p[j] * h[j];
  return pred;
}

}  // namespace

TEST_CASE("zero weights map everything to zero") {
  RnnWeights w = random_net(3, 4, 1, make_pl_tanh(4.0, 16), 0.0);
  const auto res = rnn_forward(w, std::vector<double>{1.0, -2.0, 0.5, 3.0});
  CHECK(res.prediction == 0.0);
  const int p0 = w.activation.piece_index(0.0);
  for (auto p : res.trace) CHECK(p == p0);
}

TEST_CASE("pass-through net reproduces the last input") {
  const RnnWeights w = passthrough_net(3);
  const auto res = rnn_forward(w, std::vector<double>{7.0, 1.0, 3.0});
  CHECK(res.prediction == doctest::Approx(3.0));
}

TEST_CASE("forward matches the straight-line reference on random nets") {
  for (std::uint64_t seed : {2u, 3u, 4u}) {
    const RnnWeights w = random_net(4, 10, seed, make_pl_tanh(4.0, 32));
    const std::vector<double> win = random_vec(10, seed + 100, 2.0);
    std::vector<int> ref_trace;
    const double ref = forward_reference(w, win, &ref_trace);
    const auto res = rnn_forward(w, win);
    CHECK(res.prediction == doctest::Approx(ref).epsilon(1e-12));
    REQUIRE(res.trace.size() == ref_trace.size());
    for (std::size_t i = 0; i < ref_trace.size(); ++i) CHECK(res.trace[i] == ref_trace[i]);
  }
}

TEST_CASE("forward is deterministic") {
  const RnnWeights w = random_net(4, 6, 5, make_pl_tanh(4.0, 64));
  const std::vector<double> win = random_vec(6, 500, 1.5);
  const auto a = rnn_forward(w, win);
  const auto b = rnn_forward(w, win);
  CHECK(a.prediction == b.prediction);
  CHECK(a.trace == b.trace);
}

TEST_CASE("local linearity: equal traces imply an affine map") {
  const RnnWeights w = random_net(4, 5, 8, make_pl_tanh(4.0, 512));
  // tiny windows keep every pre-activation inside one piece
  const std::vector<double> w1 = random_vec(5, 81, 1e-4);
  const std::vector<double> w2 = random_vec(5, 82, 1e-4);
  std::vector<double> sum(5), zero(5, 0.0);
  for (int i = 0; i < 5; ++i) sum[i] = w1[i] + w2[i];
  const auto r1 = rnn_forward(w, w1);
  const auto r2 = rnn_forward(w, w2);
  const auto rs = rnn_forward(w, sum);
  const auto r0 = rnn_forward(w, zero);
  REQUIRE(r1.trace == r2.trace);
  REQUIRE(r1.trace == rs.trace);
  REQUIRE(r1.trace == r0.trace);
  CHECK(r1.prediction + r2.prediction ==
        doctest::Approx(rs.prediction + r0.prediction).epsilon(1e-12));
}

TEST_CASE("rollout: single step, fixed point, manual chaining oracle") {
  const RnnWeights pt = passthrough_net(4);
  std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};

  const auto one = rollout(pt, x, 4, 4, 1);
  CHECK(one.size() == 1);
  CHECK(one[0] == doctest::Approx(rnn_forward(pt, std::vector<double>(x.begin(), x.begin() + 4))
                                      .prediction));

  // the pass-through net keeps predicting x_i
  const auto fp = rollout(pt, x, 4, 4, 3);
  for (double p : fp) CHECK(p == doctest::Approx(4.0));

  const RnnWeights w = random_net(3, 4, 12, make_pl_tanh(4.0, 32));
  const auto preds = rollout(w, x, 4, 4, 3);
  std::vector<double> win(x.begin(), x.begin() + 4);
  for (int j = 0; j < 3; ++j) {
    const double p = rnn_forward(w, win).prediction;
    CHECK(preds[j] == doctest::Approx(p).epsilon(1e-12));
    std::rotate(win.begin(), win.begin() + 1, win.end());
    win.back() = p;
  }

  CHECK_THROWS_AS(rollout(w, x, 3, 4, 1), RangeError);
  CHECK_THROWS_AS(rollout(w, x, 8, 4, 1), RangeError);
}

TEST_CASE("weight files round-trip exactly") {
  const RnnWeights w = random_net(5, 7, 21, make_pl_tanh(4.0, 128));
  const std::string path = "test_weights_roundtrip.json";
  save_weights(w, path);
  const RnnWeights r = load_weights(path);
  CHECK(r.d_h == w.d_h);
  CHECK(r.window_len == w.window_len);
  CHECK(r.W_h == w.W_h);
  CHECK(r.W_x == w.W_x);
  CHECK(r.W_b == w.W_b);
  CHECK(r.W_p == w.W_p);
  CHECK(r.activation.knots == w.activation.knots);
  CHECK(r.activation.slopes == w.activation.slopes);
  CHECK(r.activation.intercepts == w.activation.intercepts);
  CHECK(r.activation.uniform);
  std::remove(path.c_str());
}

TEST_CASE("weight file corruption and shape errors") {
  const RnnWeights w = random_net(3, 5, 22, make_pl_tanh(4.0, 16));
  const std::string path = "test_weights_bad.json";
  save_weights(w, path);

  {  // truncated file
    std::ifstream is(path);
    std::string all((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    std::ofstream os(path);
    os << all.substr(0, all.size() / 2);
  }
  CHECK_THROWS_AS(load_weights(path), LoadError);

  save_weights(w, path);
  {  // wrong W_h shape
    std::ifstream is(path);
    nlohmann::json j;
    is >> j;
    j["W_h"].erase(0);
    std::ofstream os(path);
    os << j.dump();
  }
  try {
    load_weights(path);
    CHECK(false);
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("W_h") != std::string::npos);
  }

  save_weights(w, path);
  {  // non-numeric entry in W_x
    std::ifstream is(path);
    nlohmann::json j;
    is >> j;
    j["W_x"][0] = nullptr;
    std::ofstream os(path);
    os << j.dump();
  }
  try {
    load_weights(path);
    CHECK(false);
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("W_x") != std::string::npos);
  }

  CHECK_THROWS_AS(load_weights("does_not_exist.json"), IoError);
  std::remove(path.c_str());
}
