#include "cpsi/train.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "cpsi/errors.hpp"
#include "cpsi/kernels.hpp"

namespace cpsi {

namespace {

struct Gradients {
  std::vector<double> W_h, W_x, W_b, W_p;
  explicit Gradients(int d) : W_h(d * d, 0.0), W_x(d, 0.0), W_b(d, 0.0), W_p(d, 0.0) {}
  void zero() {
    std::fill(W_h.begin(), W_h.end(), 0.0);
    std::fill(W_x.begin(), W_x.end(), 0.0);
    std::fill(W_b.begin(), W_b.end(), 0.0);
    std::fill(W_p.begin(), W_p.end(), 0.0);
  }
};

// One window's forward pass (storing states) plus backprop; returns the
// squared error and accumulates d(err)/d(weights) into g.
double window_pass(const RnnWeights& w, const double* win, int l, double target, Gradients& g,
                   std::vector<double>& hs, std::vector<double>& slope_buf,
                   std::vector<double>& du, std::vector<double>& dh) {
  const int d = w.d_h;
  // hs holds h_0 .. h_l contiguously; h_0 = 0.
  std::fill(hs.begin(), hs.begin() + d, 0.0);
  for (int t = 0; t < l; ++t) {
    double* h_prev = hs.data() + t * d;
    double* h_cur = hs.data() + (t + 1) * d;
    kernels::preact(w.W_h.data(), d, h_prev, w.W_x.data(), win[t], w.W_b.data(), h_cur);
    for (int j = 0; j < d; ++j) {
      const int p = w.activation.piece_index(h_cur[j]);
      slope_buf[t * d + j] = w.activation.slopes[p];
      h_cur[j] = w.activation.eval_piece(h_cur[j], p);
    }
  }
  const double* h_last = hs.data() + l * d;
  const double pred = kernels::dot(w.W_p.data(), h_last, d);
  const double err = pred - target;

  const double dpred = 2.0 * err;
  for (int j = 0; j < d; ++j) {
    g.W_p[j] += dpred * h_last[j];
    dh[j] = w.W_p[j] * dpred;
  }
  for (int t = l - 1; t >= 0; --t) {
    const double* h_prev = hs.data() + t * d;
    for (int j = 0; j < d; ++j) du[j] = dh[j] * slope_buf[t * d + j];
    for (int j = 0; j < d; ++j) {
      g.W_b[j] += du[j];
      g.W_x[j] += du[j] * win[t];
      double* grow = g.W_h.data() + j * d;
      for (int c = 0; c < d; ++c) grow[c] += du[j] * h_prev[c];
    }
    // dh_prev = W_h^T du
    for (int c = 0; c < d; ++c) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += w.W_h[j * d + c] * du[j];
      dh[c] = s;
    }
  }
  return err * err;
}

}  // namespace

LossGradients training_loss_gradient(const RnnWeights& w,
                                     const std::vector<std::vector<double>>& dataset) {
  const int l = w.window_len;
  const int d = w.d_h;
  long n_windows = 0;
  for (const auto& seq : dataset) {
    if (static_cast<int>(seq.size()) <= l)
      throw InvalidInput("training_loss_gradient: sequence shorter than window_len + 1");
    n_windows += static_cast<long>(seq.size()) - l;
  }
  Gradients g(d);
  std::vector<double> hs((l + 1) * d), slope_buf(l * d), du(d), dh(d);
  double loss = 0.0;
  for (const auto& seq : dataset) {
    const int len = static_cast<int>(seq.size());
    for (int end = l - 1; end + 1 < len; ++end)
      loss += window_pass(w, seq.data() + (end - l + 1), l, seq[end + 1], g, hs, slope_buf, du,
                          dh);
  }
  const double inv_n = 1.0 / static_cast<double>(n_windows);
  LossGradients out;
  out.loss = loss * inv_n;
  out.W_h = std::move(g.W_h);
  out.W_x = std::move(g.W_x);
  out.W_b = std::move(g.W_b);
  out.W_p = std::move(g.W_p);
  for (double& v : out.W_h) v *= inv_n;
  for (double& v : out.W_x) v *= inv_n;
  for (double& v : out.W_b) v *= inv_n;
  for (double& v : out.W_p) v *= inv_n;
  return out;
}

TrainResult train_bptt(const std::vector<std::vector<double>>& dataset, const TrainConfig& cfg) {
  if (dataset.empty()) throw InvalidInput("train_bptt: empty dataset");
  const int l = cfg.window_len;
  long n_windows = 0;
  for (const auto& seq : dataset) {
    if (static_cast<int>(seq.size()) <= l)
      throw InvalidInput("train_bptt: sequence shorter than window_len + 1");
    n_windows += static_cast<long>(seq.size()) - l;
  }

  RnnWeights w;
  w.d_h = cfg.d_h;
  w.window_len = l;
  w.activation = make_pl_tanh(cfg.pl_half_range, cfg.pl_segments);
  const int d = cfg.d_h;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> init(-cfg.init_scale, cfg.init_scale);
  w.W_h.resize(d * d);
  w.W_x.resize(d);
  w.W_b.resize(d);
  w.W_p.resize(d);
  for (double& v : w.W_h) v = init(rng);
  for (double& v : w.W_x) v = init(rng);
  for (double& v : w.W_b) v = init(rng);
  for (double& v : w.W_p) v = init(rng);

  Gradients g(d);
  std::vector<double> hs((l + 1) * d), slope_buf(l * d), du(d), dh(d);

  TrainResult result;
  RnnWeights best = w;
  double best_loss = std::numeric_limits<double>::infinity();
  const double inv_n = 1.0 / static_cast<double>(n_windows);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    g.zero();
    double loss = 0.0;
    for (const auto& seq : dataset) {
      const int len = static_cast<int>(seq.size());
      for (int end = l - 1; end + 1 < len; ++end) {
        loss += window_pass(w, seq.data() + (end - l + 1), l, seq[end + 1], g, hs, slope_buf, du,
                            dh);
      }
    }
    loss *= inv_n;
    if (!std::isfinite(loss))
      throw TrainingFailure("train_bptt: loss diverged; try a smaller learning rate");
    result.epoch_loss.push_back(loss);
    // The returned weights are always the best checkpoint seen.
    if (loss < best_loss) {
      best_loss = loss;
      best = w;
    }
    const double step = cfg.learning_rate * inv_n;
    for (std::size_t i = 0; i < w.W_h.size(); ++i) w.W_h[i] -= step * g.W_h[i];
    for (int i = 0; i < d; ++i) w.W_x[i] -= step * g.W_x[i];
    for (int i = 0; i < d; ++i) w.W_b[i] -= step * g.W_b[i];
    for (int i = 0; i < d; ++i) w.W_p[i] -= step * g.W_p[i];
  }

  result.weights = std::move(best);
  result.weights.validate();
  return result;
}

}  // namespace cpsi
