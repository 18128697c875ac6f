#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cpsi/activation.hpp"

namespace cpsi {

// Weights of the single-layer recurrent predictor
//   h_0 = 0,  h_t = f(W_h h_{t-1} + W_x x_t + W_b),  prediction = W_p h_l.
// Immutable after construction; safe to share across threads.
struct RnnWeights {
  int d_h = 0;
  int window_len = 0;  // l the net was trained for
  std::vector<double> W_h;  // d_h x d_h, row-major
  std::vector<double> W_x;  // d_h
  std::vector<double> W_b;  // d_h
  std::vector<double> W_p;  // 1 x d_h
  PiecewiseLinearActivation activation;

  void validate() const;  // shapes, finiteness
};

// Active piece index of every pre-activation, step-major: trace[t * d_h + j].
using ActivationTrace = std::vector<std::uint16_t>;

struct ForwardResult {
  double prediction = 0.0;
  ActivationTrace trace;
};

ForwardResult rnn_forward(const RnnWeights& w, std::span<const double> window);

// Long-term prediction at 1-based position pos (window x_{pos-l+1..pos}):
// observed values shift out as predictions shift in, m steps. Requires
// l <= pos <= n - m.
std::vector<double> rollout(const RnnWeights& w, std::span<const double> x, int pos, int l, int m);

// Self-describing JSON weight file; exact binary round-trip of every entry.
void save_weights(const RnnWeights& w, const std::string& path);
RnnWeights load_weights(const std::string& path);

}  // namespace cpsi
