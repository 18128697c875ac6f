#pragma once

#include <cstdint>
#include <vector>

#include "cpsi/rnn.hpp"

namespace cpsi {

struct TrainConfig {
  int d_h = 8;
  int window_len = 10;
  int epochs = 200;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
  double init_scale = 0.2;  // uniform(-s, s) initial weights
  double pl_half_range = 4.0;
  int pl_segments = 512;
};

struct TrainResult {
  RnnWeights weights;
  std::vector<double> epoch_loss;  // loss before each epoch's update
};

// Full-batch gradient descent with backpropagation through time on the mean
// one-step-ahead squared error over every window of every sequence.
// Deterministic given the seed; returns the best checkpoint seen. A
// non-finite loss raises TrainingFailure suggesting a smaller learning rate.
TrainResult train_bptt(const std::vector<std::vector<double>>& dataset, const TrainConfig& cfg);

struct LossGradients {
  double loss = 0.0;
  std::vector<double> W_h, W_x, W_b, W_p;
};

// Mean one-step-ahead loss over the dataset and its gradient at w.
LossGradients training_loss_gradient(const RnnWeights& w,
                                     const std::vector<std::vector<double>>& dataset);

}  // namespace cpsi
