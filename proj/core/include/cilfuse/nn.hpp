#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "cilfuse/rng.hpp"

namespace cilfuse {

enum class Activation : std::uint32_t { identity = 0, sigmoid = 1, relu = 2 };

const char* activation_name(Activation a);
Activation activation_from_name(std::string_view name);

std::vector<double> activation_forward(Activation a,
                                       const std::vector<double>& pre);
// dL/dpre given dL/dout and the forward pre-activations.
std::vector<double> activation_backward(Activation a,
                                        const std::vector<double>& pre,
                                        const std::vector<double>& dout);

// Fully connected layer, weights row-major [out][in]. All training math is
// double precision.
struct DenseLayer {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<double> weights;  // out_dim * in_dim
  std::vector<double> bias;     // out_dim
  std::vector<double> grad_weights;
  std::vector<double> grad_bias;
  bool frozen = false;  // skip gradient accumulation + updates when set

  DenseLayer() = default;
  DenseLayer(int in, int out);

  // Glorot uniform: U(-r, r), r = sqrt(6 / (in + out)); bias zero.
  void init_glorot(Rng& rng);
  void zero_grads();

  std::vector<double> forward(const std::vector<double>& input) const;
  // Accumulates grads (unless frozen) and returns dL/dinput = W^T * dout.
  std::vector<double> backward(const std::vector<double>& input,
                               const std::vector<double>& dout);

  std::size_t param_count() const {
    return weights.size() + bias.size();
  }
};

struct SgdConfig {
  double learning_rate = 0.1;
  double decay_factor = 1.5;  // lr /= decay_factor on plateau
  int patience = 5;           // epochs without improvement before decay
  double min_improvement = 1e-8;
};

// Applies one SGD step in place: p -= lr * grad. No-op for frozen layers.
void sgd_step(DenseLayer& layer, double learning_rate);

// Plateau learning-rate schedule: divide lr by decay_factor after `patience`
// consecutive epochs whose loss fails to improve the best seen by at least
// min_improvement. The stall counter resets on improvement and on decay.
struct PlateauTracker {
  explicit PlateauTracker(const SgdConfig& cfg);

  // Feed the epoch's mean loss; returns the learning rate for the next epoch.
  double observe(double epoch_loss);
  double current_lr() const { return lr_; }

 private:
  SgdConfig cfg_;
  double lr_;
  double best_loss_;
  int stall_ = 0;
};

// Temperature softmax over `logits`; T = 1 recovers the plain softmax.
// Max-shifted for numerical stability.
std::vector<double> softmax_t(const std::vector<double>& logits,
                              double temperature);

}  // namespace cilfuse
