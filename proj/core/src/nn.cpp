#include "cilfuse/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cilfuse/errors.hpp"

namespace cilfuse {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
  }
  return "?";
}

Activation activation_from_name(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "relu") return Activation::relu;
  throw config_error("unknown activation: " + std::string(name));
}

std::vector<double> activation_forward(Activation a,
                                       const std::vector<double>& pre) {
  std::vector<double> out(pre.size());
  switch (a) {
    case Activation::identity:
      out = pre;
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < pre.size(); ++i)
        out[i] = 1.0 / (1.0 + std::exp(-pre[i]));
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < pre.size(); ++i)
        out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
      break;
  }
  return out;
}

std::vector<double> activation_backward(Activation a,
                                        const std::vector<double>& pre,
                                        const std::vector<double>& dout) {
  std::vector<double> din(pre.size());
  switch (a) {
    case Activation::identity:
      din = dout;
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < pre.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-pre[i]));
        din[i] = dout[i] * s * (1.0 - s);
      }
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < pre.size(); ++i)
        din[i] = pre[i] > 0.0 ? dout[i] : 0.0;
      break;
  }
  return din;
}

DenseLayer::DenseLayer(int in, int out) : in_dim(in), out_dim(out) {
  if (in < 1 || out < 1)
    throw config_error("dense layer dimensions must be positive");
  weights.assign(static_cast<std::size_t>(in) * out, 0.0);
  bias.assign(static_cast<std::size_t>(out), 0.0);
  grad_weights.assign(weights.size(), 0.0);
  grad_bias.assign(bias.size(), 0.0);
}

void DenseLayer::init_glorot(Rng& rng) {
  const double r = std::sqrt(6.0 / (in_dim + out_dim));
  for (double& w : weights) w = rng.uniform(-r, r);
  std::fill(bias.begin(), bias.end(), 0.0);
}

void DenseLayer::zero_grads() {
  std::fill(grad_weights.begin(), grad_weights.end(), 0.0);
  std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
}

std::vector<double> DenseLayer::forward(const std::vector<double>& input) const {
  if (static_cast<int>(input.size()) != in_dim)
    throw numeric_error("dense forward: input width " +
                        std::to_string(input.size()) + " != " +
                        std::to_string(in_dim));
  std::vector<double> out(static_cast<std::size_t>(out_dim));
  for (int o = 0; o < out_dim; ++o) {
    const double* row = weights.data() + static_cast<std::size_t>(o) * in_dim;
    double acc = bias[static_cast<std::size_t>(o)];
    for (int i = 0; i < in_dim; ++i) acc += row[i] * input[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(o)] = acc;
  }
  return out;
}

std::vector<double> DenseLayer::backward(const std::vector<double>& input,
                                         const std::vector<double>& dout) {
  if (static_cast<int>(input.size()) != in_dim ||
      static_cast<int>(dout.size()) != out_dim)
    throw numeric_error("dense backward: mismatched widths");

  std::vector<double> din(static_cast<std::size_t>(in_dim), 0.0);
  for (int o = 0; o < out_dim; ++o) {
    const double g = dout[static_cast<std::size_t>(o)];
    const double* row = weights.data() + static_cast<std::size_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) din[static_cast<std::size_t>(i)] += row[i] * g;
  }
  if (!frozen) {
    for (int o = 0; o < out_dim; ++o) {
      const double g = dout[static_cast<std::size_t>(o)];
      double* grow = grad_weights.data() + static_cast<std::size_t>(o) * in_dim;
      for (int i = 0; i < in_dim; ++i) grow[i] += g * input[static_cast<std::size_t>(i)];
      grad_bias[static_cast<std::size_t>(o)] += g;
    }
  }
  return din;
}

void sgd_step(DenseLayer& layer, double learning_rate) {
  if (layer.frozen) return;
  for (std::size_t i = 0; i < layer.weights.size(); ++i)
    layer.weights[i] -= learning_rate * layer.grad_weights[i];
  for (std::size_t i = 0; i < layer.bias.size(); ++i)
    layer.bias[i] -= learning_rate * layer.grad_bias[i];
}

PlateauTracker::PlateauTracker(const SgdConfig& cfg)
    : cfg_(cfg),
      lr_(cfg.learning_rate),
      best_loss_(std::numeric_limits<double>::infinity()) {
  if (cfg.learning_rate <= 0.0) throw config_error("learning rate must be positive");
  if (cfg.decay_factor <= 1.0) throw config_error("decay factor must exceed 1");
  if (cfg.patience < 1) throw config_error("patience must be positive");
}

double PlateauTracker::observe(double epoch_loss) {
  if (best_loss_ - epoch_loss >= cfg_.min_improvement) {
    best_loss_ = epoch_loss;
    stall_ = 0;
  } else if (++stall_ >= cfg_.patience) {
    lr_ /= cfg_.decay_factor;
    stall_ = 0;
  }
  return lr_;
}

std::vector<double> softmax_t(const std::vector<double>& logits,
                              double temperature) {
  if (logits.empty()) throw numeric_error("softmax of an empty vector");
  if (temperature <= 0.0) throw config_error("temperature must be positive");

  const double hi = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - hi) / temperature);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

}  // namespace cilfuse
