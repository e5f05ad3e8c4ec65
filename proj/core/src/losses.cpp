#include "cilfuse/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cilfuse/errors.hpp"
#include "cilfuse/nn.hpp"

namespace cilfuse {

LossResult cross_entropy(const std::vector<double>& logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.size()))
    throw numeric_error("cross entropy label " + std::to_string(label) +
                        " outside " + std::to_string(logits.size()) +
                        " logits");

  LossResult res;
  res.grad = softmax_t(logits, 1.0);
  const double p = res.grad[static_cast<std::size_t>(label)];
  // log of a max-shifted softmax entry never sees exp underflow to zero at
  // the max position, but guard the label position anyway.
  res.value = -std::log(std::max(p, 1e-300));
  res.grad[static_cast<std::size_t>(label)] -= 1.0;
  return res;
}

LossResult distillation(const std::vector<double>& student_logits,
                        const std::vector<double>& teacher_logits,
                        double temperature) {
  if (student_logits.size() != teacher_logits.size())
    throw numeric_error("distillation widths differ: " +
                        std::to_string(student_logits.size()) + " vs " +
                        std::to_string(teacher_logits.size()));

  const std::vector<double> p = softmax_t(student_logits, temperature);
  const std::vector<double> q = softmax_t(teacher_logits, temperature);

  LossResult res;
  res.grad.resize(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    res.value -= q[k] * std::log(std::max(p[k], 1e-300));
    res.grad[k] = (p[k] - q[k]) / temperature;
  }
  return res;
}

LossResult combined(const std::vector<double>& logits,
                    const std::vector<double>& teacher_logits, int label,
                    const LossConfig& cfg) {
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0)
    throw config_error("alpha must lie in [0, 1]");
  const std::size_t old_width = teacher_logits.size();
  if (old_width > logits.size())
    throw numeric_error("teacher wider than student");

  const LossResult ce = cross_entropy(logits, label);
  if (old_width == 0 || cfg.alpha == 0.0) {
    LossResult res;
    res.value = (1.0 - cfg.alpha) * ce.value;
    res.grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
      res.grad[i] = (1.0 - cfg.alpha) * ce.grad[i];
    return res;
  }

  const std::vector<double> old_logits(logits.begin(),
                                       logits.begin() + old_width);
  const LossResult kd = distillation(old_logits, teacher_logits,
                                     cfg.temperature);

  LossResult res;
  res.value = cfg.alpha * kd.value + (1.0 - cfg.alpha) * ce.value;
  res.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
    res.grad[i] = (1.0 - cfg.alpha) * ce.grad[i];
  for (std::size_t i = 0; i < old_width; ++i)
    res.grad[i] += cfg.alpha * kd.grad[i];
  return res;
}

}  // namespace cilfuse
