#pragma once

#include <vector>

namespace cilfuse {

struct LossConfig {
  double alpha = 0.5;        // weight on the distillation term
  double temperature = 2.0;  // softening temperature for distillation
};

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;  // dL/dlogits, same length as the logits input
};

// Multi-class cross entropy on raw logits: -log softmax(logits)[label].
// Gradient is softmax(logits) - onehot(label).
LossResult cross_entropy(const std::vector<double>& logits, int label);

// Distillation against a frozen teacher: both logit vectors cover the same
// (old) classes, both are softened with temperature T, and the teacher
// distribution is treated as a constant. Value is the soft cross entropy
// sum_k -p_teacher[k] * log p_student[k]; gradient w.r.t. the student logits
// is (p_student - p_teacher) / T with no T^2 rescale.
LossResult distillation(const std::vector<double>& student_logits,
                        const std::vector<double>& teacher_logits,
                        double temperature);

// Combined objective alpha * distill + (1 - alpha) * cross_entropy. The
// distillation term reads only the first old_width logits (the classes the
// teacher knows); its gradient contribution is zero beyond that prefix.
// old_width == 0 (first task) degenerates to pure cross entropy.
LossResult combined(const std::vector<double>& logits,
                    const std::vector<double>& teacher_logits, int label,
                    const LossConfig& cfg);

}  // namespace cilfuse
