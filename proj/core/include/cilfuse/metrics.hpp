#pragma once

#include <filesystem>
#include <vector>

namespace cilfuse {

class FusionModel;
struct Dataset;
struct TaskSequence;
struct StreamExtractor;

// Evaluation after finishing phase `phase_index` (0-based). Accuracies are
// task-agnostic: a prediction counts as correct only if the argmax over all
// heads' concatenated logits hits the true class.
struct PhaseReport {
  int phase_index = 0;
  std::vector<double> per_task_accuracy;  // a_{t,j} for j = 0..phase_index
  std::vector<int> per_task_test_count;
  double cumulative_accuracy = 0.0;  // A_t
  double forgetting = 0.0;           // F_t (0 for the first phase)
};

// Scores the model on the test sets of every task seen so far and fills in
// A_t and F_t. `history` holds the reports of earlier phases (needed for the
// forgetting max); pass the empty vector for the first phase.
PhaseReport evaluate_phase(const FusionModel& model, const Dataset& data,
                           const TaskSequence& tasks, int phase_index,
                           const StreamExtractor& extractor,
                           const std::vector<PhaseReport>& history);

// A_t over per-task accuracies: sample-weighted by default (total correct /
// total test samples); task-averaged when sample_weighted is false.
double cumulative_accuracy(const std::vector<double>& per_task_accuracy,
                           const std::vector<int>& per_task_test_count,
                           bool sample_weighted = true);

// F_t = mean over tasks j < t of (best accuracy a_{k,j} for j <= k < t minus
// the current a_{t,j}). Zero when only one phase exists.
double phase_forgetting(const std::vector<std::vector<double>>& accuracy_rows);

// Means of A_t / F_t across all phases.
double average_accuracy(const std::vector<PhaseReport>& reports);
double average_forgetting(const std::vector<PhaseReport>& reports);

// report.csv: header `phase,cumulative_accuracy,forgetting,per_task_accuracies`
// with one row per phase (per-task accuracies semicolon-joined), then a
// `summary,<A-bar>,<F-bar>,` row. Values use fixed six-decimal formatting.
void write_report(const std::filesystem::path& path,
                  const std::vector<PhaseReport>& reports);

}  // namespace cilfuse
