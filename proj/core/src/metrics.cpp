#include "cilfuse/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>

#include "cilfuse/dataset.hpp"
#include "cilfuse/errors.hpp"
#include "cilfuse/fusion.hpp"
#include "cilfuse/streams.hpp"

namespace cilfuse {

namespace {

std::string fixed6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

PhaseReport evaluate_phase(const FusionModel& model, const Dataset& data,
                           const TaskSequence& tasks, int phase_index,
                           const StreamExtractor& extractor,
                           const std::vector<PhaseReport>& history) {
  if (phase_index < 0 || phase_index >= tasks.num_tasks())
    throw config_error("phase index out of range: " +
                       std::to_string(phase_index));
  if (static_cast<int>(history.size()) != phase_index)
    throw config_error("history must hold exactly the earlier phase reports");

  PhaseReport report;
  report.phase_index = phase_index;
  for (int j = 0; j <= phase_index; ++j) {
    const Task& task = tasks.tasks[static_cast<std::size_t>(j)];
    if (task.test_samples.empty())
      throw data_error("task " + std::to_string(j) + " has no test samples");
    int correct = 0;
    for (int idx : task.test_samples) {
      const LabeledSample& s = data.samples[static_cast<std::size_t>(idx)];
      if (model.predict(extractor.extract(s.image)) == s.class_id) ++correct;
    }
    report.per_task_accuracy.push_back(
        static_cast<double>(correct) /
        static_cast<double>(task.test_samples.size()));
    report.per_task_test_count.push_back(
        static_cast<int>(task.test_samples.size()));
  }

  report.cumulative_accuracy = cumulative_accuracy(
      report.per_task_accuracy, report.per_task_test_count);

  std::vector<std::vector<double>> rows;
  rows.reserve(history.size() + 1);
  for (const PhaseReport& h : history) rows.push_back(h.per_task_accuracy);
  rows.push_back(report.per_task_accuracy);
  report.forgetting = phase_forgetting(rows);
  return report;
}

double cumulative_accuracy(const std::vector<double>& per_task_accuracy,
                           const std::vector<int>& per_task_test_count,
                           bool sample_weighted) {
  if (per_task_accuracy.empty())
    throw numeric_error("cumulative accuracy of zero tasks");
  if (!sample_weighted) {
    double total = 0.0;
    for (double a : per_task_accuracy) total += a;
    return total / static_cast<double>(per_task_accuracy.size());
  }
  if (per_task_test_count.size() != per_task_accuracy.size())
    throw numeric_error("one test count per task accuracy required");
  double correct = 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < per_task_accuracy.size(); ++j) {
    correct += per_task_accuracy[j] * per_task_test_count[j];
    total += per_task_test_count[j];
  }
  if (total <= 0.0) throw numeric_error("no test samples to weight by");
  return correct / total;
}

double phase_forgetting(const std::vector<std::vector<double>>& accuracy_rows) {
  const std::size_t t = accuracy_rows.size();
  if (t == 0) throw numeric_error("forgetting of zero phases");
  for (std::size_t k = 0; k < t; ++k)
    if (accuracy_rows[k].size() < k + 1)
      throw numeric_error("phase " + std::to_string(k) +
                          " row is missing task accuracies");
  if (t == 1) return 0.0;

  double total = 0.0;
  for (std::size_t j = 0; j + 1 < t; ++j) {
    double best = accuracy_rows[j][j];
    for (std::size_t k = j; k + 1 < t; ++k)
      best = std::max(best, accuracy_rows[k][j]);
    total += best - accuracy_rows[t - 1][j];
  }
  return total / static_cast<double>(t - 1);
}

double average_accuracy(const std::vector<PhaseReport>& reports) {
  if (reports.empty()) throw numeric_error("no phase reports to average");
  double total = 0.0;
  for (const PhaseReport& r : reports) total += r.cumulative_accuracy;
  return total / static_cast<double>(reports.size());
}

double average_forgetting(const std::vector<PhaseReport>& reports) {
  if (reports.empty()) throw numeric_error("no phase reports to average");
  double total = 0.0;
  for (const PhaseReport& r : reports) total += r.forgetting;
  return total / static_cast<double>(reports.size());
}

void write_report(const std::filesystem::path& path,
                  const std::vector<PhaseReport>& reports) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot create report: " + path.string());
  out << "phase,cumulative_accuracy,forgetting,per_task_accuracies\n";
  for (const PhaseReport& r : reports) {
    out << (r.phase_index + 1) << ',' << fixed6(r.cumulative_accuracy) << ','
        << fixed6(r.forgetting) << ',';
    for (std::size_t j = 0; j < r.per_task_accuracy.size(); ++j) {
      if (j) out << ';';
      out << fixed6(r.per_task_accuracy[j]);
    }
    out << '\n';
  }
  out << "summary," << fixed6(average_accuracy(reports)) << ','
      << fixed6(average_forgetting(reports)) << ",\n";
  if (!out) throw data_error("failed writing report: " + path.string());
}

}  // namespace cilfuse
