#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cilfuse/dataset.hpp"
#include "cilfuse/exemplar.hpp"
#include "cilfuse/fusion.hpp"
#include "cilfuse/losses.hpp"
#include "cilfuse/metrics.hpp"
#include "cilfuse/nn.hpp"
#include "cilfuse/streams.hpp"

namespace cilfuse {

struct PhasePlan {
  int epochs = 30;
  int batch_size = 32;
  SgdConfig sgd;
  LossConfig loss;
  bool flip_augment = true;  // 50% horizontal flip on training images
  std::uint64_t seed = 0;    // base seed; shuffles/flips derive from it
};

struct EpochLog {
  int epoch = 0;          // 1-based
  double mean_loss = 0.0;
  double learning_rate = 0.0;  // rate in effect during the epoch
};

// Trains the model's current head set on `train_indices` (new task samples
// plus replay exemplars). Distillation engages only when the model carries a
// frozen pre-growth snapshot; the first task trains on pure cross entropy.
// Gradients are batch means. Throws data_error on a test-split sample and
// numeric_error if the loss goes non-finite.
std::vector<EpochLog> train_phase(FusionModel& model, const Dataset& data,
                                  const std::vector<int>& train_indices,
                                  const StreamExtractor& extractor,
                                  const PhasePlan& plan, int phase_index);

// phase_t.csv: header `epoch,mean_loss,lr`, one row per epoch, loss and lr
// fixed six-decimal.
void save_phase_log(const std::filesystem::path& path,
                    const std::vector<EpochLog>& log);

struct SequenceResult {
  std::vector<PhaseReport> reports;
  std::vector<std::vector<EpochLog>> phase_logs;
  double a_bar = 0.0;
  double f_bar = 0.0;
};

// Full incremental run: for each task, grow the model, train on task data
// plus replay, evaluate on everything seen, and refresh the exemplar store.
// When out_dir is non-empty, writes model_t.ckpt, phase_t.csv and
// exemplars_t.csv per phase (t is 1-based) plus a final report.csv.
SequenceResult run_sequence(FusionModel& model, const Dataset& data,
                            const TaskSequence& tasks,
                            const StreamExtractor& extractor,
                            const PhasePlan& plan, ExemplarStore& store,
                            SelectionPolicy policy,
                            const std::filesystem::path& out_dir);

}  // namespace cilfuse
