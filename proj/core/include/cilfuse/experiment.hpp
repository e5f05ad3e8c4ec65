#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cilfuse/exemplar.hpp"
#include "cilfuse/fusion.hpp"
#include "cilfuse/trainer.hpp"

namespace cilfuse {

// One experiment run, as read from a JSON config file. Field names match the
// JSON keys one to one; unknown keys are rejected.
struct RunConfig {
  std::string data_dir;
  int num_tasks = 3;
  std::string fusion_mode = "intermediate";
  std::vector<std::string> streams = {"rgb", "color_hist"};
  int exemplars_per_class = 20;
  double alpha = 0.5;
  double temperature = 2.0;
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.1;
  double decay_factor = 1.5;
  int patience = 5;
  int proj_dim = 64;
  std::vector<int> trunk_dims = {64};
  int thumb_side = 16;
  std::string selection_policy = "random";
  std::int64_t seed = 1;
  std::string out_dir;
};

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& cfg);

struct RunOutcome {
  SequenceResult result;
  std::vector<int> class_order;  // concatenated task class ids
};

// Executes a full incremental run: loads the dataset manifest under
// data_dir, splits classes into tasks (order derived from the seed), builds
// the model per the config, trains the sequence, and writes artifacts to
// out_dir when set.
RunOutcome run_experiment(const RunConfig& cfg);

struct AblationRow {
  std::string variant;
  std::string fusion_mode;
  std::vector<std::string> streams;
  double a_bar = 0.0;
  double f_bar = 0.0;
};

// The fixed stream/fusion grid: rgb alone, then rgb+edge, rgb+color and
// rgb+edge+color each under early and intermediate fusion. Every variant
// shares the dataset, task split and seed from `base`; per-variant artifacts
// land in <out_dir>/<variant>/. Rows come back in grid order and are also
// written to <out_dir>/ablation_table.csv when out_dir is set. `threads`
// caps concurrent variants (0 = hardware default).
std::vector<AblationRow> run_ablation(const RunConfig& base, int threads = 0);

void save_ablation_table(const std::filesystem::path& path,
                         const std::vector<AblationRow>& rows);

}  // namespace cilfuse
