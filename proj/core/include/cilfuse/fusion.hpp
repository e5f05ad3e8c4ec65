#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "cilfuse/nn.hpp"
#include "cilfuse/streams.hpp"

namespace cilfuse {

enum class FusionMode : std::uint32_t { single = 0, early = 1, intermediate = 2 };

const char* fusion_mode_name(FusionMode m);
FusionMode fusion_mode_from_name(std::string_view name);

struct FusionConfig {
  FusionMode mode = FusionMode::intermediate;
  std::vector<StreamId> streams;  // single mode requires exactly one
  std::vector<int> stream_dims;   // input width per stream, same order
  int proj_dim = 64;              // per-stream projection width
  std::vector<int> trunk_dims = {64};
  Activation activation = Activation::sigmoid;
  bool freeze_old_heads = false;  // stop gradients into pre-existing heads
                                  // and their per-task projections
};

struct LayerTrace {
  std::vector<double> input;
  std::vector<double> pre;  // affine output before activation
  std::vector<double> out;
};

// One projection->trunk pathway. Early/single fusion has a single shared
// pathway; intermediate fusion has one per task.
struct PathTrace {
  std::vector<LayerTrace> proj;  // one per stream (empty in single mode)
  std::vector<double> fused;     // concatenated pathway input to the trunk
  std::vector<LayerTrace> trunk;
};

struct ForwardTrace {
  std::vector<PathTrace> paths;
  std::vector<std::vector<double>> head_logits;  // per task head
  std::vector<double> logits;                    // concatenated, class order
};

// Multi-stream incremental classifier. Streams pass through projection
// layers (shared in early fusion, one fresh set per task in intermediate
// fusion), are concatenated, and feed a shared trunk; each task contributes
// a classification head over its own classes. Logits concatenate across
// heads in task order, which defines the flat class layout.
class FusionModel {
 public:
  FusionConfig cfg;
  std::vector<DenseLayer> shared_proj;               // early: one per stream
  std::vector<std::vector<DenseLayer>> task_proj;    // intermediate: [task][stream]
  std::vector<DenseLayer> trunk;
  std::vector<DenseLayer> heads;                     // one per task
  std::vector<std::vector<int>> task_classes;        // class ids per task

  explicit FusionModel(FusionConfig config);

  // Appends a head for `class_ids` (plus fresh projections in intermediate
  // mode), snapshotting the pre-growth model as the distillation teacher
  // when at least one task already exists. With freeze_old_heads set, the
  // pre-existing heads and per-task projections stop receiving gradients.
  void grow_for_task(const std::vector<int>& class_ids, std::uint64_t seed);

  int num_tasks() const { return static_cast<int>(heads.size()); }
  int total_classes() const;
  // Flat logit position of a class id, or -1 if the model has not seen it.
  int class_position(int class_id) const;
  // Class id at a flat logit position.
  int class_at(int position) const;

  // Runs the first `heads_up_to` heads (and, in intermediate mode, only the
  // pathways they use); -1 runs every head. Scoped logits keep the flat
  // class layout of the first `heads_up_to` tasks, so heads_up_to(t-1)
  // reproduces the logit layout the pre-growth model emits.
  ForwardTrace forward(const StreamSet& streams, int heads_up_to = -1) const;
  // Runs the frozen pre-growth snapshot (the teacher). Requires a snapshot.
  std::vector<double> forward_frozen(const StreamSet& streams) const;
  bool has_frozen() const { return frozen_ != nullptr; }
  // The frozen pre-growth snapshot, or null before the second task.
  const FusionModel* frozen() const { return frozen_.get(); }

  // Trunk output on the pathway belonging to `task` (the shared pathway in
  // early/single mode) — the representation used for herding.
  std::vector<double> penultimate(const StreamSet& streams, int task) const;

  // Task-agnostic prediction: class id with the largest flat logit.
  int predict(const StreamSet& streams) const;

  // Propagates dL/dlogits, accumulating grads in every unfrozen layer.
  void backward(const ForwardTrace& trace, const std::vector<double>& dlogits);

  void zero_grads();
  void apply_sgd(double learning_rate);
  std::size_t param_count() const;

  // Every layer in a stable order (trunk, shared projections, per-task
  // projections, heads) for checkpointing and parameter sweeps.
  std::vector<const DenseLayer*> layers() const;
  std::vector<DenseLayer*> layers();

 private:
  std::shared_ptr<const FusionModel> frozen_;

  int path_for_task(int task) const;
  void run_path(const StreamSet& streams, int path, PathTrace& out) const;
};

}  // namespace cilfuse
