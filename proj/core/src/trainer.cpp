#include "cilfuse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "cilfuse/checkpoint.hpp"
#include "cilfuse/errors.hpp"
#include "cilfuse/rng.hpp"

namespace cilfuse {

namespace {

constexpr std::uint64_t kEpochTag = 0x65706f6368;  // shuffle/flip stream tag

std::string fixed6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::vector<EpochLog> train_phase(FusionModel& model, const Dataset& data,
                                  const std::vector<int>& train_indices,
                                  const StreamExtractor& extractor,
                                  const PhasePlan& plan, int phase_index) {
  if (model.num_tasks() == 0)
    throw config_error("grow the model before training");
  if (plan.epochs < 1) throw config_error("epochs must be positive");
  if (plan.batch_size < 1) throw config_error("batch_size must be positive");
  if (train_indices.empty()) throw data_error("no training samples");

  for (int idx : train_indices) {
    if (idx < 0 || idx >= static_cast<int>(data.samples.size()))
      throw data_error("training index out of range: " + std::to_string(idx));
    const LabeledSample& s = data.samples[static_cast<std::size_t>(idx)];
    if (s.split != Split::train)
      throw data_error("sample " + std::to_string(idx) +
                       " is a test sample; refusing to train on it");
    if (model.class_position(s.class_id) == -1)
      throw data_error("sample " + std::to_string(idx) + " has class " +
                       std::to_string(s.class_id) +
                       " which the model has not grown a head for");
  }

  LossConfig loss_cfg = plan.loss;
  if (!model.has_frozen()) loss_cfg.alpha = 0.0;  // first task: pure CE

  PlateauTracker tracker(plan.sgd);
  double lr = tracker.current_lr();

  std::vector<EpochLog> log;
  log.reserve(static_cast<std::size_t>(plan.epochs));
  std::vector<int> order = train_indices;

  for (int epoch = 1; epoch <= plan.epochs; ++epoch) {
    Rng rng(derive_seed(plan.seed, kEpochTag,
                        static_cast<std::uint64_t>(phase_index),
                        static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    double loss_total = 0.0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(plan.batch_size)) {
      const std::size_t end = std::min(
          order.size(), begin + static_cast<std::size_t>(plan.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - begin);

      model.zero_grads();
      for (std::size_t i = begin; i < end; ++i) {
        const LabeledSample& s =
            data.samples[static_cast<std::size_t>(order[i])];
        const bool flip = plan.flip_augment && rng.uniform() < 0.5;
        const StreamSet streams =
            extractor.extract(flip ? flip_horizontal(s.image) : s.image);

        const ForwardTrace trace = model.forward(streams);
        const std::vector<double> teacher =
            model.has_frozen() ? model.forward_frozen(streams)
                               : std::vector<double>{};
        const LossResult loss = combined(
            trace.logits, teacher, model.class_position(s.class_id), loss_cfg);
        if (!std::isfinite(loss.value))
          throw numeric_error("non-finite loss at phase " +
                              std::to_string(phase_index) + " epoch " +
                              std::to_string(epoch) + " sample " +
                              std::to_string(order[i]));
        loss_total += loss.value;

        std::vector<double> dlogits(loss.grad.size());
        for (std::size_t k = 0; k < dlogits.size(); ++k)
          dlogits[k] = loss.grad[k] * inv_batch;
        model.backward(trace, dlogits);
      }
      model.apply_sgd(lr);
    }

    const double mean_loss = loss_total / static_cast<double>(order.size());
    log.push_back({epoch, mean_loss, lr});
    lr = tracker.observe(mean_loss);
  }
  return log;
}

void save_phase_log(const std::filesystem::path& path,
                    const std::vector<EpochLog>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot create phase log: " + path.string());
  out << "epoch,mean_loss,lr\n";
  for (const EpochLog& e : log)
    out << e.epoch << ',' << fixed6(e.mean_loss) << ','
        << fixed6(e.learning_rate) << '\n';
  if (!out) throw data_error("failed writing phase log: " + path.string());
}

SequenceResult run_sequence(FusionModel& model, const Dataset& data,
                            const TaskSequence& tasks,
                            const StreamExtractor& extractor,
                            const PhasePlan& plan, ExemplarStore& store,
                            SelectionPolicy policy,
                            const std::filesystem::path& out_dir) {
  if (model.cfg.stream_dims != extractor.dims())
    throw config_error("model stream widths do not match the extractor");
  if (model.num_tasks() != 0)
    throw config_error("run_sequence expects a fresh model");

  const bool write = !out_dir.empty();
  if (write) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
      throw data_error("cannot create output directory: " + out_dir.string());
  }

  SequenceResult result;
  for (int t = 0; t < tasks.num_tasks(); ++t) {
    const Task& task = tasks.tasks[static_cast<std::size_t>(t)];
    model.grow_for_task(task.class_ids, plan.seed);

    const std::vector<int> training_set =
        build_training_set(task.train_samples, store);
    result.phase_logs.push_back(
        train_phase(model, data, training_set, extractor, plan, t));
    result.reports.push_back(
        evaluate_phase(model, data, tasks, t, extractor, result.reports));

    std::vector<std::vector<double>> features;
    features.resize(task.train_samples.size());
    if (policy == SelectionPolicy::herding) {
      for (std::size_t i = 0; i < task.train_samples.size(); ++i) {
        const LabeledSample& s = data.samples[static_cast<std::size_t>(
            task.train_samples[i])];
        features[i] = model.penultimate(extractor.extract(s.image), t);
      }
    }
    update_store(store, data, task.class_ids, task.train_samples, features,
                 policy, plan.seed);

    if (write) {
      const std::string suffix = std::to_string(t + 1);
      save_checkpoint(out_dir / ("model_" + suffix + ".ckpt"), model);
      save_phase_log(out_dir / ("phase_" + suffix + ".csv"),
                     result.phase_logs.back());
      save_exemplars_csv(out_dir / ("exemplars_" + suffix + ".csv"), store);
    }
  }

  result.a_bar = average_accuracy(result.reports);
  result.f_bar = average_forgetting(result.reports);
  if (write) write_report(out_dir / "report.csv", result.reports);
  return result;
}

}  // namespace cilfuse
