#include "cilfuse/fusion.hpp"

#include <algorithm>
#include <memory>
#include <string>
#include <utility>

#include "cilfuse/errors.hpp"
#include "cilfuse/rng.hpp"

namespace cilfuse {

namespace {
constexpr std::uint64_t kGrowTag = 0x67726f77;  // layer-init stream tag
}

const char* fusion_mode_name(FusionMode m) {
  switch (m) {
    case FusionMode::single: return "single";
    case FusionMode::early: return "early";
    case FusionMode::intermediate: return "intermediate";
  }
  return "?";
}

FusionMode fusion_mode_from_name(std::string_view name) {
  if (name == "single") return FusionMode::single;
  if (name == "early") return FusionMode::early;
  if (name == "intermediate") return FusionMode::intermediate;
  throw config_error("unknown fusion mode: " + std::string(name));
}

FusionModel::FusionModel(FusionConfig config) : cfg(std::move(config)) {
  if (cfg.streams.empty()) throw config_error("at least one stream required");
  if (cfg.mode == FusionMode::single && cfg.streams.size() != 1)
    throw config_error("single fusion takes exactly one stream");
  if (cfg.stream_dims.size() != cfg.streams.size())
    throw config_error("stream_dims must match the stream list");
  for (int d : cfg.stream_dims)
    if (d < 1) throw config_error("stream widths must be positive");
  if (cfg.mode != FusionMode::single && cfg.proj_dim < 1)
    throw config_error("proj_dim must be positive");
  if (cfg.trunk_dims.empty())
    throw config_error("trunk_dims must not be empty");
  for (int d : cfg.trunk_dims)
    if (d < 1) throw config_error("trunk widths must be positive");
}

int FusionModel::total_classes() const {
  int total = 0;
  for (const auto& ids : task_classes) total += static_cast<int>(ids.size());
  return total;
}

int FusionModel::class_position(int class_id) const {
  int pos = 0;
  for (const auto& ids : task_classes)
    for (int id : ids) {
      if (id == class_id) return pos;
      ++pos;
    }
  return -1;
}

int FusionModel::class_at(int position) const {
  int pos = 0;
  for (const auto& ids : task_classes)
    for (int id : ids) {
      if (pos == position) return id;
      ++pos;
    }
  throw numeric_error("logit position out of range: " +
                      std::to_string(position));
}

int FusionModel::path_for_task(int task) const {
  return cfg.mode == FusionMode::intermediate ? task : 0;
}

void FusionModel::grow_for_task(const std::vector<int>& class_ids,
                                std::uint64_t seed) {
  if (class_ids.empty()) throw config_error("task has no classes");
  for (int id : class_ids)
    if (class_position(id) != -1)
      throw config_error("class " + std::to_string(id) +
                         " already belongs to an earlier task");

  if (!heads.empty()) {
    auto snap = std::make_shared<FusionModel>(*this);
    snap->frozen_.reset();  // the teacher never needs its own teacher
    frozen_ = std::move(snap);
  }

  const int task = num_tasks();
  Rng rng(derive_seed(seed, kGrowTag, static_cast<std::uint64_t>(task)));

  const int trunk_in = cfg.mode == FusionMode::single
                           ? cfg.stream_dims[0]
                           : static_cast<int>(cfg.streams.size()) * cfg.proj_dim;
  if (task == 0) {
    if (cfg.mode == FusionMode::early) {
      for (int d : cfg.stream_dims) {
        shared_proj.emplace_back(d, cfg.proj_dim);
        shared_proj.back().init_glorot(rng);
      }
    }
    int in = trunk_in;
    for (int d : cfg.trunk_dims) {
      trunk.emplace_back(in, d);
      trunk.back().init_glorot(rng);
      in = d;
    }
  }

  if (cfg.mode == FusionMode::intermediate) {
    std::vector<DenseLayer> proj;
    for (int d : cfg.stream_dims) {
      proj.emplace_back(d, cfg.proj_dim);
      proj.back().init_glorot(rng);
    }
    task_proj.push_back(std::move(proj));
  }

  heads.emplace_back(cfg.trunk_dims.back(), static_cast<int>(class_ids.size()));
  heads.back().init_glorot(rng);
  task_classes.push_back(class_ids);

  if (cfg.freeze_old_heads) {
    for (int t = 0; t < task; ++t) {
      heads[static_cast<std::size_t>(t)].frozen = true;
      if (cfg.mode == FusionMode::intermediate)
        for (DenseLayer& layer : task_proj[static_cast<std::size_t>(t)])
          layer.frozen = true;
    }
  }
}

void FusionModel::run_path(const StreamSet& streams, int path,
                           PathTrace& out) const {
  if (cfg.mode == FusionMode::single) {
    out.fused = streams[0];
  } else {
    const std::vector<DenseLayer>& proj =
        cfg.mode == FusionMode::early
            ? shared_proj
            : task_proj[static_cast<std::size_t>(path)];
    out.proj.resize(proj.size());
    out.fused.clear();
    out.fused.reserve(proj.size() * static_cast<std::size_t>(cfg.proj_dim));
    for (std::size_t s = 0; s < proj.size(); ++s) {
      LayerTrace& tr = out.proj[s];
      tr.input = streams[s];
      tr.pre = proj[s].forward(tr.input);
      tr.out = activation_forward(cfg.activation, tr.pre);
      out.fused.insert(out.fused.end(), tr.out.begin(), tr.out.end());
    }
  }

  out.trunk.resize(trunk.size());
  const std::vector<double>* cur = &out.fused;
  for (std::size_t i = 0; i < trunk.size(); ++i) {
    LayerTrace& tr = out.trunk[i];
    tr.input = *cur;
    tr.pre = trunk[i].forward(tr.input);
    tr.out = activation_forward(cfg.activation, tr.pre);
    cur = &tr.out;
  }
}

ForwardTrace FusionModel::forward(const StreamSet& streams,
                                  int heads_up_to) const {
  if (heads.empty()) throw numeric_error("forward before any task was added");
  const int scope = heads_up_to < 0 ? num_tasks() : heads_up_to;
  if (scope < 1 || scope > num_tasks())
    throw numeric_error("head scope " + std::to_string(heads_up_to) +
                        " exceeds the " + std::to_string(num_tasks()) +
                        " available heads");
  if (streams.size() != cfg.streams.size())
    throw numeric_error("expected " + std::to_string(cfg.streams.size()) +
                        " streams, got " + std::to_string(streams.size()));
  for (std::size_t s = 0; s < streams.size(); ++s)
    if (static_cast<int>(streams[s].size()) != cfg.stream_dims[s])
      throw numeric_error("stream " + std::to_string(s) + " width " +
                          std::to_string(streams[s].size()) + " != " +
                          std::to_string(cfg.stream_dims[s]));

  ForwardTrace trace;
  const int num_paths = cfg.mode == FusionMode::intermediate ? scope : 1;
  trace.paths.resize(static_cast<std::size_t>(num_paths));
  for (int p = 0; p < num_paths; ++p)
    run_path(streams, p, trace.paths[static_cast<std::size_t>(p)]);

  trace.head_logits.resize(static_cast<std::size_t>(scope));
  for (int k = 0; k < scope; ++k) {
    const PathTrace& path =
        trace.paths[static_cast<std::size_t>(path_for_task(k))];
    trace.head_logits[static_cast<std::size_t>(k)] =
        heads[static_cast<std::size_t>(k)].forward(path.trunk.back().out);
    trace.logits.insert(trace.logits.end(),
                        trace.head_logits[static_cast<std::size_t>(k)].begin(),
                        trace.head_logits[static_cast<std::size_t>(k)].end());
  }
  return trace;
}

std::vector<double> FusionModel::forward_frozen(const StreamSet& streams) const {
  if (!frozen_) throw numeric_error("no frozen snapshot to distill from");
  return frozen_->forward(streams).logits;
}

std::vector<double> FusionModel::penultimate(const StreamSet& streams,
                                             int task) const {
  if (task < 0 || task >= num_tasks())
    throw numeric_error("penultimate for unknown task " + std::to_string(task));
  PathTrace path;
  run_path(streams, path_for_task(task), path);
  return path.trunk.back().out;
}

int FusionModel::predict(const StreamSet& streams) const {
  const ForwardTrace trace = forward(streams);
  int best = 0;
  for (std::size_t i = 1; i < trace.logits.size(); ++i)
    if (trace.logits[i] > trace.logits[static_cast<std::size_t>(best)])
      best = static_cast<int>(i);
  return class_at(best);
}

void FusionModel::backward(const ForwardTrace& trace,
                           const std::vector<double>& dlogits) {
  if (static_cast<int>(dlogits.size()) != total_classes())
    throw numeric_error("gradient width " + std::to_string(dlogits.size()) +
                        " != " + std::to_string(total_classes()) + " classes");
  if (trace.head_logits.size() != heads.size())
    throw numeric_error("backward needs a full-scope forward trace");

  // Head gradients, accumulating each pathway's trunk-output gradient.
  std::vector<std::vector<double>> dpath(trace.paths.size());
  for (auto& d : dpath)
    d.assign(static_cast<std::size_t>(cfg.trunk_dims.back()), 0.0);

  std::size_t offset = 0;
  for (int k = 0; k < num_tasks(); ++k) {
    DenseLayer& head = heads[static_cast<std::size_t>(k)];
    const std::vector<double> dhead(
        dlogits.begin() + static_cast<std::ptrdiff_t>(offset),
        dlogits.begin() + static_cast<std::ptrdiff_t>(offset + head.out_dim));
    offset += static_cast<std::size_t>(head.out_dim);

    const std::size_t p = static_cast<std::size_t>(path_for_task(k));
    const std::vector<double> din =
        head.backward(trace.paths[p].trunk.back().out, dhead);
    for (std::size_t i = 0; i < din.size(); ++i) dpath[p][i] += din[i];
  }

  for (std::size_t p = 0; p < trace.paths.size(); ++p) {
    const PathTrace& path = trace.paths[p];
    std::vector<double> d = dpath[p];
    for (std::size_t i = trunk.size(); i-- > 0;) {
      const std::vector<double> dpre =
          activation_backward(cfg.activation, path.trunk[i].pre, d);
      d = trunk[i].backward(path.trunk[i].input, dpre);
    }

    if (cfg.mode == FusionMode::single) continue;
    std::vector<DenseLayer>& proj =
        cfg.mode == FusionMode::early ? shared_proj : task_proj[p];
    std::size_t at = 0;
    for (std::size_t s = 0; s < proj.size(); ++s) {
      const std::vector<double> dout(
          d.begin() + static_cast<std::ptrdiff_t>(at),
          d.begin() + static_cast<std::ptrdiff_t>(at + cfg.proj_dim));
      at += static_cast<std::size_t>(cfg.proj_dim);
      const std::vector<double> dpre =
          activation_backward(cfg.activation, path.proj[s].pre, dout);
      proj[s].backward(path.proj[s].input, dpre);
    }
  }
}

void FusionModel::zero_grads() {
  for (DenseLayer* layer : layers()) layer->zero_grads();
}

void FusionModel::apply_sgd(double learning_rate) {
  for (DenseLayer* layer : layers()) sgd_step(*layer, learning_rate);
}

std::size_t FusionModel::param_count() const {
  std::size_t total = 0;
  for (const DenseLayer* layer : layers()) total += layer->param_count();
  return total;
}

std::vector<const DenseLayer*> FusionModel::layers() const {
  std::vector<const DenseLayer*> out;
  for (const DenseLayer& l : trunk) out.push_back(&l);
  for (const DenseLayer& l : shared_proj) out.push_back(&l);
  for (const auto& group : task_proj)
    for (const DenseLayer& l : group) out.push_back(&l);
  for (const DenseLayer& l : heads) out.push_back(&l);
  return out;
}

std::vector<DenseLayer*> FusionModel::layers() {
  std::vector<DenseLayer*> out;
  for (DenseLayer& l : trunk) out.push_back(&l);
  for (DenseLayer& l : shared_proj) out.push_back(&l);
  for (auto& group : task_proj)
    for (DenseLayer& l : group) out.push_back(&l);
  for (DenseLayer& l : heads) out.push_back(&l);
  return out;
}

}  // namespace cilfuse
