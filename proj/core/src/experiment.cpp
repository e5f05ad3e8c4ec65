#include "cilfuse/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <string>
#include <thread>
#include <utility>

#include <json.hpp>

#include "cilfuse/dataset.hpp"
#include "cilfuse/errors.hpp"
#include "cilfuse/metrics.hpp"
#include "cilfuse/rng.hpp"

namespace cilfuse {

namespace {

constexpr std::uint64_t kOrderTag = 0x6f72646572;  // class-order stream tag

std::string fixed6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void validate(const RunConfig& cfg) {
  fusion_mode_from_name(cfg.fusion_mode);
  selection_policy_from_name(cfg.selection_policy);
  if (cfg.streams.empty()) throw config_error("streams must not be empty");
  std::set<std::string> seen;
  for (const std::string& s : cfg.streams) {
    stream_from_name(s);
    if (!seen.insert(s).second)
      throw config_error("duplicate stream: " + s);
  }
  if (cfg.num_tasks < 1) throw config_error("num_tasks must be positive");
  if (cfg.exemplars_per_class < 0)
    throw config_error("exemplars_per_class must be nonnegative");
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0)
    throw config_error("alpha must lie in [0, 1]");
  if (cfg.temperature <= 0.0)
    throw config_error("temperature must be positive");
  if (cfg.epochs < 1) throw config_error("epochs must be positive");
  if (cfg.batch_size < 1) throw config_error("batch_size must be positive");
  if (cfg.learning_rate <= 0.0)
    throw config_error("learning_rate must be positive");
  if (cfg.decay_factor <= 1.0)
    throw config_error("decay_factor must exceed 1");
  if (cfg.patience < 1) throw config_error("patience must be positive");
  if (cfg.proj_dim < 1) throw config_error("proj_dim must be positive");
  if (cfg.trunk_dims.empty())
    throw config_error("trunk_dims must not be empty");
  for (int d : cfg.trunk_dims)
    if (d < 1) throw config_error("trunk widths must be positive");
  if (cfg.thumb_side < 1) throw config_error("thumb_side must be positive");
  if (cfg.seed < 0) throw config_error("seed must be nonnegative");
}

// Shared by run_experiment and the ablation grid so every variant reuses one
// loaded dataset and the identical task split.
RunOutcome run_on(const RunConfig& cfg, const Dataset& data) {
  validate(cfg);

  StreamExtractor extractor;
  for (const std::string& s : cfg.streams)
    extractor.streams.push_back(stream_from_name(s));
  extractor.thumb_side = cfg.thumb_side;

  const std::int64_t order_seed = static_cast<std::int64_t>(
      derive_seed(static_cast<std::uint64_t>(cfg.seed), kOrderTag) >> 1);
  const TaskSequence tasks = split_tasks(data, cfg.num_tasks, order_seed);

  FusionConfig model_cfg;
  model_cfg.mode = fusion_mode_from_name(cfg.fusion_mode);
  model_cfg.streams = extractor.streams;
  model_cfg.stream_dims = extractor.dims();
  model_cfg.proj_dim = cfg.proj_dim;
  model_cfg.trunk_dims = cfg.trunk_dims;
  FusionModel model(model_cfg);

  PhasePlan plan;
  plan.epochs = cfg.epochs;
  plan.batch_size = cfg.batch_size;
  plan.sgd.learning_rate = cfg.learning_rate;
  plan.sgd.decay_factor = cfg.decay_factor;
  plan.sgd.patience = cfg.patience;
  plan.loss.alpha = cfg.alpha;
  plan.loss.temperature = cfg.temperature;
  plan.seed = static_cast<std::uint64_t>(cfg.seed);

  ExemplarStore store;
  store.per_class = cfg.exemplars_per_class;

  const std::filesystem::path out_dir = cfg.out_dir;
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
      throw data_error("cannot create output directory: " + out_dir.string());
    save_run_config(out_dir / "config.json", cfg);
  }

  RunOutcome outcome;
  outcome.result =
      run_sequence(model, data, tasks, extractor, plan, store,
                   selection_policy_from_name(cfg.selection_policy), out_dir);
  for (const Task& task : tasks.tasks)
    outcome.class_order.insert(outcome.class_order.end(),
                               task.class_ids.begin(), task.class_ids.end());
  return outcome;
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config: " + path.string());

  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("bad config JSON: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw config_error("config must be a JSON object");

  RunConfig cfg;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "data_dir") cfg.data_dir = value.get<std::string>();
      else if (key == "num_tasks") cfg.num_tasks = value.get<int>();
      else if (key == "fusion_mode") cfg.fusion_mode = value.get<std::string>();
      else if (key == "streams")
        cfg.streams = value.get<std::vector<std::string>>();
      else if (key == "exemplars_per_class")
        cfg.exemplars_per_class = value.get<int>();
      else if (key == "alpha") cfg.alpha = value.get<double>();
      else if (key == "temperature") cfg.temperature = value.get<double>();
      else if (key == "epochs") cfg.epochs = value.get<int>();
      else if (key == "batch_size") cfg.batch_size = value.get<int>();
      else if (key == "learning_rate") cfg.learning_rate = value.get<double>();
      else if (key == "decay_factor") cfg.decay_factor = value.get<double>();
      else if (key == "patience") cfg.patience = value.get<int>();
      else if (key == "proj_dim") cfg.proj_dim = value.get<int>();
      else if (key == "trunk_dims")
        cfg.trunk_dims = value.get<std::vector<int>>();
      else if (key == "thumb_side") cfg.thumb_side = value.get<int>();
      else if (key == "selection_policy")
        cfg.selection_policy = value.get<std::string>();
      else if (key == "seed") cfg.seed = value.get<std::int64_t>();
      else if (key == "out_dir") cfg.out_dir = value.get<std::string>();
      else throw config_error("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw config_error("bad config value: " + std::string(e.what()));
  }
  validate(cfg);
  return cfg;
}

void save_run_config(const std::filesystem::path& path, const RunConfig& cfg) {
  nlohmann::json doc;
  doc["data_dir"] = cfg.data_dir;
  doc["num_tasks"] = cfg.num_tasks;
  doc["fusion_mode"] = cfg.fusion_mode;
  doc["streams"] = cfg.streams;
  doc["exemplars_per_class"] = cfg.exemplars_per_class;
  doc["alpha"] = cfg.alpha;
  doc["temperature"] = cfg.temperature;
  doc["epochs"] = cfg.epochs;
  doc["batch_size"] = cfg.batch_size;
  doc["learning_rate"] = cfg.learning_rate;
  doc["decay_factor"] = cfg.decay_factor;
  doc["patience"] = cfg.patience;
  doc["proj_dim"] = cfg.proj_dim;
  doc["trunk_dims"] = cfg.trunk_dims;
  doc["thumb_side"] = cfg.thumb_side;
  doc["selection_policy"] = cfg.selection_policy;
  doc["seed"] = cfg.seed;
  doc["out_dir"] = cfg.out_dir;

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot create config: " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw data_error("failed writing config: " + path.string());
}

RunOutcome run_experiment(const RunConfig& cfg) {
  validate(cfg);
  if (cfg.data_dir.empty()) throw config_error("data_dir is required");
  const Dataset data =
      load_dataset(std::filesystem::path(cfg.data_dir) / "manifest.csv");
  return run_on(cfg, data);
}

std::vector<AblationRow> run_ablation(const RunConfig& base, int threads) {
  validate(base);
  if (base.data_dir.empty()) throw config_error("data_dir is required");

  struct Variant {
    const char* name;
    const char* mode;
    std::vector<std::string> streams;
  };
  const std::vector<Variant> grid = {
      {"rgb_only", "single", {"rgb"}},
      {"rgb_edge_early", "early", {"rgb", "edge_hist"}},
      {"rgb_edge_intermediate", "intermediate", {"rgb", "edge_hist"}},
      {"rgb_color_early", "early", {"rgb", "color_hist"}},
      {"rgb_color_intermediate", "intermediate", {"rgb", "color_hist"}},
      {"rgb_edge_color_early", "early", {"rgb", "edge_hist", "color_hist"}},
      {"rgb_edge_color_intermediate",
       "intermediate",
       {"rgb", "edge_hist", "color_hist"}},
  };

  const Dataset data =
      load_dataset(std::filesystem::path(base.data_dir) / "manifest.csv");

  std::vector<AblationRow> rows(grid.size());
  std::vector<std::exception_ptr> failures(grid.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) return;
      try {
        RunConfig cfg = base;
        cfg.fusion_mode = grid[i].mode;
        cfg.streams = grid[i].streams;
        if (!base.out_dir.empty())
          cfg.out_dir = (std::filesystem::path(base.out_dir) / grid[i].name)
                            .string();
        const RunOutcome outcome = run_on(cfg, data);
        rows[i] = {grid[i].name, grid[i].mode, grid[i].streams,
                   outcome.result.a_bar, outcome.result.f_bar};
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };

  unsigned pool = threads > 0 ? static_cast<unsigned>(threads)
                              : std::thread::hardware_concurrency();
  pool = std::max(1u, std::min<unsigned>(pool, grid.size()));

  if (pool == 1) {
    worker();
  } else {
    std::vector<std::thread> workers;
    for (unsigned i = 0; i < pool; ++i) workers.emplace_back(worker);
    for (std::thread& w : workers) w.join();
  }
  for (const std::exception_ptr& e : failures)
    if (e) std::rethrow_exception(e);

  if (!base.out_dir.empty())
    save_ablation_table(
        std::filesystem::path(base.out_dir) / "ablation_table.csv", rows);
  return rows;
}

void save_ablation_table(const std::filesystem::path& path,
                         const std::vector<AblationRow>& rows) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot create ablation table: " + path.string());
  out << "variant,fusion_mode,streams,A_bar,F_bar\n";
  for (const AblationRow& r : rows) {
    out << r.variant << ',' << r.fusion_mode << ',';
    for (std::size_t i = 0; i < r.streams.size(); ++i) {
      if (i) out << ';';
      out << r.streams[i];
    }
    out << ',' << fixed6(r.a_bar) << ',' << fixed6(r.f_bar) << '\n';
  }
  if (!out) throw data_error("failed writing ablation table: " + path.string());
}

}  // namespace cilfuse
