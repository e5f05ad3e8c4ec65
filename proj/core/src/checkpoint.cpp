#include "cilfuse/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "binio.hpp"
#include "cilfuse/errors.hpp"

namespace cilfuse {

namespace {

constexpr char kMagic[4] = {'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

struct NamedLayer {
  std::string name;
  const DenseLayer* layer;
};

std::vector<NamedLayer> named_layers(const FusionModel& model) {
  std::vector<NamedLayer> out;
  for (std::size_t i = 0; i < model.trunk.size(); ++i)
    out.push_back({"trunk." + std::to_string(i), &model.trunk[i]});
  for (std::size_t s = 0; s < model.shared_proj.size(); ++s)
    out.push_back({std::string("proj.shared.") +
                       stream_name(model.cfg.streams[s]),
                   &model.shared_proj[s]});
  for (std::size_t t = 0; t < model.task_proj.size(); ++t)
    for (std::size_t s = 0; s < model.task_proj[t].size(); ++s)
      out.push_back({"proj.t" + std::to_string(t) + "." +
                         stream_name(model.cfg.streams[s]),
                     &model.task_proj[t][s]});
  for (std::size_t k = 0; k < model.heads.size(); ++k)
    out.push_back({"head." + std::to_string(k), &model.heads[k]});
  return out;
}

void put_section(std::ostream& out, const std::string& name,
                 const std::vector<double>& values) {
  binio::put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  binio::put_u64(out, values.size());
  for (double v : values) binio::put_f64(out, v);
}

nlohmann::json metadata_json(const FusionModel& model) {
  nlohmann::json meta;
  meta["fusion_mode"] = fusion_mode_name(model.cfg.mode);
  nlohmann::json streams = nlohmann::json::array();
  for (StreamId id : model.cfg.streams) streams.push_back(stream_name(id));
  meta["streams"] = std::move(streams);
  meta["stream_dims"] = model.cfg.stream_dims;
  meta["proj_dim"] = model.cfg.proj_dim;
  meta["trunk_dims"] = model.cfg.trunk_dims;
  meta["activation"] = activation_name(model.cfg.activation);
  meta["freeze_old_heads"] = model.cfg.freeze_old_heads;
  meta["task_classes"] = model.task_classes;
  return meta;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const FusionModel& model) {
  if (model.num_tasks() == 0)
    throw config_error("refusing to checkpoint a model with no tasks");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot create checkpoint: " + path.string());

  out.write(kMagic, 4);
  binio::put_u32(out, kVersion);
  const std::string meta = metadata_json(model).dump();
  binio::put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));

  const std::vector<NamedLayer> layers = named_layers(model);
  binio::put_u32(out, static_cast<std::uint32_t>(2 * layers.size()));
  for (const NamedLayer& nl : layers) {
    put_section(out, nl.name + ".W", nl.layer->weights);
    put_section(out, nl.name + ".b", nl.layer->bias);
  }
  if (!out) throw data_error("failed writing checkpoint: " + path.string());
}

FusionModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open checkpoint: " + path.string());

  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw data_error("bad checkpoint magic: " + path.string());
  std::uint32_t version = 0;
  if (!binio::get_u32(in, version) || version != kVersion)
    throw data_error("unsupported checkpoint version: " + path.string());

  std::uint32_t meta_len = 0;
  if (!binio::get_u32(in, meta_len))
    throw data_error("truncated checkpoint header: " + path.string());
  std::string meta_text(meta_len, '\0');
  in.read(meta_text.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw data_error("truncated checkpoint metadata: " + path.string());

  FusionConfig cfg;
  std::vector<std::vector<int>> task_classes;
  try {
    const nlohmann::json meta = nlohmann::json::parse(meta_text);
    cfg.mode = fusion_mode_from_name(meta.at("fusion_mode").get<std::string>());
    for (const auto& s : meta.at("streams"))
      cfg.streams.push_back(stream_from_name(s.get<std::string>()));
    cfg.stream_dims = meta.at("stream_dims").get<std::vector<int>>();
    cfg.proj_dim = meta.at("proj_dim").get<int>();
    cfg.trunk_dims = meta.at("trunk_dims").get<std::vector<int>>();
    cfg.activation =
        activation_from_name(meta.at("activation").get<std::string>());
    cfg.freeze_old_heads = meta.at("freeze_old_heads").get<bool>();
    task_classes =
        meta.at("task_classes").get<std::vector<std::vector<int>>>();
  } catch (const nlohmann::json::exception& e) {
    throw data_error("bad checkpoint metadata: " + std::string(e.what()));
  }
  if (task_classes.empty())
    throw data_error("checkpoint lists no tasks: " + path.string());

  FusionModel model(cfg);
  model.task_classes = task_classes;

  const int trunk_in = cfg.mode == FusionMode::single
                           ? cfg.stream_dims[0]
                           : static_cast<int>(cfg.streams.size()) * cfg.proj_dim;
  int in_dim = trunk_in;
  for (int d : cfg.trunk_dims) {
    model.trunk.emplace_back(in_dim, d);
    in_dim = d;
  }
  if (cfg.mode == FusionMode::early)
    for (int d : cfg.stream_dims)
      model.shared_proj.emplace_back(d, cfg.proj_dim);
  if (cfg.mode == FusionMode::intermediate) {
    for (std::size_t t = 0; t < task_classes.size(); ++t) {
      std::vector<DenseLayer> proj;
      for (int d : cfg.stream_dims) proj.emplace_back(d, cfg.proj_dim);
      model.task_proj.push_back(std::move(proj));
    }
  }
  for (const auto& ids : task_classes) {
    if (ids.empty()) throw data_error("checkpoint task with no classes");
    model.heads.emplace_back(cfg.trunk_dims.back(),
                             static_cast<int>(ids.size()));
  }
  if (cfg.freeze_old_heads) {
    for (std::size_t t = 0; t + 1 < model.heads.size(); ++t) {
      model.heads[t].frozen = true;
      if (cfg.mode == FusionMode::intermediate)
        for (DenseLayer& layer : model.task_proj[t]) layer.frozen = true;
    }
  }

  std::map<std::string, std::vector<double>*> slots;
  std::vector<std::pair<std::string, DenseLayer*>> named;
  {
    // Mirror named_layers() over the mutable model.
    for (std::size_t i = 0; i < model.trunk.size(); ++i)
      named.push_back({"trunk." + std::to_string(i), &model.trunk[i]});
    for (std::size_t s = 0; s < model.shared_proj.size(); ++s)
      named.push_back({std::string("proj.shared.") +
                           stream_name(cfg.streams[s]),
                       &model.shared_proj[s]});
    for (std::size_t t = 0; t < model.task_proj.size(); ++t)
      for (std::size_t s = 0; s < model.task_proj[t].size(); ++s)
        named.push_back({"proj.t" + std::to_string(t) + "." +
                             stream_name(cfg.streams[s]),
                         &model.task_proj[t][s]});
    for (std::size_t k = 0; k < model.heads.size(); ++k)
      named.push_back({"head." + std::to_string(k), &model.heads[k]});
    for (auto& [name, layer] : named) {
      slots[name + ".W"] = &layer->weights;
      slots[name + ".b"] = &layer->bias;
    }
  }

  std::uint32_t section_count = 0;
  if (!binio::get_u32(in, section_count))
    throw data_error("truncated checkpoint sections: " + path.string());
  if (section_count != slots.size())
    throw data_error("checkpoint section count does not match topology: " +
                     path.string());

  for (std::uint32_t s = 0; s < section_count; ++s) {
    std::uint32_t name_len = 0;
    if (!binio::get_u32(in, name_len) || name_len > 4096)
      throw data_error("truncated checkpoint section: " + path.string());
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    std::uint64_t count = 0;
    if (!in || !binio::get_u64(in, count))
      throw data_error("truncated checkpoint section: " + path.string());

    auto it = slots.find(name);
    if (it == slots.end())
      throw data_error("unknown or repeated checkpoint section '" + name + "'");
    if (it->second->size() != count)
      throw data_error("checkpoint section '" + name + "' has " +
                       std::to_string(count) + " values, expected " +
                       std::to_string(it->second->size()));
    for (double& v : *it->second)
      if (!binio::get_f64(in, v))
        throw data_error("truncated checkpoint payload: " + path.string());
    slots.erase(it);
  }
  if (!slots.empty())
    throw data_error("checkpoint is missing sections: " + path.string());
  return model;
}

}  // namespace cilfuse
