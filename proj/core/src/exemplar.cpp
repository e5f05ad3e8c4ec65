#include "cilfuse/exemplar.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "cilfuse/errors.hpp"
#include "cilfuse/rng.hpp"

namespace cilfuse {

const char* selection_policy_name(SelectionPolicy p) {
  switch (p) {
    case SelectionPolicy::random: return "random";
    case SelectionPolicy::herding: return "herding";
  }
  return "?";
}

SelectionPolicy selection_policy_from_name(std::string_view name) {
  if (name == "random") return SelectionPolicy::random;
  if (name == "herding") return SelectionPolicy::herding;
  throw config_error("unknown selection policy: " + std::string(name));
}

std::vector<int> ExemplarStore::all_indices() const {
  std::vector<int> out;
  for (const auto& [class_id, indices] : by_class)
    out.insert(out.end(), indices.begin(), indices.end());
  return out;
}

int ExemplarStore::total() const {
  int n = 0;
  for (const auto& [class_id, indices] : by_class)
    n += static_cast<int>(indices.size());
  return n;
}

std::vector<int> select_exemplars(const std::vector<int>& candidates,
                                  const std::vector<std::vector<double>>& features,
                                  int budget, SelectionPolicy policy,
                                  std::uint64_t seed) {
  if (budget < 0) throw config_error("exemplar budget must be nonnegative");
  const std::size_t keep =
      std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(budget));
  if (keep == 0) return {};

  if (policy == SelectionPolicy::random) {
    std::vector<int> pool = candidates;
    Rng rng(seed);
    rng.shuffle(pool);
    pool.resize(keep);
    return pool;
  }

  // Herding: nearest (Euclidean) to the class feature mean, low positions win
  // ties.
  if (features.size() != candidates.size())
    throw data_error("herding needs one feature row per candidate");
  const std::size_t dim = features.front().size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& f : features) {
    if (f.size() != dim)
      throw data_error("herding feature rows have inconsistent widths");
    for (std::size_t i = 0; i < dim; ++i) mean[i] += f[i];
  }
  for (double& m : mean) m /= static_cast<double>(features.size());

  std::vector<double> dist(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = features[c][i] - mean[i];
      acc += d * d;
    }
    dist[c] = std::sqrt(acc);
  }

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

  std::vector<int> out(keep);
  for (std::size_t i = 0; i < keep; ++i) out[i] = candidates[order[i]];
  return out;
}

void update_store(ExemplarStore& store, const Dataset& data,
                  const std::vector<int>& class_ids,
                  const std::vector<int>& train_indices,
                  const std::vector<std::vector<double>>& features,
                  SelectionPolicy policy, std::uint64_t seed) {
  if (features.size() != train_indices.size())
    throw data_error("one feature row per train sample required");

  for (int class_id : class_ids) {
    if (store.by_class.count(class_id))
      throw config_error("class " + std::to_string(class_id) +
                         " already has stored exemplars");

    std::vector<int> candidates;
    std::vector<std::vector<double>> class_features;
    for (std::size_t i = 0; i < train_indices.size(); ++i) {
      const int idx = train_indices[i];
      const LabeledSample& s = data.samples[static_cast<std::size_t>(idx)];
      if (s.class_id != class_id) continue;
      if (s.split != Split::train)
        throw data_error("exemplar candidate " + std::to_string(idx) +
                         " is not a train sample");
      candidates.push_back(idx);
      class_features.push_back(features[i]);
    }

    store.by_class[class_id] = select_exemplars(
        candidates, class_features, store.per_class, policy,
        derive_seed(seed, 0x6d656d /* replay stream tag */,
                    static_cast<std::uint64_t>(class_id)));
  }
}

std::vector<int> build_training_set(const std::vector<int>& task_train_indices,
                                    const ExemplarStore& store) {
  std::vector<int> out = task_train_indices;
  const std::vector<int> replay = store.all_indices();
  out.insert(out.end(), replay.begin(), replay.end());
  return out;
}

void save_exemplars_csv(const std::filesystem::path& path,
                        const ExemplarStore& store) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot create exemplar file: " + path.string());
  out << "class_id,sample_index\n";
  for (const auto& [class_id, indices] : store.by_class)
    for (int idx : indices) out << class_id << ',' << idx << '\n';
  if (!out) throw data_error("failed writing exemplar file: " + path.string());
}

}  // namespace cilfuse
