#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string_view>
#include <vector>

#include "cilfuse/dataset.hpp"

namespace cilfuse {

enum class SelectionPolicy : std::uint32_t { random = 0, herding = 1 };

const char* selection_policy_name(SelectionPolicy p);
SelectionPolicy selection_policy_from_name(std::string_view name);

// Replay memory with a constant per-class budget. Stored values are indices
// into the owning dataset's sample vector.
struct ExemplarStore {
  int per_class = 0;
  std::map<int, std::vector<int>> by_class;  // class id -> sample indices

  std::vector<int> all_indices() const;
  int total() const;
};

// Picks up to `budget` sample indices from `candidates` (train samples of a
// single class). Random policy: seeded Fisher-Yates shuffle, keep the prefix.
// Herding policy: repeatedly take the unchosen candidate whose feature vector
// is nearest (Euclidean) to the class feature mean, breaking ties toward the
// lower candidate position; `features` pairs with `candidates` by position.
std::vector<int> select_exemplars(const std::vector<int>& candidates,
                                  const std::vector<std::vector<double>>& features,
                                  int budget, SelectionPolicy policy,
                                  std::uint64_t seed);

// Runs selection for each class of the just-finished task and inserts the
// results. Existing classes are untouched (constant budget, no shrinking).
void update_store(ExemplarStore& store, const Dataset& data,
                  const std::vector<int>& class_ids,
                  const std::vector<int>& train_indices,
                  const std::vector<std::vector<double>>& features,
                  SelectionPolicy policy, std::uint64_t seed);

// Training set for task t: the task's own train samples plus every stored
// exemplar, in that order.
std::vector<int> build_training_set(const std::vector<int>& task_train_indices,
                                    const ExemplarStore& store);

// exemplars_t.csv: header `class_id,sample_index`, one row per stored
// exemplar, classes ascending, indices in selection order.
void save_exemplars_csv(const std::filesystem::path& path,
                        const ExemplarStore& store);

}  // namespace cilfuse
