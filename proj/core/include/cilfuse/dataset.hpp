#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cilfuse/image.hpp"

namespace cilfuse {

enum class Split : std::uint8_t { train, test };

struct LabeledSample {
  Image image;
  int class_id = 0;
  Split split = Split::train;
};

enum class PillShape : std::uint8_t { circle, capsule, oblong };
enum class PillImprint : std::uint8_t { none, bar, dot };

const char* shape_name(PillShape s);
const char* imprint_name(PillImprint m);

// One synthetic class is a (shape, imprint, base color) triple. Classes are
// assigned in consecutive pairs sharing shape+imprint and differing only in
// base color, so at least floor(n/2) pairs are separable by color alone.
struct ClassDesc {
  PillShape shape = PillShape::circle;
  PillImprint imprint = PillImprint::none;
  // Pill coloring is a two-tone weave: pixels alternate between color_a and
  // color_b in a checkerboard at pixel scale. Solid pills have color_a ==
  // color_b. A woven pill area-averages to the midpoint of its two tones, so
  // a thumbnail cannot tell it from a solid pill of the blended color, while
  // a per-pixel color histogram separates the two cleanly.
  std::uint8_t color_a[3] = {0, 0, 0};
  std::uint8_t color_b[3] = {0, 0, 0};
  std::string color_name;
};

struct GeneratorSpec {
  int num_classes = 0;
  int samples_per_class_train = 0;
  int samples_per_class_test = 0;
  int image_size = 0;  // square side, >= 16
  std::uint64_t seed = 0;
};

struct Dataset {
  int num_classes = 0;
  std::vector<LabeledSample> samples;
  std::vector<ClassDesc> classes;  // empty when loaded from a manifest
};

// Deterministic function of the spec: same spec, same bytes. Per sample the
// pill gets position jitter (+-10% of size), brightness jitter (+-10%) and,
// for capsule/oblong, a random rotation, on a per-pixel uniform gray
// background in [96, 160]. Throws data_error when num_classes exceeds the
// number of distinct (shape, imprint, color) triples.
Dataset generate_dataset(const GeneratorSpec& spec);

ClassDesc class_desc_for(int class_id);

// One incremental task: its class set and the train/test sample indices
// into Dataset::samples.
struct Task {
  std::vector<int> class_ids;
  std::vector<int> train_samples;
  std::vector<int> test_samples;
};

struct TaskSequence {
  std::vector<Task> tasks;
  std::int64_t class_order_seed = -1;

  int num_tasks() const { return static_cast<int>(tasks.size()); }
  // M^t: total classes through phase t (1-based).
  int classes_through(int t) const;
};

// Shuffles class ids with class_order_seed (negative keeps ascending order),
// chunks them contiguously into num_tasks equal disjoint sets and routes
// samples to their class's task. The class count must divide evenly.
TaskSequence split_tasks(const Dataset& data, int num_tasks,
                         std::int64_t class_order_seed);

// On-disk layout: <dir>/cNNN_<split>_MMM.ppm plus manifest.csv with header
// "path,class_id,split" and paths relative to the manifest directory.
void save_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& manifest_path);

}  // namespace cilfuse
