#include "cilfuse/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "cilfuse/errors.hpp"
#include "cilfuse/rng.hpp"

namespace cilfuse {

namespace {

struct PaletteEntry {
  std::uint8_t rgb_a[3];
  std::uint8_t rgb_b[3];
  const char* name;
};

// Pill colorings. Each entry is a two-tone weave (solid when both tones are
// equal). Tones sit far apart in RGB so the 8x8x8 joint color histogram
// separates every entry from every other even under +-10% brightness jitter.
//
// Entries are organized so that consecutive pairs (2g, 2g+1) for g >= 1 put a
// solid color next to a weave whose tone midpoint equals that solid EXACTLY.
// A 2x-downsampling thumbnail averages each interior 2x2 block to the tone
// midpoint, so it cannot tell the pair apart at all (brightness jitter scales
// both tones together, and every channel stays <= 230 so a +10% jitter never
// clamps and breaks the midpoint identity). The per-pixel histogram, in
// contrast, sees the weave's two tones in distant bins and separates the pair
// outright. Entry pair (0, 1) is the exception — two plain solids far apart —
// so channel-mean sanity checks have an easy pair.
constexpr std::array<PaletteEntry, 16> kPalette = {{
    {{224, 32, 32}, {224, 32, 32}, "red"},
    {{32, 64, 224}, {32, 64, 224}, "blue"},
    {{32, 184, 64}, {32, 184, 64}, "green"},
    {{16, 230, 16}, {48, 138, 112}, "green-weave"},
    {{224, 200, 32}, {224, 200, 32}, "yellow"},
    {{230, 230, 16}, {218, 170, 48}, "yellow-weave"},
    {{224, 120, 16}, {224, 120, 16}, "orange"},
    {{230, 184, 16}, {218, 56, 16}, "orange-weave"},
    {{136, 32, 208}, {136, 32, 208}, "purple"},
    {{200, 16, 230}, {72, 48, 186}, "purple-weave"},
    {{230, 112, 176}, {230, 112, 176}, "pink"},
    {{230, 160, 230}, {230, 64, 122}, "pink-weave"},
    {{16, 200, 200}, {16, 200, 200}, "cyan"},
    {{16, 230, 230}, {16, 170, 170}, "cyan-weave"},
    {{216, 216, 216}, {216, 216, 216}, "white"},
    {{230, 230, 230}, {202, 202, 202}, "gray-weave"},
}};

// 9 shape/imprint combos x 16 colorings = 144 distinct class triples; the
// supported class limit stays at 72. Consecutive class pairs (2k, 2k+1)
// share the combo and take adjacent palette entries, so every such pair is
// separable only by coloring; with 16 palette entries no two classes under
// id 16 reuse a coloring.
constexpr int kMaxClasses = 72;

std::uint8_t shade(std::uint8_t base, double factor) {
  double v = std::round(static_cast<double>(base) * factor);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

Image render_sample(const ClassDesc& desc, const GeneratorSpec& spec,
                    int class_id, Split split, int index) {
  const double size = static_cast<double>(spec.image_size);
  Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(class_id),
                      split == Split::train ? 0 : 1,
                      static_cast<std::uint64_t>(index)));

  double theta = 0.0;
  if (desc.shape != PillShape::circle)
    theta = rng.uniform(0.0, std::numbers::pi);
  const double cx = 0.5 * size + rng.uniform(-0.1, 0.1) * size;
  const double cy = 0.5 * size + rng.uniform(-0.1, 0.1) * size;
  const double brightness = rng.uniform(0.9, 1.1);
  // Random weave phase: flips which tone lands on even pixels, so the
  // single-pixel fringe along the pill boundary is not a stable per-class
  // cue. Solid colorings are unaffected.
  const unsigned weave_phase = static_cast<unsigned>(rng.below(2));

  // Two pill tones woven in a pixel checkerboard (identical for solid
  // colorings); the imprint darkens the tone blend so it stays legible on
  // both tones.
  std::uint8_t pill_a[3], pill_b[3], mark[3];
  for (int ch = 0; ch < 3; ++ch) {
    pill_a[ch] = shade(desc.color_a[ch], brightness);
    pill_b[ch] = shade(desc.color_b[ch], brightness);
    const double blend =
        0.5 * (static_cast<double>(desc.color_a[ch]) + desc.color_b[ch]);
    mark[ch] = shade(static_cast<std::uint8_t>(std::lround(blend)),
                     brightness * 0.35);
  }

  Image img;
  img.width = spec.image_size;
  img.height = spec.image_size;
  img.pixels.resize(3 * img.pixel_count());
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    std::uint8_t gray = static_cast<std::uint8_t>(96 + rng.below(65));
    img.pixels[3 * i + 0] = gray;
    img.pixels[3 * i + 1] = gray;
    img.pixels[3 * i + 2] = gray;
  }

  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double r_circle = 0.40 * size;
  const double cap_half = 0.34 * size;
  const double cap_r = 0.22 * size;
  const double obl_a = 0.44 * size;
  const double obl_b = 0.26 * size;
  const double bar_half = 0.06 * size;
  const double dot_r = 0.09 * size;

  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double dx = (x + 0.5) - cx;
      const double dy = (y + 0.5) - cy;
      const double u = cos_t * dx + sin_t * dy;
      const double v = -sin_t * dx + cos_t * dy;

      bool inside = false;
      switch (desc.shape) {
        case PillShape::circle:
          inside = dx * dx + dy * dy <= r_circle * r_circle;
          break;
        case PillShape::capsule: {
          const double du = std::max(std::abs(u) - cap_half, 0.0);
          inside = du * du + v * v <= cap_r * cap_r;
          break;
        }
        case PillShape::oblong: {
          const double eu = u / obl_a;
          const double ev = v / obl_b;
          inside = eu * eu + ev * ev <= 1.0;
          break;
        }
      }
      if (!inside) continue;

      bool marked = false;
      switch (desc.imprint) {
        case PillImprint::none:
          break;
        case PillImprint::bar:
          marked = std::abs(v) <= bar_half;
          break;
        case PillImprint::dot:
          marked = u * u + v * v <= dot_r * dot_r;
          break;
      }

      const std::uint8_t* color =
          marked ? mark
                 : ((static_cast<unsigned>(x + y) + weave_phase) % 2 != 0
                        ? pill_b
                        : pill_a);
      std::uint8_t* p = img.px(x, y);
      p[0] = color[0];
      p[1] = color[1];
      p[2] = color[2];
    }
  }
  return img;
}

std::string sample_filename(int class_id, Split split, int index) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "c%03d_%s_%03d.ppm", class_id,
                split == Split::train ? "train" : "test", index);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

const char* shape_name(PillShape s) {
  switch (s) {
    case PillShape::circle: return "circle";
    case PillShape::capsule: return "capsule";
    case PillShape::oblong: return "oblong";
  }
  return "?";
}

const char* imprint_name(PillImprint m) {
  switch (m) {
    case PillImprint::none: return "none";
    case PillImprint::bar: return "bar";
    case PillImprint::dot: return "dot";
  }
  return "?";
}

ClassDesc class_desc_for(int class_id) {
  if (class_id < 0 || class_id >= kMaxClasses)
    throw data_error("class id out of range: " + std::to_string(class_id));
  const int pair = class_id / 2;
  const int combo = pair % 9;
  const int color_idx =
      (2 * pair + class_id % 2) % static_cast<int>(kPalette.size());

  ClassDesc desc;
  desc.shape = static_cast<PillShape>(combo % 3);
  desc.imprint = static_cast<PillImprint>(combo / 3);
  const PaletteEntry& entry = kPalette[static_cast<std::size_t>(color_idx)];
  for (int ch = 0; ch < 3; ++ch) {
    desc.color_a[ch] = entry.rgb_a[ch];
    desc.color_b[ch] = entry.rgb_b[ch];
  }
  desc.color_name = entry.name;
  return desc;
}

Dataset generate_dataset(const GeneratorSpec& spec) {
  if (spec.num_classes < 1)
    throw data_error("num_classes must be positive");
  if (spec.num_classes > kMaxClasses)
    throw data_error("num_classes exceeds the " +
                     std::to_string(kMaxClasses) +
                     " distinct shape/imprint/color triples");
  if (spec.samples_per_class_train < 1 || spec.samples_per_class_test < 1)
    throw data_error("per-class sample counts must be positive");
  if (spec.image_size < 16)
    throw data_error("image_size must be at least 16");

  Dataset data;
  data.num_classes = spec.num_classes;
  data.classes.reserve(static_cast<std::size_t>(spec.num_classes));
  const std::size_t per_class = static_cast<std::size_t>(
      spec.samples_per_class_train + spec.samples_per_class_test);
  data.samples.reserve(per_class * static_cast<std::size_t>(spec.num_classes));

  for (int c = 0; c < spec.num_classes; ++c) {
    ClassDesc desc = class_desc_for(c);
    for (int i = 0; i < spec.samples_per_class_train; ++i)
      data.samples.push_back(
          {render_sample(desc, spec, c, Split::train, i), c, Split::train});
    for (int i = 0; i < spec.samples_per_class_test; ++i)
      data.samples.push_back(
          {render_sample(desc, spec, c, Split::test, i), c, Split::test});
    data.classes.push_back(std::move(desc));
  }
  return data;
}

int TaskSequence::classes_through(int t) const {
  if (t < 1 || t > num_tasks())
    throw config_error("phase index out of range: " + std::to_string(t));
  int total = 0;
  for (int i = 0; i < t; ++i)
    total += static_cast<int>(tasks[static_cast<std::size_t>(i)].class_ids.size());
  return total;
}

TaskSequence split_tasks(const Dataset& data, int num_tasks,
                         std::int64_t class_order_seed) {
  if (num_tasks < 1) throw config_error("num_tasks must be positive");
  if (data.num_classes < num_tasks)
    throw config_error("more tasks than classes");
  if (data.num_classes % num_tasks != 0)
    throw config_error("num_tasks must divide the class count evenly");

  std::vector<int> order(static_cast<std::size_t>(data.num_classes));
  for (int c = 0; c < data.num_classes; ++c)
    order[static_cast<std::size_t>(c)] = c;
  if (class_order_seed >= 0) {
    Rng rng(derive_seed(static_cast<std::uint64_t>(class_order_seed),
                        0x636c6f72 /* class-order stream tag */));
    rng.shuffle(order);
  }

  TaskSequence seq;
  seq.class_order_seed = class_order_seed;
  seq.tasks.resize(static_cast<std::size_t>(num_tasks));
  const int per_task = data.num_classes / num_tasks;

  std::unordered_map<int, int> task_of;
  for (int t = 0; t < num_tasks; ++t) {
    Task& task = seq.tasks[static_cast<std::size_t>(t)];
    task.class_ids.assign(order.begin() + t * per_task,
                          order.begin() + (t + 1) * per_task);
    for (int c : task.class_ids) task_of[c] = t;
  }

  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const LabeledSample& s = data.samples[i];
    auto it = task_of.find(s.class_id);
    if (it == task_of.end())
      throw data_error("sample has unknown class id " +
                       std::to_string(s.class_id));
    Task& task = seq.tasks[static_cast<std::size_t>(it->second)];
    (s.split == Split::train ? task.train_samples : task.test_samples)
        .push_back(static_cast<int>(i));
  }
  return seq;
}

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw data_error("cannot create dataset directory: " + dir.string());

  std::ofstream manifest(dir / "manifest.csv", std::ios::trunc);
  if (!manifest)
    throw data_error("cannot create manifest: " + (dir / "manifest.csv").string());
  manifest << "path,class_id,split\n";

  std::unordered_map<long long, int> counters;  // (class, split) -> next index
  for (const LabeledSample& s : data.samples) {
    const long long key =
        2LL * s.class_id + (s.split == Split::train ? 0 : 1);
    const int idx = counters[key]++;
    const std::string name = sample_filename(s.class_id, s.split, idx);
    save_ppm(s.image, dir / name);
    manifest << name << ',' << s.class_id << ','
             << (s.split == Split::train ? "train" : "test") << '\n';
  }
  if (!manifest)
    throw data_error("failed writing manifest: " + (dir / "manifest.csv").string());
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw data_error("cannot open manifest: " + manifest_path.string());

  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) !=
                                     std::vector<std::string>{"path", "class_id",
                                                              "split"})
    throw data_error("bad manifest header: " + manifest_path.string());

  const std::filesystem::path base = manifest_path.parent_path();
  Dataset data;
  int max_class = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 3)
      throw data_error("bad manifest row " + std::to_string(line_no) + " in " +
                       manifest_path.string());
    int class_id = 0;
    try {
      std::size_t pos = 0;
      class_id = std::stoi(fields[1], &pos);
      if (pos != fields[1].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw data_error("bad class id on manifest row " +
                       std::to_string(line_no));
    }
    if (class_id < 0)
      throw data_error("negative class id on manifest row " +
                       std::to_string(line_no));
    Split split;
    if (fields[2] == "train") {
      split = Split::train;
    } else if (fields[2] == "test") {
      split = Split::test;
    } else {
      throw data_error("bad split on manifest row " + std::to_string(line_no));
    }
    data.samples.push_back({load_ppm(base / fields[0]), class_id, split});
    max_class = std::max(max_class, class_id);
  }
  if (data.samples.empty())
    throw data_error("manifest lists no samples: " + manifest_path.string());
  data.num_classes = max_class + 1;
  return data;
}

}  // namespace cilfuse
