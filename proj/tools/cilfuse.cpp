#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cilfuse/dataset.hpp"
#include "cilfuse/errors.hpp"
#include "cilfuse/experiment.hpp"
#include "cilfuse/streams.hpp"

namespace {

// Exit codes: 0 success, 1 unexpected failure, 2 bad usage/config, 3 bad or
// missing data, 4 numeric failure during training.
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int env_threads() {
  const char* raw = std::getenv("CILFUSE_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || v < 0)
    throw cilfuse::config_error("CILFUSE_THREADS must be a nonnegative integer");
  return static_cast<int>(v);
}

int cmd_gen(int classes, int train_per_class, int test_per_class, int size,
            std::int64_t seed, const std::string& out) {
  if (seed < 0) throw cilfuse::config_error("seed must be nonnegative");
  cilfuse::GeneratorSpec spec;
  spec.num_classes = classes;
  spec.samples_per_class_train = train_per_class;
  spec.samples_per_class_test = test_per_class;
  spec.image_size = size;
  spec.seed = static_cast<std::uint64_t>(seed);

  const cilfuse::Dataset data = cilfuse::generate_dataset(spec);
  cilfuse::save_dataset(data, out);
  std::printf("wrote %zu images across %d classes to %s\n",
              data.samples.size(), data.num_classes, out.c_str());
  return 0;
}

int cmd_run(const std::string& config_path) {
  const cilfuse::RunConfig cfg = cilfuse::load_run_config(config_path);
  const cilfuse::RunOutcome outcome = cilfuse::run_experiment(cfg);
  for (const cilfuse::PhaseReport& r : outcome.result.reports)
    std::printf("phase %d: accuracy=%.6f forgetting=%.6f\n",
                r.phase_index + 1, r.cumulative_accuracy, r.forgetting);
  std::printf("A_bar=%.6f F_bar=%.6f\n", outcome.result.a_bar,
              outcome.result.f_bar);
  return 0;
}

int cmd_ablate(const std::string& config_path, int threads) {
  const cilfuse::RunConfig base = cilfuse::load_run_config(config_path);
  const std::vector<cilfuse::AblationRow> rows =
      cilfuse::run_ablation(base, threads);
  for (const cilfuse::AblationRow& r : rows)
    std::printf("%-28s A_bar=%.6f F_bar=%.6f\n", r.variant.c_str(), r.a_bar,
                r.f_bar);
  return 0;
}

int cmd_hist(const std::string& image_path, bool edge) {
  const cilfuse::Image img = cilfuse::load_ppm(image_path);
  const cilfuse::StreamVector hist =
      edge ? cilfuse::edge_histogram(img) : cilfuse::color_histogram(img);
  for (std::size_t i = 0; i < hist.values.size(); ++i)
    std::printf("%zu,%.6f\n", i, hist.values[i]);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-stream class-incremental pill classification"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic pill dataset");
  int classes = 12, train_per_class = 40, test_per_class = 10, size = 32;
  std::int64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--classes", classes, "number of classes");
  gen->add_option("--train-per-class", train_per_class,
                  "train samples per class");
  gen->add_option("--test-per-class", test_per_class,
                  "test samples per class");
  gen->add_option("--size", size, "square image side in pixels");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  // run
  auto* run = app.add_subcommand("run", "run one incremental experiment");
  std::string run_config;
  run->add_option("config", run_config, "JSON config file")->required();

  // ablate
  auto* ablate =
      app.add_subcommand("ablate", "run the stream/fusion ablation grid");
  std::string ablate_config;
  int threads = 0;
  ablate->add_option("config", ablate_config, "JSON config file")->required();
  auto* threads_opt = ablate->add_option(
      "--threads", threads, "concurrent variants (default: CILFUSE_THREADS)");

  // hist
  auto* hist = app.add_subcommand("hist", "print an image histogram");
  std::string hist_image;
  bool hist_edge = false;
  hist->add_option("--image", hist_image, "PPM image path")->required();
  hist->add_flag("--edge", hist_edge,
                 "edge-magnitude histogram instead of color");

  try {
    app.parse(argc, argv);
    if (gen->parsed())
      return cmd_gen(classes, train_per_class, test_per_class, size, gen_seed,
                     gen_out);
    if (run->parsed()) return cmd_run(run_config);
    if (ablate->parsed()) {
      if (threads_opt->count() == 0) threads = env_threads();
      return cmd_ablate(ablate_config, threads);
    }
    if (hist->parsed()) return cmd_hist(hist_image, hist_edge);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return kExitUsage;
  } catch (const cilfuse::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const cilfuse::data_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const cilfuse::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
