#include <doctest.h>

#include <filesystem>
#include <vector>

#include "cilfuse/dataset.hpp"
#include "cilfuse/errors.hpp"
#include "cilfuse/fusion.hpp"
#include "cilfuse/metrics.hpp"
#include "cilfuse/streams.hpp"
#include "test_util.hpp"

using cilfuse::Dataset;
using cilfuse::FusionConfig;
using cilfuse::FusionMode;
using cilfuse::FusionModel;
using cilfuse::PhaseReport;
using cilfuse::StreamExtractor;
using cilfuse::StreamId;
using cilfuse::TaskSequence;

TEST_CASE("forgetting is the mean drop from each task's best accuracy") {
  // Two phases: task 0 went 0.8 -> 0.5, so F_2 = 0.3.
  CHECK(cilfuse::phase_forgetting({{0.8}, {0.5, 0.9}}) ==
        doctest::Approx(0.3).epsilon(1e-12));

  // Three phases: task 0 peaked at 0.8 (phase 2), now 0.5 -> drop 0.3;
  // task 1 peaked at 0.7, now 0.6 -> drop 0.1; mean 0.2.
  CHECK(cilfuse::phase_forgetting(
            {{0.6}, {0.8, 0.7}, {0.5, 0.6, 0.9}}) ==
        doctest::Approx(0.2).epsilon(1e-12));

  // A single phase has nothing to forget.
  CHECK(cilfuse::phase_forgetting({{0.9}}) == 0.0);

  // Negative forgetting (backward transfer) is allowed.
  CHECK(cilfuse::phase_forgetting({{0.5}, {0.7, 0.9}}) ==
        doctest::Approx(-0.2).epsilon(1e-12));

  CHECK_THROWS_AS(cilfuse::phase_forgetting({}), cilfuse::numeric_error);
  CHECK_THROWS_AS(cilfuse::phase_forgetting({{0.6}, {0.8}}),
                  cilfuse::numeric_error);
}

TEST_CASE("cumulative accuracy weights by test-set size by default") {
  const std::vector<double> acc{1.0, 0.5};
  const std::vector<int> counts{10, 30};
  CHECK(cilfuse::cumulative_accuracy(acc, counts) ==
        doctest::Approx(0.625).epsilon(1e-12));
  CHECK(cilfuse::cumulative_accuracy(acc, counts, false) ==
        doctest::Approx(0.75).epsilon(1e-12));

  CHECK_THROWS_AS(cilfuse::cumulative_accuracy({}, {}),
                  cilfuse::numeric_error);
  CHECK_THROWS_AS(cilfuse::cumulative_accuracy(acc, {10}),
                  cilfuse::numeric_error);
  CHECK_THROWS_AS(cilfuse::cumulative_accuracy({1.0}, {0}),
                  cilfuse::numeric_error);
}

TEST_CASE("phase averages run over every report") {
  PhaseReport a;
  a.cumulative_accuracy = 0.8;
  a.forgetting = 0.0;
  PhaseReport b;
  b.cumulative_accuracy = 0.7;
  b.forgetting = 0.3;

  CHECK(cilfuse::average_accuracy({a, b}) ==
        doctest::Approx(0.75).epsilon(1e-12));
  CHECK(cilfuse::average_forgetting({a, b}) ==
        doctest::Approx(0.15).epsilon(1e-12));
  CHECK_THROWS_AS(cilfuse::average_accuracy({}), cilfuse::numeric_error);
  CHECK_THROWS_AS(cilfuse::average_forgetting({}), cilfuse::numeric_error);
}

TEST_CASE("the report file matches its documented layout byte for byte") {
  PhaseReport r1;
  r1.phase_index = 0;
  r1.per_task_accuracy = {0.8};
  r1.per_task_test_count = {10};
  r1.cumulative_accuracy = 0.8;
  r1.forgetting = 0.0;

  PhaseReport r2;
  r2.phase_index = 1;
  r2.per_task_accuracy = {0.5, 0.9};
  r2.per_task_test_count = {10, 10};
  r2.cumulative_accuracy = 0.7;
  r2.forgetting = 0.3;

  testutil::TempDir dir;
  const std::filesystem::path path = dir.path() / "report.csv";
  cilfuse::write_report(path, {r1, r2});

  CHECK(testutil::read_file(path) ==
        "phase,cumulative_accuracy,forgetting,per_task_accuracies\n"
        "1,0.800000,0.000000,0.800000\n"
        "2,0.700000,0.300000,0.500000;0.900000\n"
        "summary,0.750000,0.150000,\n");
}

TEST_CASE("phase evaluation scores every seen task with one shared argmax") {
  cilfuse::GeneratorSpec spec;
  spec.num_classes = 2;
  spec.samples_per_class_train = 2;
  spec.samples_per_class_test = 2;
  spec.image_size = 16;
  spec.seed = 3;
  const Dataset data = cilfuse::generate_dataset(spec);
  const TaskSequence tasks = cilfuse::split_tasks(data, 2, -1);

  StreamExtractor extractor;
  extractor.streams = {StreamId::rgb};
  extractor.thumb_side = 4;

  FusionConfig cfg;
  cfg.mode = FusionMode::single;
  cfg.streams = {StreamId::rgb};
  cfg.stream_dims = extractor.dims();
  cfg.trunk_dims = {4};
  FusionModel model(cfg);
  model.grow_for_task(tasks.tasks[0].class_ids, 7);

  // Rig the single one-class head so every prediction is class 0.
  model.heads[0].weights.assign(model.heads[0].weights.size(), 0.0);
  model.heads[0].bias = {0.5};

  const PhaseReport first =
      cilfuse::evaluate_phase(model, data, tasks, 0, extractor, {});
  CHECK(first.phase_index == 0);
  REQUIRE(first.per_task_accuracy.size() == 1);
  CHECK(first.per_task_accuracy[0] == 1.0);
  CHECK(first.per_task_test_count == std::vector<int>{2});
  CHECK(first.cumulative_accuracy == 1.0);
  CHECK(first.forgetting == 0.0);

  // Grow a second rigged head that outbids the first everywhere: the old
  // task's accuracy collapses and shows up as forgetting.
  model.grow_for_task(tasks.tasks[1].class_ids, 7);
  model.heads[1].weights.assign(model.heads[1].weights.size(), 0.0);
  model.heads[1].bias = {1.0};

  const PhaseReport second =
      cilfuse::evaluate_phase(model, data, tasks, 1, extractor, {first});
  REQUIRE(second.per_task_accuracy.size() == 2);
  CHECK(second.per_task_accuracy[0] == 0.0);
  CHECK(second.per_task_accuracy[1] == 1.0);
  CHECK(second.cumulative_accuracy == 0.5);
  CHECK(second.forgetting == 1.0);

  // The history must line up with the phase index.
  CHECK_THROWS_AS(cilfuse::evaluate_phase(model, data, tasks, 1, extractor,
                                          {}),
                  cilfuse::config_error);
  CHECK_THROWS_AS(cilfuse::evaluate_phase(model, data, tasks, 2, extractor,
                                          {first, second}),
                  cilfuse::config_error);
  CHECK_THROWS_AS(cilfuse::evaluate_phase(model, data, tasks, -1, extractor,
                                          {}),
                  cilfuse::config_error);
}
