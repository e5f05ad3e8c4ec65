#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "cilfuse/errors.hpp"
#include "cilfuse/fusion.hpp"
#include "cilfuse/losses.hpp"
#include "cilfuse/rng.hpp"
#include "cilfuse/streams.hpp"

using cilfuse::DenseLayer;
using cilfuse::ForwardTrace;
using cilfuse::FusionConfig;
using cilfuse::FusionMode;
using cilfuse::FusionModel;
using cilfuse::StreamId;
using cilfuse::StreamSet;

namespace {

FusionConfig tiny_config(FusionMode mode) {
  FusionConfig cfg;
  cfg.mode = mode;
  cfg.streams = {StreamId::rgb, StreamId::color_hist};
  cfg.stream_dims = {3, 2};
  cfg.proj_dim = 2;
  cfg.trunk_dims = {2};
  return cfg;
}

StreamSet tiny_streams(std::uint64_t seed) {
  cilfuse::Rng rng(seed);
  StreamSet s{{0.0, 0.0, 0.0}, {0.0, 0.0}};
  for (auto& stream : s)
    for (double& v : stream) v = rng.uniform(-1.0, 1.0);
  return s;
}

}  // namespace

TEST_CASE("fusion config is validated at construction") {
  FusionConfig cfg = tiny_config(FusionMode::single);
  CHECK_THROWS_AS(FusionModel{cfg}, cilfuse::config_error);  // two streams

  cfg = tiny_config(FusionMode::early);
  cfg.stream_dims = {3};
  CHECK_THROWS_AS(FusionModel{cfg}, cilfuse::config_error);

  cfg = tiny_config(FusionMode::early);
  cfg.streams.clear();
  cfg.stream_dims.clear();
  CHECK_THROWS_AS(FusionModel{cfg}, cilfuse::config_error);

  cfg = tiny_config(FusionMode::early);
  cfg.proj_dim = 0;
  CHECK_THROWS_AS(FusionModel{cfg}, cilfuse::config_error);

  cfg = tiny_config(FusionMode::intermediate);
  cfg.trunk_dims.clear();
  CHECK_THROWS_AS(FusionModel{cfg}, cilfuse::config_error);
}

TEST_CASE("mode names round-trip and reject unknowns") {
  for (FusionMode m : {FusionMode::single, FusionMode::early,
                       FusionMode::intermediate})
    CHECK(cilfuse::fusion_mode_from_name(cilfuse::fusion_mode_name(m)) == m);
  CHECK_THROWS_AS(cilfuse::fusion_mode_from_name("late"),
                  cilfuse::config_error);
}

TEST_CASE("growth produces the expected layer counts per mode") {
  const int num_tasks = 3;
  const auto tasks = std::vector<std::vector<int>>{
      {0, 1}, {2, 3}, {4, 5}};

  SUBCASE("intermediate: one head and one projection set per task") {
    FusionModel model(tiny_config(FusionMode::intermediate));
    for (int t = 0; t < num_tasks; ++t) {
      model.grow_for_task(tasks[static_cast<std::size_t>(t)], 7);
      CHECK(model.num_tasks() == t + 1);
      CHECK(model.heads.size() == static_cast<std::size_t>(t + 1));
      CHECK(model.task_proj.size() == static_cast<std::size_t>(t + 1));
      for (const auto& group : model.task_proj)
        CHECK(group.size() == model.cfg.streams.size());
      CHECK(model.shared_proj.empty());
      CHECK(model.total_classes() == 2 * (t + 1));
    }
  }

  SUBCASE("early: heads grow, the projection set stays shared") {
    FusionModel model(tiny_config(FusionMode::early));
    for (int t = 0; t < num_tasks; ++t) {
      model.grow_for_task(tasks[static_cast<std::size_t>(t)], 7);
      CHECK(model.heads.size() == static_cast<std::size_t>(t + 1));
      CHECK(model.shared_proj.size() == model.cfg.streams.size());
      CHECK(model.task_proj.empty());
    }
  }

  SUBCASE("single: no projections at all") {
    FusionConfig cfg;
    cfg.mode = FusionMode::single;
    cfg.streams = {StreamId::rgb};
    cfg.stream_dims = {3};
    cfg.trunk_dims = {2};
    FusionModel model(cfg);
    model.grow_for_task({0, 1}, 7);
    CHECK(model.shared_proj.empty());
    CHECK(model.task_proj.empty());
    CHECK(model.trunk.front().in_dim == 3);
  }
}

TEST_CASE("intermediate growth adds exactly the new pathway and head") {
  FusionConfig cfg;
  cfg.mode = FusionMode::intermediate;
  cfg.streams = {StreamId::rgb, StreamId::color_hist};
  cfg.stream_dims = {768, 512};
  cfg.proj_dim = 64;
  cfg.trunk_dims = {64};
  FusionModel model(cfg);

  model.grow_for_task({0, 1, 2, 3}, 11);
  const std::size_t after_first = model.param_count();
  // proj 768->64 and 512->64, trunk 128->64, head 64->4.
  CHECK(after_first == (768 + 1) * 64 + (512 + 1) * 64 + (128 + 1) * 64 +
                           (64 + 1) * 4);

  model.grow_for_task({4, 5, 6, 7}, 11);
  // Second task re-adds both projections plus a head; the trunk is shared.
  CHECK(model.param_count() - after_first ==
        (768 + 1) * 64 + (512 + 1) * 64 + (64 + 1) * 4);
}

TEST_CASE("early growth adds only a head") {
  FusionConfig cfg = tiny_config(FusionMode::early);
  FusionModel model(cfg);
  model.grow_for_task({0, 1}, 11);
  const std::size_t after_first = model.param_count();
  model.grow_for_task({2, 3, 4}, 11);
  CHECK(model.param_count() - after_first ==
        static_cast<std::size_t>((cfg.trunk_dims.back() + 1) * 3));
}

TEST_CASE("growth rejects empty or repeated class sets") {
  FusionModel model(tiny_config(FusionMode::intermediate));
  CHECK_THROWS_AS(model.grow_for_task({}, 7), cilfuse::config_error);
  model.grow_for_task({0, 1}, 7);
  CHECK_THROWS_AS(model.grow_for_task({1, 2}, 7), cilfuse::config_error);
}

TEST_CASE("growth is deterministic in the seed") {
  FusionModel a(tiny_config(FusionMode::intermediate));
  FusionModel b(tiny_config(FusionMode::intermediate));
  a.grow_for_task({0, 1}, 99);
  b.grow_for_task({0, 1}, 99);
  const StreamSet s = tiny_streams(3);
  CHECK(a.forward(s).logits == b.forward(s).logits);

  FusionModel c(tiny_config(FusionMode::intermediate));
  c.grow_for_task({0, 1}, 100);
  CHECK(a.forward(s).logits != c.forward(s).logits);
}

TEST_CASE("class ids map to flat logit positions in task order") {
  FusionModel model(tiny_config(FusionMode::intermediate));
  model.grow_for_task({5, 7}, 7);
  model.grow_for_task({2, 9}, 7);

  CHECK(model.class_position(5) == 0);
  CHECK(model.class_position(7) == 1);
  CHECK(model.class_position(2) == 2);
  CHECK(model.class_position(9) == 3);
  CHECK(model.class_position(42) == -1);
  for (int pos = 0; pos < 4; ++pos)
    CHECK(model.class_position(model.class_at(pos)) == pos);
  CHECK_THROWS_AS(model.class_at(4), cilfuse::numeric_error);
}

TEST_CASE("prediction takes the argmax across every head") {
  FusionModel model(tiny_config(FusionMode::intermediate));
  model.grow_for_task({5, 7}, 7);
  model.grow_for_task({2, 9}, 7);

  // Zero all head weights so logits reduce to the head biases we rig.
  for (DenseLayer& head : model.heads)
    head.weights.assign(head.weights.size(), 0.0);
  model.heads[0].bias = {0.1, 0.3};
  model.heads[1].bias = {0.9, 0.2};

  const StreamSet s = tiny_streams(4);
  CHECK(model.predict(s) == 2);  // flat position 2, the largest bias
  model.heads[0].bias = {0.1, 1.3};
  CHECK(model.predict(s) == 7);
}

TEST_CASE("single fusion feeds the raw stream straight into the trunk") {
  FusionConfig cfg;
  cfg.mode = FusionMode::single;
  cfg.streams = {StreamId::color_hist};
  cfg.stream_dims = {4};
  cfg.trunk_dims = {3};
  FusionModel model(cfg);
  model.grow_for_task({0, 1}, 7);

  const StreamSet s{{0.25, -0.5, 0.75, 0.1}};
  const ForwardTrace trace = model.forward(s);
  REQUIRE(trace.paths.size() == 1);
  CHECK(trace.paths[0].proj.empty());
  CHECK(trace.paths[0].fused == s[0]);
}

TEST_CASE("early and intermediate agree when given identical weights") {
  FusionModel early(tiny_config(FusionMode::early));
  FusionModel inter(tiny_config(FusionMode::intermediate));
  early.grow_for_task({0, 1}, 7);
  inter.grow_for_task({0, 1}, 8);

  for (std::size_t s = 0; s < early.shared_proj.size(); ++s) {
    inter.task_proj[0][s].weights = early.shared_proj[s].weights;
    inter.task_proj[0][s].bias = early.shared_proj[s].bias;
  }
  for (std::size_t i = 0; i < early.trunk.size(); ++i) {
    inter.trunk[i].weights = early.trunk[i].weights;
    inter.trunk[i].bias = early.trunk[i].bias;
  }
  inter.heads[0].weights = early.heads[0].weights;
  inter.heads[0].bias = early.heads[0].bias;

  const StreamSet s = tiny_streams(5);
  CHECK(early.forward(s).logits == inter.forward(s).logits);
}

TEST_CASE("scoped forward reproduces the pre-growth logit layout") {
  for (FusionMode mode : {FusionMode::early, FusionMode::intermediate}) {
    CAPTURE(cilfuse::fusion_mode_name(mode));
    FusionModel model(tiny_config(mode));
    model.grow_for_task({0, 1}, 7);
    model.grow_for_task({2, 3}, 7);

    const StreamSet s = tiny_streams(6);
    const ForwardTrace full = model.forward(s);
    const ForwardTrace scoped = model.forward(s, 1);

    REQUIRE(full.logits.size() == 4);
    REQUIRE(scoped.logits.size() == 2);
    CHECK(scoped.logits[0] == full.logits[0]);
    CHECK(scoped.logits[1] == full.logits[1]);
    if (mode == FusionMode::intermediate)
      CHECK(scoped.paths.size() == 1);

    CHECK_THROWS_AS(model.forward(s, 0), cilfuse::numeric_error);
    CHECK_THROWS_AS(model.forward(s, 3), cilfuse::numeric_error);
  }
}

TEST_CASE("the frozen snapshot is the model as it stood before growth") {
  FusionModel model(tiny_config(FusionMode::intermediate));
  model.grow_for_task({0, 1}, 7);
  CHECK_FALSE(model.has_frozen());
  CHECK(model.frozen() == nullptr);
  const StreamSet s = tiny_streams(9);
  CHECK_THROWS_AS(model.forward_frozen(s), cilfuse::numeric_error);
  const std::vector<double> before = model.forward(s).logits;

  model.grow_for_task({2, 3}, 7);
  REQUIRE(model.has_frozen());
  CHECK(model.frozen()->num_tasks() == 1);
  CHECK(model.forward_frozen(s) == before);
  CHECK(model.forward(s, 1).logits == before);
}

TEST_CASE("forward validates the stream bundle") {
  FusionModel model(tiny_config(FusionMode::early));
  CHECK_THROWS_AS(model.forward(tiny_streams(1)), cilfuse::numeric_error);
  model.grow_for_task({0, 1}, 7);

  StreamSet missing = tiny_streams(1);
  missing.pop_back();
  CHECK_THROWS_AS(model.forward(missing), cilfuse::numeric_error);

  StreamSet wrong_width = tiny_streams(1);
  wrong_width[1].push_back(0.0);
  CHECK_THROWS_AS(model.forward(wrong_width), cilfuse::numeric_error);
}

TEST_CASE("penultimate returns the trunk output on the task's pathway") {
  FusionModel model(tiny_config(FusionMode::intermediate));
  model.grow_for_task({0, 1}, 7);
  model.grow_for_task({2, 3}, 7);
  const StreamSet s = tiny_streams(10);
  const ForwardTrace trace = model.forward(s);
  CHECK(model.penultimate(s, 0) == trace.paths[0].trunk.back().out);
  CHECK(model.penultimate(s, 1) == trace.paths[1].trunk.back().out);
  CHECK(model.penultimate(s, 1) != model.penultimate(s, 0));
  CHECK_THROWS_AS(model.penultimate(s, 2), cilfuse::numeric_error);
}

TEST_CASE("backward demands a full-scope trace and full-width gradient") {
  FusionModel model(tiny_config(FusionMode::intermediate));
  model.grow_for_task({0, 1}, 7);
  model.grow_for_task({2, 3}, 7);
  const StreamSet s = tiny_streams(11);

  const ForwardTrace scoped = model.forward(s, 1);
  const std::vector<double> dfull(4, 0.25);
  CHECK_THROWS_AS(model.backward(scoped, dfull), cilfuse::numeric_error);

  const ForwardTrace full = model.forward(s);
  CHECK_THROWS_AS(model.backward(full, {0.5, 0.5}), cilfuse::numeric_error);
  CHECK_NOTHROW(model.backward(full, dfull));
}

TEST_CASE("freezing old heads stops their gradients and updates") {
  FusionConfig cfg = tiny_config(FusionMode::intermediate);
  cfg.freeze_old_heads = true;
  FusionModel model(cfg);
  model.grow_for_task({0, 1}, 7);
  model.grow_for_task({2, 3}, 7);

  CHECK(model.heads[0].frozen);
  CHECK_FALSE(model.heads[1].frozen);
  for (const DenseLayer& l : model.task_proj[0]) CHECK(l.frozen);
  for (const DenseLayer& l : model.task_proj[1]) CHECK_FALSE(l.frozen);

  const StreamSet s = tiny_streams(12);
  model.zero_grads();
  const ForwardTrace trace = model.forward(s);
  model.backward(trace, {0.3, -0.3, 0.2, -0.2});

  for (double g : model.heads[0].grad_weights) CHECK(g == 0.0);
  bool any_new_grad = false;
  for (double g : model.heads[1].grad_weights)
    any_new_grad = any_new_grad || g != 0.0;
  CHECK(any_new_grad);

  const std::vector<double> frozen_weights = model.heads[0].weights;
  const std::vector<double> live_weights = model.heads[1].weights;
  model.apply_sgd(0.1);
  CHECK(model.heads[0].weights == frozen_weights);
  CHECK(model.heads[1].weights != live_weights);
}

TEST_CASE("analytic gradients match finite differences through both "
          "fusion paths") {
  for (FusionMode mode : {FusionMode::early, FusionMode::intermediate}) {
    CAPTURE(cilfuse::fusion_mode_name(mode));
    FusionModel model(tiny_config(mode));
    model.grow_for_task({0, 1}, 21);
    model.grow_for_task({2, 3}, 21);
    const StreamSet s = tiny_streams(22);
    const int label = 3;

    model.zero_grads();
    const ForwardTrace trace = model.forward(s);
    const cilfuse::LossResult loss = cilfuse::cross_entropy(trace.logits,
                                                            label);
    model.backward(trace, loss.grad);

    const double h = 1e-6;
    for (DenseLayer* layer : model.layers()) {
      for (std::size_t i = 0; i < layer->weights.size(); ++i) {
        const double saved = layer->weights[i];
        layer->weights[i] = saved + h;
        const double up =
            cilfuse::cross_entropy(model.forward(s).logits, label).value;
        layer->weights[i] = saved - h;
        const double down =
            cilfuse::cross_entropy(model.forward(s).logits, label).value;
        layer->weights[i] = saved;
        const double fd = (up - down) / (2.0 * h);
        CHECK(layer->grad_weights[i] == doctest::Approx(fd).epsilon(1e-4));
      }
      for (std::size_t i = 0; i < layer->bias.size(); ++i) {
        const double saved = layer->bias[i];
        layer->bias[i] = saved + h;
        const double up =
            cilfuse::cross_entropy(model.forward(s).logits, label).value;
        layer->bias[i] = saved - h;
        const double down =
            cilfuse::cross_entropy(model.forward(s).logits, label).value;
        layer->bias[i] = saved;
        const double fd = (up - down) / (2.0 * h);
        CHECK(layer->grad_bias[i] == doctest::Approx(fd).epsilon(1e-4));
      }
    }
  }
}
