#include "oracles.hpp"
#include "qo/toy_trainer.hpp"

#include <doctest.h>

using qo::Parameterization;
using qo::SyntheticTask;
using qo::TrainConfig;

namespace {

SyntheticTask small_task(std::uint64_t seed) {
  SyntheticTask t;
  t.seed = seed;
  t.graph = qo::GridGraph(8, 8, 2);
  return t;
}

}  // namespace

TEST_CASE("noise-free, occlusion-free unaries already argmax to the truth") {
  SyntheticTask t;
  t.unary_noise = 0;
  t.occlusion_rate = 0;
  for (auto pattern : {qo::TaskPattern::Blobs, qo::TaskPattern::Stripes}) {
    t.pattern = pattern;
    const auto task = qo::generate_task(t);
    CHECK(qo::argmax_labels(task.unary).labels == task.truth.labels);
  }
}

TEST_CASE("generated tasks are deterministic in the seed") {
  const auto a = qo::generate_task(small_task(3));
  const auto b = qo::generate_task(small_task(3));
  const auto c = qo::generate_task(small_task(4));
  CHECK(a.unary.values == b.unary.values);
  CHECK(a.truth.labels == b.truth.labels);
  CHECK(a.occluded == b.occluded);
  CHECK(a.unary.values != c.unary.values);
}

TEST_CASE("occlusion zeroes the requested fraction of pixels") {
  auto t = small_task(5);
  t.occlusion_rate = 0.25;
  const auto task = qo::generate_task(t);
  long count = 0;
  for (Eigen::Index p = 0; p < 64; ++p) {
    if (!task.occluded[p]) continue;
    ++count;
    CHECK(task.unary.values.segment(p * 2, 2).isZero(0.0));
  }
  CHECK(count == 16);
}

TEST_CASE("task and config validation") {
  auto t = small_task(0);
  t.occlusion_rate = 1.0;
  CHECK_THROWS_AS(qo::generate_task(t), qo::InvalidArgument);
  t = small_task(0);
  t.unary_noise = -1;
  CHECK_THROWS_AS(qo::generate_task(t), qo::InvalidArgument);
  TrainConfig cfg;
  cfg.steps = 0;
  CHECK_THROWS_AS(qo::train(small_task(0), cfg), qo::InvalidArgument);
  cfg = {};
  cfg.lambda = 0;
  CHECK_THROWS_AS(qo::train(small_task(0), cfg), qo::InvalidArgument);
  CHECK_THROWS_AS(qo::task_pattern_from_string("checkers"), qo::InvalidArgument);
}

TEST_CASE("zero learning rate keeps the loss constant") {
  for (auto param : {Parameterization::General, Parameterization::Potts}) {
    TrainConfig cfg;
    cfg.steps = 5;
    cfg.learning_rate = 0;
    cfg.parameterization = param;
    const auto r = qo::train(small_task(1), cfg);
    REQUIRE(r.history.size() == 6);
    for (const auto& h : r.history) CHECK(h.loss == r.history.front().loss);
  }
}

TEST_CASE("step-0 loss is the cross-entropy of B / lambda") {
  const auto task = qo::generate_task(small_task(2));
  for (auto param : {Parameterization::General, Parameterization::Potts}) {
    TrainConfig cfg;
    cfg.steps = 1;
    cfg.parameterization = param;
    const auto r = qo::train(task, cfg);
    const Eigen::VectorXd x0 = task.unary.values / cfg.lambda;
    CHECK(r.history.front().step == 0);
    CHECK(r.history.front().loss == doctest::Approx(oracle::xent(x0, task.truth.labels, 2)).epsilon(1e-9));
  }
}

TEST_CASE("smoke: a small learning rate still lowers the loss") {
  for (auto param : {Parameterization::General, Parameterization::Potts}) {
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.parameterization = param;
    const auto r = qo::train(SyntheticTask{}, cfg);
    CHECK(r.history.back().loss < r.history.front().loss);
  }
}

TEST_CASE("training beats the unary baseline and is reproducible") {
  for (auto param : {Parameterization::General, Parameterization::Potts}) {
    TrainConfig cfg;
    cfg.steps = 60;
    cfg.parameterization = param;
    const auto r = qo::train(small_task(7), cfg);
    CHECK(r.history.back().loss < r.history.front().loss);
    CHECK(r.final_metrics.pixel_accuracy > r.baseline_metrics.pixel_accuracy);
    const auto again = qo::train(small_task(7), cfg);
    CHECK(again.pairwise.value_vector() == r.pairwise.value_vector());
    CHECK(again.history.back().loss == r.history.back().loss);
  }
}

TEST_CASE("learned pairwise terms keep the layout of each parameterization") {
  TrainConfig cfg;
  cfg.steps = 3;
  const auto g = qo::train(small_task(8), cfg);
  CHECK(g.pairwise.dim() == 128);
  CHECK(g.pairwise.diagonal().isZero(0.0));
  cfg.parameterization = Parameterization::Potts;
  const auto p = qo::train(small_task(8), cfg);
  CHECK(p.pairwise.dim() == 64);
  CHECK(p.pairwise.diagonal().isZero(0.0));
}

TEST_CASE("learning the unary bias moves it off zero") {
  TrainConfig cfg;
  cfg.steps = 5;
  cfg.learn_unary_bias = true;
  const auto r = qo::train(small_task(9), cfg);
  CHECK(r.unary_bias.size() == 2);
  CHECK_FALSE(r.unary_bias.isZero(0.0));
}

TEST_CASE("solver failures surface with the step") {
  TrainConfig cfg;
  cfg.steps = 2;
  cfg.solver.max_iterations = 1;
  cfg.solver.tolerance = 1e-14;
  try {
    qo::train(small_task(10), cfg);
    FAIL("expected SolverFailure");
  } catch (const qo::SolverFailure& e) {
    // Step 0 solves lambda I, which one iteration handles exactly.
    CHECK(e.step() == 1);
  }
}
