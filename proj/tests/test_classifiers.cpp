#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "ocon/classifiers.hpp"
#include "ocon/random.hpp"
#include "test_support.hpp"

using namespace ocon;
using ocon::testing::code_of;
using ocon::testing::constant_class_model;
using ocon::testing::constant_output_weights;

namespace {

std::vector<LabeledFeature> labeled(std::initializer_list<int> classes, std::size_t dim = 2) {
  std::vector<LabeledFeature> out;
  double v = 0.0;
  for (int c : classes) out.push_back({std::vector<double>(dim, v += 1.0), c});
  return out;
}

// Well separated Gaussian blobs, one per class.
std::vector<LabeledFeature> blobs(int classes, int per_class, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> centres(static_cast<std::size_t>(classes), std::vector<double>(dim));
  for (auto& c : centres)
    for (auto& x : c) x = rng.uniform(-3.0, 3.0);
  std::vector<LabeledFeature> out;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      LabeledFeature f{centres[static_cast<std::size_t>(c)], c + 1};
      for (auto& x : f.features) x += 0.1 * rng.normal();
      out.push_back(std::move(f));
    }
  }
  return out;
}

OconEnsemble constant_ensemble(const std::vector<std::pair<int, double>>& outputs, std::size_t dim) {
  OconEnsemble e;
  e.feature_dim = dim;
  for (const auto& [id, out] : outputs) e.models.push_back(constant_class_model(id, dim, out));
  return e;
}

AconModel constant_acon(std::vector<int> ids, std::vector<double> outputs, std::size_t dim) {
  AconModel m;
  m.class_ids = std::move(ids);
  m.weights = constant_output_weights(dim, 2, outputs);
  m.topology = m.weights.topology();
  return m;
}

}  // namespace

TEST_CASE("build_ocon_task relabels positives and negatives in order") {
  const auto samples = labeled({1, 2, 1, 2, 2});
  const auto task = build_ocon_task(1, samples);
  REQUIRE(task.size() == 5);
  const std::vector<double> expect = {1, 0, 1, 0, 0};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(task[i].target == std::vector<double>{expect[i]});
    CHECK(task[i].input == samples[i].features);
  }

  std::vector<LabeledFeature> ten;
  for (int c = 1; c <= 10; ++c)
    for (int i = 0; i < 20; ++i) ten.push_back({{double(c), double(i)}, c});
  const auto seven = build_ocon_task(7, ten);
  CHECK(std::count_if(seven.begin(), seven.end(), [](const auto& ex) { return ex.target[0] == 1.0; }) == 20);
  CHECK(std::count_if(seven.begin(), seven.end(), [](const auto& ex) { return ex.target[0] == 0.0; }) == 180);

  CHECK(code_of([&] { build_ocon_task(3, samples); }) == ErrorCode::EmptyClass);
  const auto single = labeled({4, 4, 4});
  CHECK(code_of([&] { build_ocon_task(4, single); }) == ErrorCode::NoCounterexamples);
}

TEST_CASE("task target multiset matches class counts for every class") {
  Rng rng(6);
  std::vector<LabeledFeature> samples;
  std::map<int, int> count;
  for (int i = 0; i < 120; ++i) {
    const int c = 1 + static_cast<int>(rng.below(7));
    samples.push_back({{rng.uniform()}, c});
    ++count[c];
  }
  for (const auto& [c, n] : count) {
    const auto task = build_ocon_task(c, samples);
    REQUIRE(task.size() == samples.size());
    const auto ones = std::count_if(task.begin(), task.end(), [](const auto& ex) { return ex.target[0] == 1.0; });
    const auto zeros = std::count_if(task.begin(), task.end(), [](const auto& ex) { return ex.target[0] == 0.0; });
    CHECK(ones == n);
    CHECK(zeros == 120 - n);
  }
}

TEST_CASE("negative subsampling keeps every positive and a seeded subset") {
  std::vector<LabeledFeature> samples;
  for (int c = 1; c <= 5; ++c)
    for (int i = 0; i < 10; ++i) samples.push_back({{double(c * 100 + i)}, c});
  const auto a = build_ocon_task(2, samples, 15, 3);
  const auto b = build_ocon_task(2, samples, 15, 3);
  REQUIRE(a.size() == 25);
  CHECK(std::count_if(a.begin(), a.end(), [](const auto& ex) { return ex.target[0] == 1.0; }) == 10);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].input == b[i].input);
  // Original order survives.
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1].input[0] < a[i].input[0]);
  const auto c = build_ocon_task(2, samples, 15, 4);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].input != c[i].input;
  CHECK(differs);
  CHECK(build_ocon_task(2, samples, 1000, 3).size() == 50);
}

TEST_CASE("build_acon_task one-hot targets") {
  const auto samples = labeled({3, 1, 2, 3});
  const auto task = build_acon_task(samples);
  CHECK(task.class_ids == std::vector<int>{1, 2, 3});
  CHECK(task.examples[2].target == std::vector<double>{0, 1, 0});
  CHECK(task.examples[0].target == std::vector<double>{0, 0, 1});
  for (const auto& ex : task.examples) {
    double sum = 0.0;
    for (double t : ex.target) sum += t;
    CHECK(sum == 1.0);
  }

  std::vector<LabeledFeature> ten;
  for (int c = 1; c <= 10; ++c) ten.push_back({{0.0}, c});
  CHECK(build_acon_task(ten).examples[0].target.size() == 10);

  const auto one = labeled({5, 5});
  CHECK(code_of([&] { build_acon_task(one); }) == ErrorCode::InsufficientClasses);
}

TEST_CASE("OCON separates two linearly separable classes") {
  const auto samples = blobs(2, 10, 3, 1);
  OconOptions options;
  options.hidden = 4;
  options.config.goal = 1e-3;
  options.config.max_epochs = 20000;
  const auto trained = train_ocon(samples, options);
  CHECK(trained.failures.empty());
  REQUIRE(trained.ensemble.models.size() == 2);
  for (const auto& m : trained.ensemble.models) {
    CHECK(m.trace.goal_met);
    CHECK(m.topology == Topology{{3, 4, 1}});
  }
  for (const auto& s : samples) CHECK(classify_ocon(trained.ensemble, s.features).class_id == s.class_id);
}

TEST_CASE("OCON ensemble on ten classes is deterministic with distinct traces") {
  const auto samples = blobs(10, 6, 5, 2);
  OconOptions options;
  options.hidden = 6;
  options.config.goal = 1e-2;
  options.config.max_epochs = 3000;
  const auto a = train_ocon(samples, options);
  const auto b = train_ocon(samples, options);
  REQUIRE(a.ensemble.models.size() == 10);
  CHECK(a.ensemble.class_ids() == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(a.ensemble.models[i].weights == b.ensemble.models[i].weights);
    CHECK(a.ensemble.models[i].trace.mse_history == b.ensemble.models[i].trace.mse_history);
    CHECK(a.ensemble.models[i].topology == a.ensemble.models[0].topology);
  }
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = i + 1; j < 10; ++j)
      CHECK(a.ensemble.models[i].trace.mse_history != a.ensemble.models[j].trace.mse_history);

  std::size_t right = 0;
  for (const auto& s : samples) right += classify_ocon(a.ensemble, s.features).class_id == s.class_id;
  CHECK(right >= samples.size() * 95 / 100);
}

TEST_CASE("make_ocon_jobs seeds each class independently") {
  const auto samples = blobs(3, 2, 2, 3);
  OconOptions options;
  options.config.seed = 100;
  const auto jobs = make_ocon_jobs(samples, options);
  REQUIRE(jobs.size() == 3);
  CHECK(jobs[0].config.seed == 101);
  CHECK(jobs[2].config.seed == 103);
  CHECK(jobs[1].topology == Topology{{2, kDefaultOconHidden, 1}});
}

TEST_CASE("classify_ocon picks the highest score and runs every subnet") {
  std::vector<std::pair<int, double>> outs;
  for (int c = 1; c <= 5; ++c) outs.emplace_back(c, c == 3 ? 0.9 : 0.1);
  const auto e = constant_ensemble(outs, 2);
  EvalCounters counters;
  const std::vector<double> x = {0.3, -0.2};
  const auto r = classify_ocon(e, x, &counters);
  CHECK(r.class_id == 3);
  CHECK(r.scores.size() == 5);
  CHECK(r.scores[2] == doctest::Approx(0.9));
  CHECK(counters.subnet_evaluations == 5);

  // The first subnet is already confident; the rest still run.
  const auto early = constant_ensemble({{1, 0.99}, {2, 0.1}, {3, 0.1}, {4, 0.1}}, 2);
  EvalCounters early_counters;
  CHECK(classify_ocon(early, x, &early_counters).class_id == 1);
  CHECK(early_counters.subnet_evaluations == 4);

  const auto tie = constant_ensemble({{1, 0.2}, {2, 0.7}, {5, 0.7}, {6, 0.1}}, 2);
  CHECK(classify_ocon(tie, x).class_id == 2);

  const std::vector<double> wrong = {1.0};
  CHECK(code_of([&] { classify_ocon(e, wrong); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("classify_acon argmax and tie rule") {
  const std::vector<double> x = {0.0, 0.0};
  const auto m = constant_acon({4, 7, 9}, {0.1, 0.8, 0.3}, 2);
  const auto r = classify_acon(m, x);
  CHECK(r.class_id == 7);
  CHECK(r.scores.size() == 3);
  CHECK(classify_acon(constant_acon({4, 7, 9}, {0.4, 0.4, 0.4}, 2), x).class_id == 4);
  const std::vector<double> wrong = {1.0, 2.0, 3.0};
  CHECK(code_of([&] { classify_acon(m, wrong); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("argmax is invariant under increasing transforms of the scores") {
  Rng rng(13);
  const std::vector<double> x = {0.0};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<int, double>> outs, squashed;
    for (int c = 1; c <= 6; ++c) {
      const double p = rng.uniform(0.05, 0.95);
      outs.emplace_back(c, p);
      squashed.emplace_back(c, std::pow(p, 3.0));
    }
    CHECK(classify_ocon(constant_ensemble(outs, 1), x).class_id ==
          classify_ocon(constant_ensemble(squashed, 1), x).class_id);
  }
}

TEST_CASE("verify threshold boundary") {
  CHECK(verify(0.9, 0.5));
  CHECK(verify(0.5, 0.5));
  CHECK_FALSE(verify(0.4999, 0.5));
  CHECK(verify(0.5));
  CHECK_FALSE(verify(0.2, 0.3));
}
