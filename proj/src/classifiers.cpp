#include "ocon/classifiers.hpp"

#include <algorithm>
#include <set>

#include "ocon/error.hpp"
#include "ocon/random.hpp"

namespace ocon {

std::vector<int> OconEnsemble::class_ids() const {
  std::vector<int> ids;
  ids.reserve(models.size());
  for (const auto& m : models) ids.push_back(m.class_id);
  return ids;
}

const ClassModel* OconEnsemble::find(int class_id) const {
  for (const auto& m : models) {
    if (m.class_id == class_id) return &m;
  }
  return nullptr;
}

std::vector<int> distinct_classes(std::span<const LabeledFeature> samples) {
  std::set<int> ids;
  for (const auto& s : samples) ids.insert(s.class_id);
  return {ids.begin(), ids.end()};
}

std::vector<TrainingExample> build_ocon_task(int class_id, std::span<const LabeledFeature> samples,
                                             std::size_t max_negatives, std::uint64_t seed) {
  std::vector<std::size_t> negatives;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].class_id == class_id) {
      ++positives;
    } else {
      negatives.push_back(i);
    }
  }
  if (positives == 0) throw Error(ErrorCode::EmptyClass, "no samples of class " + std::to_string(class_id));
  if (negatives.empty()) {
    throw Error(ErrorCode::NoCounterexamples, "no samples outside class " + std::to_string(class_id));
  }

  std::vector<bool> keep(samples.size(), true);
  if (max_negatives > 0 && negatives.size() > max_negatives) {
    // Partial Fisher-Yates picks which negatives survive.
    Rng rng(seed);
    for (std::size_t i = 0; i < max_negatives; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(negatives.size() - i));
      std::swap(negatives[i], negatives[j]);
    }
    for (std::size_t i = max_negatives; i < negatives.size(); ++i) keep[negatives[i]] = false;
  }

  std::vector<TrainingExample> task;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!keep[i]) continue;
    task.push_back({samples[i].features, {samples[i].class_id == class_id ? 1.0 : 0.0}});
  }
  return task;
}

AconTask build_acon_task(std::span<const LabeledFeature> samples) {
  AconTask task;
  task.class_ids = distinct_classes(samples);
  if (task.class_ids.size() < 2) {
    throw Error(ErrorCode::InsufficientClasses, "ACON needs at least 2 classes, got " + std::to_string(task.class_ids.size()));
  }
  task.examples.reserve(samples.size());
  for (const auto& s : samples) {
    const auto pos = std::lower_bound(task.class_ids.begin(), task.class_ids.end(), s.class_id) - task.class_ids.begin();
    std::vector<double> target(task.class_ids.size(), 0.0);
    target[static_cast<std::size_t>(pos)] = 1.0;
    task.examples.push_back({s.features, std::move(target)});
  }
  return task;
}

namespace {

std::size_t feature_dim(std::span<const LabeledFeature> samples) {
  if (samples.empty()) throw Error(ErrorCode::InsufficientData, "no training samples");
  const std::size_t dim = samples.front().features.size();
  for (const auto& s : samples) {
    if (s.features.size() != dim) throw Error(ErrorCode::DimensionMismatch, "feature vectors differ in length");
  }
  return dim;
}

}  // namespace

std::vector<TrainingJob> make_ocon_jobs(std::span<const LabeledFeature> samples, const OconOptions& options) {
  const std::size_t dim = feature_dim(samples);
  const Topology topology{{dim, options.hidden, 1}};
  validate(topology);
  std::vector<TrainingJob> jobs;
  for (int class_id : distinct_classes(samples)) {
    TrainingJob job;
    job.class_id = class_id;
    job.topology = topology;
    job.config = options.config;
    job.config.seed = options.config.seed + static_cast<std::uint64_t>(class_id);
    job.task = build_ocon_task(class_id, samples, options.max_negatives, job.config.seed);
    jobs.push_back(std::move(job));
  }
  return jobs;
}

OconTraining train_ocon(std::span<const LabeledFeature> samples, const OconOptions& options) {
  validate(options.config);
  auto jobs = make_ocon_jobs(samples, options);
  const std::size_t dim = jobs.front().topology.inputs();
  PoolResult pool = run_pool(std::move(jobs), options.pool);
  OconTraining out;
  out.ensemble.models = std::move(pool.models);
  out.ensemble.feature_dim = dim;
  out.failures = std::move(pool.failures);
  out.timings = std::move(pool.timings);
  out.wall_seconds = pool.wall_seconds;
  return out;
}

AconModel train_acon(std::span<const LabeledFeature> samples, const AconOptions& options) {
  const std::size_t dim = feature_dim(samples);
  AconTask task = build_acon_task(samples);
  AconModel model;
  model.class_ids = task.class_ids;
  model.topology = Topology{{dim, options.hidden, task.class_ids.size()}};
  auto result = train(model.topology, task.examples, options.config);
  model.weights = std::move(result.weights);
  model.trace = std::move(result.trace);
  return model;
}

namespace {

int argmax_class(std::span<const double> scores, std::span<const int> ids) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best] || (scores[i] == scores[best] && ids[i] < ids[best])) best = i;
  }
  return ids[best];
}

}  // namespace

Classification classify_ocon(const OconEnsemble& ensemble, std::span<const double> features,
                             EvalCounters* counters) {
  if (ensemble.models.empty()) throw Error(ErrorCode::InvalidConfig, "empty ensemble");
  if (features.size() != ensemble.feature_dim) {
    throw Error(ErrorCode::DimensionMismatch, "feature vector has length " + std::to_string(features.size()) +
                                                  ", ensemble expects " + std::to_string(ensemble.feature_dim));
  }
  Classification out;
  out.scores.reserve(ensemble.models.size());
  for (const auto& model : ensemble.models) {
    out.scores.push_back(forward(model.weights, features).output()[0]);
    if (counters) ++counters->subnet_evaluations;
  }
  const auto ids = ensemble.class_ids();
  out.class_id = argmax_class(out.scores, ids);
  return out;
}

Classification classify_acon(const AconModel& model, std::span<const double> features) {
  Classification out;
  out.scores = forward(model.weights, features).output();
  out.class_id = argmax_class(out.scores, model.class_ids);
  return out;
}

bool verify(double score, double threshold) { return score >= threshold; }

}  // namespace ocon
