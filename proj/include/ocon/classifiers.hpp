#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "ocon/models.hpp"
#include "ocon/parallel_trainer.hpp"

namespace ocon {

// Instrumentation hooks for the exhaustive-testing checks.
struct EvalCounters {
  std::atomic<std::uint64_t> subnet_evaluations{0};
  std::atomic<std::uint64_t> class_evaluations{0};
};

// Class-one (target 1) are the samples of class_id, class-two (target 0)
// everything else; order preserved. With max_negatives > 0 a seeded subset of
// the negatives is kept, still in original order.
std::vector<TrainingExample> build_ocon_task(int class_id, std::span<const LabeledFeature> samples,
                                             std::size_t max_negatives = 0,
                                             std::uint64_t seed = 0);

struct AconTask {
  std::vector<int> class_ids;  // ascending
  std::vector<TrainingExample> examples;
};

// One-hot targets in ascending class_id order.
AconTask build_acon_task(std::span<const LabeledFeature> samples);

inline constexpr std::size_t kDefaultOconHidden = 20;
inline constexpr std::size_t kDefaultAconHidden = 60;

struct OconOptions {
  std::size_t hidden = kDefaultOconHidden;
  TrainingConfig config;
  std::size_t max_negatives = 0;
  PoolConfig pool;
};

struct OconTraining {
  OconEnsemble ensemble;
  std::vector<JobFailure> failures;
  std::vector<JobTiming> timings;
  double wall_seconds = 0.0;
};

std::vector<int> distinct_classes(std::span<const LabeledFeature> samples);

// Every subnet shares the same topology [m, hidden, 1]; the class's job seed
// is config.seed + class_id.
std::vector<TrainingJob> make_ocon_jobs(std::span<const LabeledFeature> samples,
                                        const OconOptions& options);
OconTraining train_ocon(std::span<const LabeledFeature> samples, const OconOptions& options);

struct AconOptions {
  std::size_t hidden = kDefaultAconHidden;
  TrainingConfig config;
};

AconModel train_acon(std::span<const LabeledFeature> samples, const AconOptions& options);

struct Classification {
  int class_id = 0;
  std::vector<double> scores;  // one per class, in the model's class order
};

// Runs every subnet, even after a confident one; argmax with ties to the
// lowest class id.
Classification classify_ocon(const OconEnsemble& ensemble, std::span<const double> features,
                             EvalCounters* counters = nullptr);

Classification classify_acon(const AconModel& model, std::span<const double> features);

inline constexpr double kDefaultThreshold = 0.5;

// Accept when score >= threshold.
bool verify(double score, double threshold = kDefaultThreshold);

}  // namespace ocon
