#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ocon/models.hpp"

namespace ocon {

struct TrainingJob {
  int class_id = 0;
  std::vector<TrainingExample> task;
  Topology topology;
  TrainingConfig config;
};

enum class Allocation { RoundRobin, LargestFirst };

const char* to_string(Allocation allocation) noexcept;
Allocation parse_allocation(std::string_view name);

struct PoolConfig {
  std::size_t workers = 1;
  Allocation allocation = Allocation::RoundRobin;
};

// assignment[w] lists indices into the job list, in execution order.
using Assignment = std::vector<std::vector<std::size_t>>;

// round_robin: job i goes to worker i mod W. largest_first: jobs by
// descending task size (ties by original order), each to the currently
// least-loaded worker (ties by lowest worker index).
Assignment allocate(std::span<const TrainingJob> jobs, const PoolConfig& pool);

std::vector<std::size_t> worker_loads(std::span<const TrainingJob> jobs, const Assignment& assignment);

struct JobFailure {
  int class_id = 0;
  std::string message;
  std::int64_t epoch = 0;  // divergence epoch, 0 when not applicable
};

// dispatch_wait: time between the worker becoming free and the job starting,
// the local stand-in for transfer overhead.
struct JobTiming {
  int class_id = 0;
  std::size_t worker = 0;
  double dispatch_wait_seconds = 0.0;
  double compute_seconds = 0.0;
};

struct PoolResult {
  std::vector<ClassModel> models;     // ascending class_id
  std::vector<JobFailure> failures;   // ascending class_id
  std::vector<JobTiming> timings;     // ascending class_id
  double wall_seconds = 0.0;

  double overhead_ratio() const;
};

// Runs every worker's list on its own thread. Jobs share no mutable state, so
// the models do not depend on the worker count. A failing job is reported in
// `failures` and the others still complete.
PoolResult run_pool(std::vector<TrainingJob> jobs, const PoolConfig& pool);

// Replicated weight persistence. Each root receives an identical
// `class_<id>.wts`.
struct WeightStore {
  std::vector<std::filesystem::path> roots;
};

struct StoreFailure {
  std::filesystem::path root;
  std::string message;
};

struct PersistResult {
  std::vector<std::filesystem::path> written;
  std::vector<StoreFailure> failures;
};

std::string weight_file_name(int class_id);
inline constexpr const char* kAconFileName = "acon.wts";

// OCONW1 text: header, layer sizes, per layer W row-major then b, then a
// `CRC32 <hex>` line over all preceding bytes.
std::string format_class_weights(int class_id, const Weights& weights);
// Throws ChecksumMismatch or ParseError.
ClassModel parse_class_weights(std::string_view text);

std::string format_acon_weights(const AconModel& model);
AconModel parse_acon_weights(std::string_view text);

// Succeeds when at least one replica was written; otherwise throws StoreError
// listing every root.
PersistResult persist(const ClassModel& model, const WeightStore& store);
PersistResult persist(const AconModel& model, const WeightStore& store);

struct LoadReport {
  std::filesystem::path source;
  std::vector<StoreFailure> skipped;  // replicas tried before `source`
};

// Tries roots in order and returns the first replica whose checksum
// validates. Throws WeightsUnavailable (value = class id) when none does.
ClassModel load(int class_id, const WeightStore& store, LoadReport* report = nullptr);
AconModel load_acon(const WeightStore& store, LoadReport* report = nullptr);

}  // namespace ocon
