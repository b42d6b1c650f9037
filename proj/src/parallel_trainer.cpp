#include "ocon/parallel_trainer.hpp"

#include <zlib.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <set>
#include <thread>

#include "ocon/error.hpp"
#include "text_util.hpp"

namespace ocon {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const char* to_string(Allocation allocation) noexcept {
  return allocation == Allocation::RoundRobin ? "round_robin" : "largest_first";
}

Allocation parse_allocation(std::string_view name) {
  if (name == "round_robin") return Allocation::RoundRobin;
  if (name == "largest_first") return Allocation::LargestFirst;
  throw Error(ErrorCode::InvalidConfig, "unknown allocation policy '" + std::string(name) + "'");
}

Assignment allocate(std::span<const TrainingJob> jobs, const PoolConfig& pool) {
  if (pool.workers < 1) throw Error(ErrorCode::InvalidConfig, "pool needs at least one worker");
  if (jobs.empty()) throw Error(ErrorCode::InvalidConfig, "no jobs to allocate");
  Assignment assignment(pool.workers);
  if (pool.allocation == Allocation::RoundRobin) {
    for (std::size_t i = 0; i < jobs.size(); ++i) assignment[i % pool.workers].push_back(i);
    return assignment;
  }
  std::vector<std::size_t> order(jobs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return jobs[a].task.size() > jobs[b].task.size(); });
  std::vector<std::size_t> load(pool.workers, 0);
  for (std::size_t job : order) {
    const auto worker = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    assignment[worker].push_back(job);
    load[worker] += jobs[job].task.size();
  }
  return assignment;
}

std::vector<std::size_t> worker_loads(std::span<const TrainingJob> jobs, const Assignment& assignment) {
  std::vector<std::size_t> loads;
  for (const auto& list : assignment) {
    std::size_t sum = 0;
    for (std::size_t j : list) sum += jobs[j].task.size();
    loads.push_back(sum);
  }
  return loads;
}

double PoolResult::overhead_ratio() const {
  double wait = 0.0, compute = 0.0;
  for (const auto& t : timings) {
    wait += t.dispatch_wait_seconds;
    compute += t.compute_seconds;
  }
  return compute > 0.0 ? wait / compute : 0.0;
}

namespace {

struct JobSlot {
  std::optional<ClassModel> model;
  std::optional<JobFailure> failure;
  JobTiming timing;
};

void run_job(const TrainingJob& job, JobSlot& slot) {
  try {
    auto result = train(job.topology, job.task, job.config);
    slot.model = ClassModel{job.class_id, job.topology, std::move(result.weights), std::move(result.trace)};
  } catch (const Error& e) {
    slot.failure = JobFailure{job.class_id, e.what(), e.code() == ErrorCode::Diverged ? e.value() : 0};
  } catch (const std::exception& e) {
    slot.failure = JobFailure{job.class_id, e.what(), 0};
  }
}

}  // namespace

PoolResult run_pool(std::vector<TrainingJob> jobs, const PoolConfig& pool) {
  std::set<int> ids;
  for (const auto& job : jobs) {
    if (job.task.empty()) throw Error(ErrorCode::InvalidConfig, "job for class " + std::to_string(job.class_id) + " has an empty task");
    if (!ids.insert(job.class_id).second) {
      throw Error(ErrorCode::InvalidConfig, "duplicate job for class " + std::to_string(job.class_id));
    }
  }
  const Assignment assignment = allocate(jobs, pool);
  std::vector<JobSlot> slots(jobs.size());

  const auto started = Clock::now();
  {
    std::vector<std::jthread> workers;
    workers.reserve(assignment.size());
    for (std::size_t w = 0; w < assignment.size(); ++w) {
      if (assignment[w].empty()) continue;
      workers.emplace_back([&, w] {
        auto free_since = started;
        for (std::size_t j : assignment[w]) {
          const auto begin = Clock::now();
          run_job(jobs[j], slots[j]);
          const auto end = Clock::now();
          slots[j].timing = JobTiming{jobs[j].class_id, w,
                                      std::chrono::duration<double>(begin - free_since).count(),
                                      std::chrono::duration<double>(end - begin).count()};
          free_since = end;
        }
      });
    }
  }

  PoolResult result;
  result.wall_seconds = std::chrono::duration<double>(Clock::now() - started).count();
  std::vector<std::size_t> order(jobs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return jobs[a].class_id < jobs[b].class_id; });
  for (std::size_t j : order) {
    if (slots[j].model) result.models.push_back(std::move(*slots[j].model));
    if (slots[j].failure) result.failures.push_back(std::move(*slots[j].failure));
    result.timings.push_back(slots[j].timing);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Weight files

std::string weight_file_name(int class_id) { return "class_" + std::to_string(class_id) + ".wts"; }

namespace {

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

std::string with_crc(std::string body) {
  char trailer[32];
  std::snprintf(trailer, sizeof trailer, "CRC32 %08x\n", crc_of(body));
  return body + trailer;
}

// Returns the checksummed body after validating the trailer.
std::string_view checked_body(std::string_view text) {
  if (!text.empty() && text.back() == '\n') text.remove_suffix(1);
  const std::size_t nl = text.rfind('\n');
  const std::size_t trailer_at = nl == std::string_view::npos ? 0 : nl + 1;
  const std::string_view trailer = text.substr(trailer_at);
  const std::string_view body = text.substr(0, trailer_at);
  unsigned stored = 0;
  char hex[9] = {};
  if (trailer.size() != 14 || trailer.substr(0, 6) != "CRC32 ") {
    throw Error(ErrorCode::ChecksumMismatch, "missing or damaged CRC32 trailer");
  }
  std::copy(trailer.begin() + 6, trailer.end(), hex);
  if (std::sscanf(hex, "%8x", &stored) != 1) throw Error(ErrorCode::ChecksumMismatch, "unreadable CRC32 value");
  const std::uint32_t actual = crc_of(body);
  if (actual != stored) {
    char msg[64];
    std::snprintf(msg, sizeof msg, "stored %08x, computed %08x", stored, actual);
    throw Error(ErrorCode::ChecksumMismatch, msg);
  }
  return body;
}

void append_weights(std::string& out, const Weights& weights) {
  bool first = true;
  for (auto size : weights.topology().layer_sizes) {
    if (!first) out += ' ';
    out += std::to_string(size);
    first = false;
  }
  out += '\n';
  auto line = [&out](const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out += ' ';
      out += detail::format_double(values[i]);
    }
    out += '\n';
  };
  for (const auto& layer : weights.layers) {
    line(layer.w);
    line(layer.b);
  }
}

// Layer sizes run to the end of their line, so read that line separately.
Weights read_weights(std::string_view body, std::size_t sizes_line_start) {
  const std::size_t eol = body.find('\n', sizes_line_start);
  if (eol == std::string_view::npos) throw Error(ErrorCode::ParseError, "missing layer sizes");
  detail::Tokens size_tokens(body.substr(sizes_line_start, eol - sizes_line_start));
  Topology topology;
  while (!size_tokens.done()) topology.layer_sizes.push_back(size_tokens.next_int<std::size_t>());
  try {
    validate(topology);
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  Weights weights = zero_weights(topology);
  detail::Tokens tokens(body.substr(eol + 1));
  for (auto& layer : weights.layers) {
    for (auto& v : layer.w) v = tokens.next_double();
    for (auto& v : layer.b) v = tokens.next_double();
  }
  if (!tokens.done()) throw Error(ErrorCode::ParseError, "trailing data after weights");
  return weights;
}

std::size_t line_end(std::string_view body, std::size_t from) {
  const std::size_t eol = body.find('\n', from);
  if (eol == std::string_view::npos) throw Error(ErrorCode::ParseError, "truncated header");
  return eol;
}

}  // namespace

std::string format_class_weights(int class_id, const Weights& weights) {
  std::string body = "OCONW1 " + std::to_string(class_id) + "\n";
  append_weights(body, weights);
  return with_crc(std::move(body));
}

ClassModel parse_class_weights(std::string_view text) {
  const std::string_view body = checked_body(text);
  const std::size_t eol = line_end(body, 0);
  detail::Tokens header(body.substr(0, eol));
  if (header.done() || header.next() != "OCONW1") throw Error(ErrorCode::ParseError, "missing OCONW1 header");
  ClassModel model;
  model.class_id = header.next_int<int>();
  if (!header.done()) throw Error(ErrorCode::ParseError, "unexpected tokens in header");
  model.weights = read_weights(body, eol + 1);
  model.topology = model.weights.topology();
  if (model.topology.outputs() != 1) throw Error(ErrorCode::ParseError, "class network must have one output");
  return model;
}

std::string format_acon_weights(const AconModel& model) {
  std::string body = "ACONW1 " + std::to_string(model.class_ids.size());
  for (int id : model.class_ids) body += " " + std::to_string(id);
  body += '\n';
  append_weights(body, model.weights);
  return with_crc(std::move(body));
}

AconModel parse_acon_weights(std::string_view text) {
  const std::string_view body = checked_body(text);
  const std::size_t eol = line_end(body, 0);
  detail::Tokens header(body.substr(0, eol));
  if (header.done() || header.next() != "ACONW1") throw Error(ErrorCode::ParseError, "missing ACONW1 header");
  AconModel model;
  const auto k = header.next_int<std::size_t>();
  for (std::size_t i = 0; i < k; ++i) model.class_ids.push_back(header.next_int<int>());
  if (!header.done()) throw Error(ErrorCode::ParseError, "unexpected tokens in header");
  model.weights = read_weights(body, eol + 1);
  model.topology = model.weights.topology();
  if (model.topology.outputs() != k) throw Error(ErrorCode::ParseError, "output count does not match class list");
  return model;
}

namespace {

PersistResult replicate(const std::string& file_name, const std::string& contents, const WeightStore& store) {
  if (store.roots.empty()) throw Error(ErrorCode::StoreError, "weight store has no roots");
  PersistResult result;
  for (const auto& root : store.roots) {
    try {
      std::error_code ec;
      fs::create_directories(root, ec);
      if (ec) throw Error(ErrorCode::StoreError, ec.message());
      const fs::path target = root / file_name;
      const fs::path temp = root / (file_name + ".tmp");
      detail::write_file(temp, contents);
      fs::rename(temp, target, ec);
      if (ec) throw Error(ErrorCode::StoreError, ec.message());
      result.written.push_back(target);
    } catch (const std::exception& e) {
      result.failures.push_back({root, e.what()});
    }
  }
  if (result.written.empty()) {
    std::string msg = "no replica of " + file_name + " could be written:";
    for (const auto& f : result.failures) msg += " [" + f.root.string() + ": " + f.message + "]";
    throw Error(ErrorCode::StoreError, msg);
  }
  return result;
}

template <class Model, class Parse, class Accept>
Model load_first_valid(const std::string& file_name, const WeightStore& store, LoadReport* report, Parse parse,
                       Accept accept, int class_id) {
  std::vector<StoreFailure> skipped;
  for (const auto& root : store.roots) {
    const fs::path path = root / file_name;
    try {
      if (!fs::exists(path)) throw Error(ErrorCode::FileError, "missing " + path.string());
      Model model = parse(detail::read_file(path));
      accept(model);
      if (report) *report = LoadReport{path, std::move(skipped)};
      return model;
    } catch (const std::exception& e) {
      skipped.push_back({root, e.what()});
    }
  }
  std::string msg = "no valid replica of " + file_name;
  for (const auto& s : skipped) msg += " [" + s.root.string() + ": " + s.message + "]";
  if (report) *report = LoadReport{{}, std::move(skipped)};
  throw Error(ErrorCode::WeightsUnavailable, msg, class_id);
}

}  // namespace

PersistResult persist(const ClassModel& model, const WeightStore& store) {
  return replicate(weight_file_name(model.class_id), format_class_weights(model.class_id, model.weights), store);
}

PersistResult persist(const AconModel& model, const WeightStore& store) {
  return replicate(kAconFileName, format_acon_weights(model), store);
}

ClassModel load(int class_id, const WeightStore& store, LoadReport* report) {
  return load_first_valid<ClassModel>(
      weight_file_name(class_id), store, report, [](const std::string& t) { return parse_class_weights(t); },
      [class_id](const ClassModel& m) {
        if (m.class_id != class_id) {
          throw Error(ErrorCode::ParseError, "file identifies class " + std::to_string(m.class_id));
        }
      },
      class_id);
}

AconModel load_acon(const WeightStore& store, LoadReport* report) {
  return load_first_valid<AconModel>(
      kAconFileName, store, report, [](const std::string& t) { return parse_acon_weights(t); },
      [](const AconModel&) {}, 0);
}

}  // namespace ocon
