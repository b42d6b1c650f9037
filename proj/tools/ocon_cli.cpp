// ocon: command-line front end over the C interface.
//
// Exit codes: 0 success, 1 fatal error, 2 invalid configuration,
// 3 partial failure (some classes failed or were unavailable).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ocon/ocon.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitPartial = 3;

// Desk-scale stopping rule; the full reference schedule is --goal 1e-6
// --max-epochs 700000.
constexpr double kDeskGoal = 1e-3;
constexpr std::uint64_t kDeskMaxEpochs = 20000;

constexpr const char* kStoreEnv = "OCON_STORE_ROOTS";

struct Failure {
  int exit_code;
};

int exit_code_for(ocon_status status) {
  switch (status) {
    case OCON_OK: return kExitOk;
    case OCON_ERR_INVALID_ARGUMENT:
    case OCON_ERR_INVALID_CONFIG: return kExitInvalid;
    case OCON_ERR_PARTIAL: return kExitPartial;
    default: return kExitFatal;
  }
}

// Throws Failure for anything but OK (and PARTIAL when allowed).
ocon_status check(ocon_status status, const char* what, bool allow_partial = false) {
  if (status == OCON_OK || (allow_partial && status == OCON_ERR_PARTIAL)) return status;
  std::cerr << "error: " << what << ": " << ocon_status_name(status) << ": " << ocon_last_error() << "\n";
  throw Failure{exit_code_for(status)};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using DatasetPtr = std::unique_ptr<ocon_dataset, Deleter<ocon_dataset, ocon_dataset_free>>;
using EigenPtr = std::unique_ptr<ocon_eigenspace, Deleter<ocon_eigenspace, ocon_eigenspace_free>>;
using EnsemblePtr = std::unique_ptr<ocon_ensemble, Deleter<ocon_ensemble, ocon_ensemble_free>>;
using AconPtr = std::unique_ptr<ocon_acon, Deleter<ocon_acon, ocon_acon_free>>;
using ReportPtr = std::unique_ptr<ocon_report, Deleter<ocon_report, ocon_report_free>>;

std::string take(char* s) {
  std::string out = s ? s : "";
  ocon_string_free(s);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    throw Failure{kExitFatal};
  }
}

struct DataArgs {
  std::string manifest;
  std::string eigen;
  std::size_t components = 40;
  std::size_t downsample = 1;
};

void add_data_options(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--manifest", args.manifest, "Dataset manifest (TSV: path, class_id, role)")->required();
  cmd->add_option("--eigen", args.eigen, "Eigenspace file; computed and saved here when absent")
      ->capture_default_str();
  cmd->add_option("--components", args.components, "Eigenspace components when computing")->capture_default_str();
  cmd->add_option("--downsample", args.downsample, "Integer block-average factor applied on load")
      ->capture_default_str();
}

DatasetPtr load_dataset(const DataArgs& args) {
  ocon_dataset* raw = nullptr;
  check(ocon_dataset_load(args.manifest.c_str(), args.downsample, &raw), "loading manifest");
  return DatasetPtr(raw);
}

fs::path eigen_path(const DataArgs& args) {
  if (!args.eigen.empty()) return args.eigen;
  return fs::path(args.manifest).parent_path() / "eigenspace.txt";
}

EigenPtr ensure_eigenspace(const DataArgs& args, const ocon_dataset* dataset) {
  const fs::path path = eigen_path(args);
  ocon_eigenspace* raw = nullptr;
  if (fs::exists(path)) {
    check(ocon_eigenspace_load(path.string().c_str(), &raw), "loading eigenspace");
    return EigenPtr(raw);
  }
  check(ocon_eigenspace_compute(dataset, args.components, &raw), "computing eigenspace");
  EigenPtr space(raw);
  check(ocon_eigenspace_save(space.get(), path.string().c_str()), "saving eigenspace");
  std::cerr << "eigenspace: " << ocon_eigenspace_components(space.get()) << " components of dimension "
            << ocon_eigenspace_dim(space.get()) << " written to " << path.string() << "\n";
  return space;
}

std::vector<std::string> resolve_roots(std::vector<std::string> roots) {
  if (!roots.empty()) return roots;
  if (const char* env = std::getenv(kStoreEnv); env && *env) {
    std::string value = env;
    std::size_t start = 0;
    while (start <= value.size()) {
      const std::size_t colon = value.find(':', start);
      const std::string part = value.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
      if (!part.empty()) roots.push_back(part);
      if (colon == std::string::npos) break;
      start = colon + 1;
    }
  }
  if (roots.empty()) roots.push_back("weights");
  return roots;
}

std::vector<const char*> c_strings(const std::vector<std::string>& values) {
  std::vector<const char*> out;
  for (const auto& v : values) out.push_back(v.c_str());
  return out;
}

int mode_of(const std::string& mode) { return mode == "acon" ? OCON_MODE_ACON : OCON_MODE_OCON; }

// ---------------------------------------------------------------------------

struct SynthArgs {
  int classes = 10;
  int train = 20;
  int test = 20;
  std::size_t side = 16;
  std::uint64_t seed = 1;
  std::string out = "data";
};

int cmd_synth(const SynthArgs& a) {
  ocon_dataset* raw = nullptr;
  check(ocon_dataset_synthesize(a.classes, a.train, a.test, a.side, a.seed, &raw), "synthesizing dataset");
  DatasetPtr dataset(raw);
  check(ocon_dataset_write(dataset.get(), a.out.c_str()), "writing dataset");
  std::cout << "wrote " << ocon_dataset_count(dataset.get(), OCON_ROLE_TRAIN) << " train + "
            << ocon_dataset_count(dataset.get(), OCON_ROLE_TEST) << " test images and "
            << (fs::path(a.out) / "manifest.tsv").string() << "\n";
  return kExitOk;
}

int cmd_eigen(const DataArgs& a) {
  DatasetPtr dataset = load_dataset(a);
  ocon_eigenspace* raw = nullptr;
  check(ocon_eigenspace_compute(dataset.get(), a.components, &raw), "computing eigenspace");
  EigenPtr space(raw);
  const fs::path path = eigen_path(a);
  check(ocon_eigenspace_save(space.get(), path.string().c_str()), "saving eigenspace");
  std::cout << ocon_eigenspace_components(space.get()) << " components of dimension "
            << ocon_eigenspace_dim(space.get()) << " written to " << path.string() << "\n";
  return kExitOk;
}

struct TrainArgs {
  DataArgs data;
  std::string mode = "ocon";
  std::size_t workers = 1;
  std::string allocation = "round_robin";
  std::size_t hidden = 0;
  double lr = 0.05;
  double momentum = 0.9;
  double goal = kDeskGoal;
  std::uint64_t max_epochs = kDeskMaxEpochs;
  std::uint64_t seed = 1;
  std::size_t max_negatives = 0;
  std::vector<std::string> store;
  std::string traces = "traces";
};

constexpr double kOverheadWarning = 0.1;

int cmd_train(const TrainArgs& a) {
  DatasetPtr dataset = load_dataset(a.data);
  EigenPtr space = ensure_eigenspace(a.data, dataset.get());

  ocon_train_options options;
  ocon_train_options_init(&options, mode_of(a.mode));
  options.learning_rate = a.lr;
  options.momentum = a.momentum;
  options.goal = a.goal;
  options.max_epochs = a.max_epochs;
  options.seed = a.seed;
  if (a.hidden > 0) options.hidden = a.hidden;
  options.workers = a.workers;
  options.allocation = a.allocation == "largest_first" ? OCON_ALLOC_LARGEST_FIRST : OCON_ALLOC_ROUND_ROBIN;
  options.max_negatives = a.max_negatives;

  const auto roots = resolve_roots(a.store);
  const auto root_ptrs = c_strings(roots);
  std::error_code ec;
  fs::create_directories(a.traces, ec);
  if (ec) {
    std::cerr << "error: cannot create " << a.traces << ": " << ec.message() << "\n";
    return kExitFatal;
  }

  int exit_code = kExitOk;
  if (mode_of(a.mode) == OCON_MODE_ACON) {
    ocon_acon* raw = nullptr;
    check(ocon_acon_train(dataset.get(), space.get(), &options, &raw), "training ACON");
    AconPtr model(raw);
    char* warnings = nullptr;
    check(ocon_acon_persist(model.get(), root_ptrs.data(), root_ptrs.size(), &warnings), "persisting ACON weights");
    if (const auto w = take(warnings); !w.empty()) std::cerr << "warning: " << w;
    char* text = nullptr;
    check(ocon_acon_trace_csv(model.get(), &text), "rendering trace");
    write_text(fs::path(a.traces) / "trace_acon.csv", take(text));
    check(ocon_acon_training_summary(model.get(), OCON_FORMAT_CSV, &text), "rendering summary");
    write_text(fs::path(a.traces) / "training_summary_acon.csv", take(text));
    check(ocon_acon_training_summary(model.get(), OCON_FORMAT_TABLE, &text), "rendering summary");
    std::cout << take(text);
    return exit_code;
  }

  ocon_ensemble* raw = nullptr;
  const ocon_status status = check(ocon_ensemble_train(dataset.get(), space.get(), &options, &raw), "training OCON", true);
  EnsemblePtr ensemble(raw);
  if (status == OCON_ERR_PARTIAL) {
    exit_code = kExitPartial;
    for (std::size_t i = 0; i < ocon_ensemble_failure_count(ensemble.get()); ++i) {
      int class_id = 0;
      const char* message = nullptr;
      ocon_ensemble_failure(ensemble.get(), i, &class_id, &message);
      std::cerr << "class " << class_id << " failed: " << message << "\n";
    }
  }
  if (ocon_ensemble_size(ensemble.get()) > 0) {
    char* warnings = nullptr;
    check(ocon_ensemble_persist(ensemble.get(), root_ptrs.data(), root_ptrs.size(), &warnings),
          "persisting OCON weights");
    if (const auto w = take(warnings); !w.empty()) std::cerr << "warning: " << w;
  }

  std::vector<int> ids(ocon_ensemble_class_ids(ensemble.get(), nullptr, 0));
  ocon_ensemble_class_ids(ensemble.get(), ids.data(), ids.size());
  for (int id : ids) {
    char* text = nullptr;
    check(ocon_ensemble_trace_csv(ensemble.get(), id, &text), "rendering trace");
    write_text(fs::path(a.traces) / ("trace_class_" + std::to_string(id) + ".csv"), take(text));
  }
  char* text = nullptr;
  check(ocon_ensemble_training_summary(ensemble.get(), OCON_FORMAT_CSV, &text), "rendering summary");
  write_text(fs::path(a.traces) / "training_summary_ocon.csv", take(text));
  check(ocon_ensemble_training_summary(ensemble.get(), OCON_FORMAT_TABLE, &text), "rendering summary");
  std::cout << take(text);

  const double ratio = ocon_ensemble_overhead_ratio(ensemble.get());
  std::cout << "pool: " << a.workers << " worker(s), wall " << ocon_ensemble_wall_seconds(ensemble.get())
            << " s, dispatch/compute ratio " << ratio << "\n";
  if (ratio > kOverheadWarning) {
    std::cerr << "warning: dispatch overhead ratio " << ratio << " exceeds " << kOverheadWarning << "\n";
  }
  return exit_code;
}

struct EvalArgs {
  DataArgs data;
  std::string mode = "ocon";
  std::vector<std::string> store;
  std::string format = "table";
  std::string split = "test";
  std::size_t n_pos = 10;
  std::size_t n_neg = 10;
  std::uint64_t protocol_seed = 1;
  double threshold = 0.5;
};

int cmd_evaluate(const EvalArgs& a) {
  DatasetPtr dataset = load_dataset(a.data);
  EigenPtr space = ensure_eigenspace(a.data, dataset.get());
  const auto roots = resolve_roots(a.store);
  const auto root_ptrs = c_strings(roots);

  ocon_protocol protocol;
  ocon_protocol_init(&protocol);
  protocol.n_pos = a.n_pos;
  protocol.n_neg = a.n_neg;
  protocol.seed = a.protocol_seed;
  protocol.threshold = a.threshold;
  protocol.role = a.split == "train" ? OCON_ROLE_TRAIN : OCON_ROLE_TEST;
  const int format = a.format == "csv" ? OCON_FORMAT_CSV : OCON_FORMAT_TABLE;

  int exit_code = kExitOk;
  ocon_report* report_raw = nullptr;
  if (mode_of(a.mode) == OCON_MODE_ACON) {
    ocon_acon* raw = nullptr;
    check(ocon_acon_load(root_ptrs.data(), root_ptrs.size(), &raw), "loading ACON weights");
    AconPtr model(raw);
    check(ocon_evaluate_acon(model.get(), dataset.get(), space.get(), &protocol, &report_raw), "evaluating", true);
  } else {
    std::vector<int> ids(ocon_dataset_class_ids(dataset.get(), nullptr, 0));
    ocon_dataset_class_ids(dataset.get(), ids.data(), ids.size());
    ocon_ensemble* raw = nullptr;
    if (check(ocon_ensemble_load(ids.data(), ids.size(), root_ptrs.data(), root_ptrs.size(), &raw),
              "loading OCON weights", true) == OCON_ERR_PARTIAL) {
      exit_code = kExitPartial;
    }
    EnsemblePtr ensemble(raw);
    for (std::size_t i = 0; i < ocon_ensemble_failure_count(ensemble.get()); ++i) {
      int class_id = 0;
      const char* message = nullptr;
      ocon_ensemble_failure(ensemble.get(), i, &class_id, &message);
      std::cerr << "class " << class_id << ": " << message << "\n";
    }
    if (check(ocon_evaluate_ocon(ensemble.get(), dataset.get(), space.get(), &protocol, &report_raw), "evaluating",
              true) == OCON_ERR_PARTIAL) {
      exit_code = kExitPartial;
    }
  }
  ReportPtr report(report_raw);
  char* text = nullptr;
  check(ocon_report_render(report.get(), format, &text), "rendering report");
  std::cout << take(text);
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OCON/ACON face verification: synthesize data, build eigenspaces, train and evaluate"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a deterministic synthetic PGM dataset and manifest");
  synth_cmd->add_option("--classes", synth.classes, "Number of classes (>= 2)")->capture_default_str();
  synth_cmd->add_option("--train", synth.train, "Training images per class")->capture_default_str();
  synth_cmd->add_option("--test", synth.test, "Test images per class")->capture_default_str();
  synth_cmd->add_option("--side", synth.side, "Image side length in pixels")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output directory")->capture_default_str();

  DataArgs eigen;
  auto* eigen_cmd = app.add_subcommand("eigen", "Compute and save the eigenspace of the training images");
  add_data_options(eigen_cmd, eigen);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand(
      "train", "Train OCON subnets (in parallel) or one ACON network and store the weights.\n"
               "Defaults are desk-scale (goal 1e-3, 20000 epochs); the full reference run is\n"
               "--goal 1e-6 --max-epochs 700000.");
  add_data_options(train_cmd, train.data);
  train_cmd->add_option("--mode", train.mode, "ocon or acon")
      ->check(CLI::IsMember({"ocon", "acon"}))
      ->capture_default_str();
  train_cmd->add_option("--workers", train.workers, "Worker threads for OCON training")->capture_default_str();
  train_cmd->add_option("--allocation", train.allocation, "round_robin or largest_first")
      ->check(CLI::IsMember({"round_robin", "largest_first"}))
      ->capture_default_str();
  train_cmd->add_option("--hidden", train.hidden, "Hidden units (default 20 for OCON, 60 for ACON)");
  train_cmd->add_option("--lr", train.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--momentum", train.momentum, "Momentum in [0,1)")->capture_default_str();
  train_cmd->add_option("--goal", train.goal, "MSE performance goal")->capture_default_str();
  train_cmd->add_option("--max-epochs", train.max_epochs, "Epoch cap")->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "Weight initialization seed")->capture_default_str();
  train_cmd->add_option("--max-negatives", train.max_negatives, "Cap on negatives per OCON subnet (0 = all)")
      ->capture_default_str();
  train_cmd->add_option("--store", train.store, "Weight store root; repeat for replicas (env OCON_STORE_ROOTS)");
  train_cmd->add_option("--traces", train.traces, "Directory for convergence trace CSVs")->capture_default_str();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Run the per-class verification protocol on stored weights");
  add_data_options(eval_cmd, eval.data);
  eval_cmd->add_option("--mode", eval.mode, "ocon or acon")
      ->check(CLI::IsMember({"ocon", "acon"}))
      ->capture_default_str();
  eval_cmd->add_option("--store", eval.store, "Weight store root; repeat for replicas (env OCON_STORE_ROOTS)");
  eval_cmd->add_option("--format", eval.format, "table or csv")
      ->check(CLI::IsMember({"table", "csv"}))
      ->capture_default_str();
  eval_cmd->add_option("--split", eval.split, "test or train")
      ->check(CLI::IsMember({"test", "train"}))
      ->capture_default_str();
  eval_cmd->add_option("--positives", eval.n_pos, "Positive images per class")->capture_default_str();
  eval_cmd->add_option("--negatives", eval.n_neg, "Negative images per class")->capture_default_str();
  eval_cmd->add_option("--protocol-seed", eval.protocol_seed, "Seed for negative selection")->capture_default_str();
  eval_cmd->add_option("--threshold", eval.threshold, "OCON accept threshold in (0,1)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth);
    if (eigen_cmd->parsed()) return cmd_eigen(eigen);
    if (train_cmd->parsed()) return cmd_train(train);
    if (eval_cmd->parsed()) return cmd_evaluate(eval);
  } catch (const Failure& f) {
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitFatal;
}
