#include "ocon/ocon.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "ocon/classifiers.hpp"
#include "ocon/eigenspace.hpp"
#include "ocon/error.hpp"
#include "ocon/evaluator.hpp"
#include "ocon/imageio.hpp"
#include "ocon/parallel_trainer.hpp"

struct ocon_dataset {
  ocon::Dataset data;
};

struct ocon_eigenspace {
  ocon::Eigenspace space;
};

struct ocon_ensemble {
  ocon::OconEnsemble ensemble;
  std::vector<ocon::JobFailure> failures;
  double overhead_ratio = 0.0;
  double wall_seconds = 0.0;
};

struct ocon_acon {
  ocon::AconModel model;
};

struct ocon_report {
  ocon::EvaluationReport report;
};

namespace {

thread_local std::string g_last_error;

ocon_status status_of(ocon::ErrorCode code) {
  using ocon::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidConfig: return OCON_ERR_INVALID_CONFIG;
    case ErrorCode::UnsupportedFormat: return OCON_ERR_UNSUPPORTED_FORMAT;
    case ErrorCode::TruncatedImage: return OCON_ERR_TRUNCATED_IMAGE;
    case ErrorCode::UnsupportedDepth: return OCON_ERR_UNSUPPORTED_DEPTH;
    case ErrorCode::FileError: return OCON_ERR_FILE;
    case ErrorCode::ManifestSyntax: return OCON_ERR_MANIFEST_SYNTAX;
    case ErrorCode::NotSymmetric: return OCON_ERR_NOT_SYMMETRIC;
    case ErrorCode::NoConvergence: return OCON_ERR_NO_CONVERGENCE;
    case ErrorCode::DimensionMismatch: return OCON_ERR_DIMENSION_MISMATCH;
    case ErrorCode::InsufficientData: return OCON_ERR_INSUFFICIENT_DATA;
    case ErrorCode::Diverged: return OCON_ERR_DIVERGED;
    case ErrorCode::EmptyClass: return OCON_ERR_EMPTY_CLASS;
    case ErrorCode::NoCounterexamples: return OCON_ERR_NO_COUNTEREXAMPLES;
    case ErrorCode::InsufficientClasses: return OCON_ERR_INSUFFICIENT_CLASSES;
    case ErrorCode::StoreError: return OCON_ERR_STORE;
    case ErrorCode::ChecksumMismatch: return OCON_ERR_CHECKSUM_MISMATCH;
    case ErrorCode::WeightsUnavailable: return OCON_ERR_WEIGHTS_UNAVAILABLE;
    case ErrorCode::UnknownClass: return OCON_ERR_UNKNOWN_CLASS;
    case ErrorCode::ProtocolError: return OCON_ERR_PROTOCOL;
    case ErrorCode::ParseError: return OCON_ERR_PARSE;
  }
  return OCON_ERR_INTERNAL;
}

template <class Fn>
ocon_status guarded(Fn&& fn) noexcept {
  try {
    g_last_error.clear();
    return fn();
  } catch (const ocon::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return OCON_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return OCON_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return OCON_ERR_INTERNAL;
  }
}

ocon_status invalid(const char* what) {
  g_last_error = what;
  return OCON_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ocon::ReportFormat format_of(int format) {
  if (format == OCON_FORMAT_TABLE) return ocon::ReportFormat::Table;
  if (format == OCON_FORMAT_CSV) return ocon::ReportFormat::Csv;
  throw ocon::Error(ocon::ErrorCode::InvalidConfig, "unknown format " + std::to_string(format));
}

ocon::WeightStore store_of(const char* const* roots, size_t n_roots) {
  ocon::WeightStore store;
  for (size_t i = 0; i < n_roots; ++i) {
    if (!roots[i]) throw ocon::Error(ocon::ErrorCode::InvalidConfig, "null store root");
    store.roots.emplace_back(roots[i]);
  }
  if (store.roots.empty()) throw ocon::Error(ocon::ErrorCode::InvalidConfig, "no store roots");
  return store;
}

ocon::TrainingConfig config_of(const ocon_train_options& o) {
  ocon::TrainingConfig c;
  c.learning_rate = o.learning_rate;
  c.momentum = o.momentum;
  c.goal = o.goal;
  c.max_epochs = o.max_epochs;
  c.seed = o.seed;
  return c;
}

std::vector<ocon::LabeledFeature> features_of(const ocon::Dataset& data, const ocon::Eigenspace& space,
                                              ocon::Role role) {
  std::vector<ocon::LabeledFeature> out;
  for (const auto& s : data.samples) {
    if (s.role != role) continue;
    out.push_back({ocon::project(space, ocon::to_vector(s.image)), s.class_id});
  }
  return out;
}

std::vector<int> train_classes(const ocon::Dataset& data) {
  std::vector<ocon::LabeledFeature> labels;
  for (const auto& s : data.samples) {
    if (s.role == ocon::Role::Train) labels.push_back({{}, s.class_id});
  }
  return ocon::distinct_classes(labels);
}

size_t copy_ids(const std::vector<int>& ids, int* out, size_t capacity) {
  if (out) {
    for (size_t i = 0; i < ids.size() && i < capacity; ++i) out[i] = ids[i];
  }
  return ids.size();
}

void write_scores(const std::vector<double>& scores, double* out, size_t capacity) {
  if (!out) return;
  if (capacity < scores.size()) {
    throw ocon::Error(ocon::ErrorCode::DimensionMismatch,
                      "score buffer holds " + std::to_string(capacity) + ", need " + std::to_string(scores.size()));
  }
  for (size_t i = 0; i < scores.size(); ++i) out[i] = scores[i];
}

std::string describe(const std::vector<ocon::StoreFailure>& failures) {
  std::string s;
  for (const auto& f : failures) s += "replica " + f.root.string() + ": " + f.message + "\n";
  return s;
}

ocon::ProtocolSpec protocol_of(const ocon_protocol& p) { return {p.n_pos, p.n_neg, p.seed}; }

ocon::Role role_of(int role) {
  if (role == OCON_ROLE_TRAIN) return ocon::Role::Train;
  if (role == OCON_ROLE_TEST) return ocon::Role::Test;
  throw ocon::Error(ocon::ErrorCode::InvalidConfig, "unknown role " + std::to_string(role));
}

}  // namespace

extern "C" {

const char* ocon_status_name(ocon_status status) {
  switch (status) {
    case OCON_OK: return "OK";
    case OCON_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case OCON_ERR_PARTIAL: return "PartialFailure";
    case OCON_ERR_INTERNAL: return "Internal";
    default: break;
  }
  for (int c = 0; c <= static_cast<int>(ocon::ErrorCode::ParseError); ++c) {
    const auto code = static_cast<ocon::ErrorCode>(c);
    if (status_of(code) == status) return ocon::to_string(code);
  }
  return "Unknown";
}

const char* ocon_last_error(void) { return g_last_error.c_str(); }

void ocon_string_free(char* s) { std::free(s); }

// ---- datasets

ocon_status ocon_dataset_synthesize(int classes, int train_per_class, int test_per_class, size_t side,
                                    uint64_t seed, ocon_dataset** out) {
  if (!out) return invalid("out is null");
  return guarded([&] {
    auto samples = ocon::generate_synthetic({classes, train_per_class, test_per_class, side, seed});
    auto* d = new ocon_dataset;
    d->data.samples = std::move(samples);
    *out = d;
    return OCON_OK;
  });
}

ocon_status ocon_dataset_load(const char* manifest_path, size_t downsample, ocon_dataset** out) {
  if (!manifest_path || !out) return invalid("null argument");
  return guarded([&] {
    auto data = ocon::load_manifest(manifest_path, downsample == 0 ? 1 : downsample);
    *out = new ocon_dataset{std::move(data)};
    return OCON_OK;
  });
}

ocon_status ocon_dataset_write(const ocon_dataset* dataset, const char* dir) {
  if (!dataset || !dir) return invalid("null argument");
  return guarded([&] {
    ocon::write_dataset(dir, dataset->data.samples);
    return OCON_OK;
  });
}

size_t ocon_dataset_count(const ocon_dataset* dataset, int role) {
  if (!dataset) return 0;
  size_t n = 0;
  for (const auto& s : dataset->data.samples) {
    n += (role == OCON_ROLE_TRAIN) == (s.role == ocon::Role::Train) ? 1 : 0;
  }
  return n;
}

size_t ocon_dataset_class_ids(const ocon_dataset* dataset, int* ids, size_t capacity) {
  if (!dataset) return 0;
  return copy_ids(train_classes(dataset->data), ids, capacity);
}

void ocon_dataset_free(ocon_dataset* dataset) { delete dataset; }

// ---- eigenspace

ocon_status ocon_eigenspace_compute(const ocon_dataset* dataset, size_t components, ocon_eigenspace** out) {
  if (!dataset || !out) return invalid("null argument");
  return guarded([&] {
    std::vector<std::vector<double>> vectors;
    for (const auto& s : dataset->data.samples) {
      if (s.role == ocon::Role::Train) vectors.push_back(ocon::to_vector(s.image));
    }
    auto space = ocon::compute_eigenspace(vectors, components == 0 ? ocon::kDefaultComponents : components);
    *out = new ocon_eigenspace{std::move(space)};
    return OCON_OK;
  });
}

ocon_status ocon_eigenspace_save(const ocon_eigenspace* space, const char* path) {
  if (!space || !path) return invalid("null argument");
  return guarded([&] {
    ocon::save_eigenspace(path, space->space);
    return OCON_OK;
  });
}

ocon_status ocon_eigenspace_load(const char* path, ocon_eigenspace** out) {
  if (!path || !out) return invalid("null argument");
  return guarded([&] {
    *out = new ocon_eigenspace{ocon::load_eigenspace(path)};
    return OCON_OK;
  });
}

size_t ocon_eigenspace_dim(const ocon_eigenspace* space) { return space ? space->space.dim : 0; }

size_t ocon_eigenspace_components(const ocon_eigenspace* space) { return space ? space->space.components() : 0; }

ocon_status ocon_eigenspace_project(const ocon_eigenspace* space, const double* v, size_t len, double* coeffs,
                                    size_t coeffs_len) {
  if (!space || !v || !coeffs) return invalid("null argument");
  return guarded([&] {
    const auto f = ocon::project(space->space, std::span(v, len));
    write_scores(f, coeffs, coeffs_len);
    return OCON_OK;
  });
}

void ocon_eigenspace_free(ocon_eigenspace* space) { delete space; }

// ---- training

void ocon_train_options_init(ocon_train_options* options, int mode) {
  if (!options) return;
  const ocon::TrainingConfig defaults;
  options->learning_rate = defaults.learning_rate;
  options->momentum = defaults.momentum;
  options->goal = defaults.goal;
  options->max_epochs = defaults.max_epochs;
  options->seed = defaults.seed;
  options->hidden = mode == OCON_MODE_ACON ? ocon::kDefaultAconHidden : ocon::kDefaultOconHidden;
  options->workers = 1;
  options->allocation = OCON_ALLOC_ROUND_ROBIN;
  options->max_negatives = 0;
}

ocon_status ocon_ensemble_train(const ocon_dataset* dataset, const ocon_eigenspace* space,
                                const ocon_train_options* options, ocon_ensemble** out) {
  if (!dataset || !space || !options || !out) return invalid("null argument");
  return guarded([&] {
    ocon::OconOptions o;
    o.hidden = options->hidden;
    o.config = config_of(*options);
    o.max_negatives = options->max_negatives;
    o.pool.workers = options->workers;
    if (options->allocation == OCON_ALLOC_ROUND_ROBIN) {
      o.pool.allocation = ocon::Allocation::RoundRobin;
    } else if (options->allocation == OCON_ALLOC_LARGEST_FIRST) {
      o.pool.allocation = ocon::Allocation::LargestFirst;
    } else {
      throw ocon::Error(ocon::ErrorCode::InvalidConfig, "unknown allocation policy");
    }
    const auto samples = features_of(dataset->data, space->space, ocon::Role::Train);
    auto trained = ocon::train_ocon(samples, o);
    auto* e = new ocon_ensemble;
    e->ensemble = std::move(trained.ensemble);
    e->failures = std::move(trained.failures);
    e->wall_seconds = trained.wall_seconds;
    double wait = 0.0, compute = 0.0;
    for (const auto& t : trained.timings) {
      wait += t.dispatch_wait_seconds;
      compute += t.compute_seconds;
    }
    e->overhead_ratio = compute > 0.0 ? wait / compute : 0.0;
    *out = e;
    return e->failures.empty() ? OCON_OK : OCON_ERR_PARTIAL;
  });
}

size_t ocon_ensemble_size(const ocon_ensemble* ensemble) { return ensemble ? ensemble->ensemble.models.size() : 0; }

size_t ocon_ensemble_class_ids(const ocon_ensemble* ensemble, int* ids, size_t capacity) {
  if (!ensemble) return 0;
  return copy_ids(ensemble->ensemble.class_ids(), ids, capacity);
}

size_t ocon_ensemble_failure_count(const ocon_ensemble* ensemble) { return ensemble ? ensemble->failures.size() : 0; }

ocon_status ocon_ensemble_failure(const ocon_ensemble* ensemble, size_t index, int* class_id, const char** message) {
  if (!ensemble) return invalid("null ensemble");
  if (index >= ensemble->failures.size()) return invalid("failure index out of range");
  if (class_id) *class_id = ensemble->failures[index].class_id;
  if (message) *message = ensemble->failures[index].message.c_str();
  return OCON_OK;
}

double ocon_ensemble_overhead_ratio(const ocon_ensemble* ensemble) { return ensemble ? ensemble->overhead_ratio : 0.0; }

double ocon_ensemble_wall_seconds(const ocon_ensemble* ensemble) { return ensemble ? ensemble->wall_seconds : 0.0; }

ocon_status ocon_ensemble_persist(const ocon_ensemble* ensemble, const char* const* roots, size_t n_roots,
                                  char** warnings) {
  if (!ensemble || !roots) return invalid("null argument");
  if (warnings) *warnings = nullptr;
  return guarded([&] {
    const auto store = store_of(roots, n_roots);
    std::string notes;
    for (const auto& m : ensemble->ensemble.models) notes += describe(ocon::persist(m, store).failures);
    if (warnings && !notes.empty()) *warnings = dup_string(notes);
    return OCON_OK;
  });
}

ocon_status ocon_ensemble_load(const int* class_ids, size_t n_classes, const char* const* roots, size_t n_roots,
                               ocon_ensemble** out) {
  if (!class_ids || !roots || !out) return invalid("null argument");
  return guarded([&] {
    const auto store = store_of(roots, n_roots);
    auto* e = new ocon_ensemble;
    std::vector<int> ids(class_ids, class_ids + n_classes);
    std::sort(ids.begin(), ids.end());
    for (int id : ids) {
      try {
        e->ensemble.models.push_back(ocon::load(id, store));
      } catch (const ocon::Error& err) {
        if (err.code() != ocon::ErrorCode::WeightsUnavailable) {
          delete e;
          throw;
        }
        e->failures.push_back({id, err.what(), 0});
      }
    }
    if (!e->ensemble.models.empty()) e->ensemble.feature_dim = e->ensemble.models.front().topology.inputs();
    *out = e;
    return e->failures.empty() ? OCON_OK : OCON_ERR_PARTIAL;
  });
}

ocon_status ocon_ensemble_trace_csv(const ocon_ensemble* ensemble, int class_id, char** out) {
  if (!ensemble || !out) return invalid("null argument");
  return guarded([&] {
    const auto* m = ensemble->ensemble.find(class_id);
    if (!m) throw ocon::Error(ocon::ErrorCode::UnknownClass, "no subnet for class " + std::to_string(class_id), class_id);
    *out = dup_string(ocon::convergence_trace_csv(m->trace));
    return OCON_OK;
  });
}

ocon_status ocon_ensemble_training_summary(const ocon_ensemble* ensemble, int format, char** out) {
  if (!ensemble || !out) return invalid("null argument");
  return guarded([&] {
    std::vector<ocon::TraceSummary> traces;
    for (const auto& m : ensemble->ensemble.models) traces.push_back(ocon::summarize(std::to_string(m.class_id), m.trace));
    *out = dup_string(ocon::render_training_summary(traces, format_of(format)));
    return OCON_OK;
  });
}

ocon_status ocon_ensemble_classify(const ocon_ensemble* ensemble, const double* features, size_t len, int* class_id,
                                   double* scores, size_t scores_len) {
  if (!ensemble || !features) return invalid("null argument");
  return guarded([&] {
    const auto c = ocon::classify_ocon(ensemble->ensemble, std::span(features, len));
    write_scores(c.scores, scores, scores_len);
    if (class_id) *class_id = c.class_id;
    return OCON_OK;
  });
}

void ocon_ensemble_free(ocon_ensemble* ensemble) { delete ensemble; }

ocon_status ocon_acon_train(const ocon_dataset* dataset, const ocon_eigenspace* space,
                            const ocon_train_options* options, ocon_acon** out) {
  if (!dataset || !space || !options || !out) return invalid("null argument");
  return guarded([&] {
    const auto samples = features_of(dataset->data, space->space, ocon::Role::Train);
    auto model = ocon::train_acon(samples, {options->hidden, config_of(*options)});
    *out = new ocon_acon{std::move(model)};
    return OCON_OK;
  });
}

ocon_status ocon_acon_persist(const ocon_acon* model, const char* const* roots, size_t n_roots, char** warnings) {
  if (!model || !roots) return invalid("null argument");
  if (warnings) *warnings = nullptr;
  return guarded([&] {
    const auto notes = describe(ocon::persist(model->model, store_of(roots, n_roots)).failures);
    if (warnings && !notes.empty()) *warnings = dup_string(notes);
    return OCON_OK;
  });
}

ocon_status ocon_acon_load(const char* const* roots, size_t n_roots, ocon_acon** out) {
  if (!roots || !out) return invalid("null argument");
  return guarded([&] {
    *out = new ocon_acon{ocon::load_acon(store_of(roots, n_roots))};
    return OCON_OK;
  });
}

ocon_status ocon_acon_trace_csv(const ocon_acon* model, char** out) {
  if (!model || !out) return invalid("null argument");
  return guarded([&] {
    *out = dup_string(ocon::convergence_trace_csv(model->model.trace));
    return OCON_OK;
  });
}

ocon_status ocon_acon_training_summary(const ocon_acon* model, int format, char** out) {
  if (!model || !out) return invalid("null argument");
  return guarded([&] {
    const std::vector<ocon::TraceSummary> traces{ocon::summarize("all", model->model.trace)};
    *out = dup_string(ocon::render_training_summary(traces, format_of(format)));
    return OCON_OK;
  });
}

ocon_status ocon_acon_classify(const ocon_acon* model, const double* features, size_t len, int* class_id,
                               double* scores, size_t scores_len) {
  if (!model || !features) return invalid("null argument");
  return guarded([&] {
    const auto c = ocon::classify_acon(model->model, std::span(features, len));
    write_scores(c.scores, scores, scores_len);
    if (class_id) *class_id = c.class_id;
    return OCON_OK;
  });
}

void ocon_acon_free(ocon_acon* model) { delete model; }

// ---- evaluation

void ocon_protocol_init(ocon_protocol* protocol) {
  if (!protocol) return;
  const ocon::ProtocolSpec defaults;
  protocol->n_pos = defaults.n_pos;
  protocol->n_neg = defaults.n_neg;
  protocol->seed = defaults.seed;
  protocol->threshold = ocon::kDefaultThreshold;
  protocol->role = OCON_ROLE_TEST;
}

ocon_status ocon_evaluate_ocon(const ocon_ensemble* ensemble, const ocon_dataset* dataset,
                               const ocon_eigenspace* space, const ocon_protocol* protocol, ocon_report** out) {
  if (!ensemble || !dataset || !space || !protocol || !out) return invalid("null argument");
  return guarded([&] {
    const auto role = role_of(protocol->role);
    const auto samples = features_of(dataset->data, space->space, role);
    const auto registered = train_classes(dataset->data);
    const ocon::OconVerifier verifier(ensemble->ensemble, protocol->threshold);
    auto* r = new ocon_report;
    try {
      r->report = ocon::evaluate_all(verifier, ocon::Mode::Ocon, registered, samples, protocol_of(*protocol));
      r->report.split = ocon::to_string(role);
      if (!ensemble->ensemble.models.empty() && ensemble->failures.empty()) {
        r->report.identification = ocon::identify_ocon(ensemble->ensemble, samples);
      }
      for (const auto& m : ensemble->ensemble.models) {
        if (m.trace.epochs_run > 0) r->report.traces.push_back(ocon::summarize(std::to_string(m.class_id), m.trace));
      }
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
    return ocon_report_error_count(r) == 0 ? OCON_OK : OCON_ERR_PARTIAL;
  });
}

ocon_status ocon_evaluate_acon(const ocon_acon* model, const ocon_dataset* dataset, const ocon_eigenspace* space,
                               const ocon_protocol* protocol, ocon_report** out) {
  if (!model || !dataset || !space || !protocol || !out) return invalid("null argument");
  return guarded([&] {
    const auto role = role_of(protocol->role);
    const auto samples = features_of(dataset->data, space->space, role);
    const auto registered = train_classes(dataset->data);
    const ocon::AconVerifier verifier(model->model);
    auto* r = new ocon_report;
    try {
      r->report = ocon::evaluate_all(verifier, ocon::Mode::Acon, registered, samples, protocol_of(*protocol));
      r->report.split = ocon::to_string(role);
      r->report.identification = ocon::identify_acon(model->model, samples);
      if (model->model.trace.epochs_run > 0) r->report.traces.push_back(ocon::summarize("all", model->model.trace));
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
    return ocon_report_error_count(r) == 0 ? OCON_OK : OCON_ERR_PARTIAL;
  });
}

ocon_status ocon_report_render(const ocon_report* report, int format, char** out) {
  if (!report || !out) return invalid("null argument");
  return guarded([&] {
    *out = dup_string(ocon::render_report(report->report, format_of(format)));
    return OCON_OK;
  });
}

double ocon_report_average(const ocon_report* report) { return report ? report->report.average_rate : 0.0; }

size_t ocon_report_error_count(const ocon_report* report) {
  if (!report) return 0;
  size_t n = 0;
  for (const auto& r : report->report.per_class) n += r.error ? 1 : 0;
  return n;
}

void ocon_report_free(ocon_report* report) { delete report; }

}  // extern "C"
