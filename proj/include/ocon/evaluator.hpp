#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ocon/classifiers.hpp"
#include "ocon/models.hpp"

namespace ocon {

enum class Mode { Ocon, Acon };

const char* to_string(Mode mode) noexcept;

struct ClassResult {
  int class_id = 0;
  std::size_t n_test = 0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t correct = 0;
  double rate = 0.0;                 // 100 * correct / n_test
  std::optional<std::string> error;  // set when the class could not be evaluated

  bool operator==(const ClassResult&) const = default;
};

ClassResult make_class_result(int class_id, std::size_t n_pos, std::size_t n_neg,
                              std::size_t correct);

// Percent rounded half away from zero, as printed in the tables.
long rounded_percent(double rate);

struct TraceSummary {
  std::string network;  // class id, or "all" for ACON
  std::uint64_t epochs_run = 0;
  double final_mse = 0.0;
  bool goal_met = false;
  double goal = 0.0;
  std::uint64_t max_epochs = 0;
};

TraceSummary summarize(std::string network, const TrainingTrace& trace);

struct IdentificationResult {
  std::size_t total = 0;
  std::size_t correct = 0;
  double rate() const { return total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total); }
};

struct EvaluationReport {
  Mode mode = Mode::Ocon;
  std::string split = "test";
  std::vector<ClassResult> per_class;
  double average_rate = 0.0;  // mean over classes without an error
  std::vector<TraceSummary> traces;
  std::optional<IdentificationResult> identification;
};

// Decides whether a feature vector belongs to a class. Implementations throw
// when the class itself cannot be evaluated (missing weights, unknown class).
class ClassVerifier {
 public:
  virtual ~ClassVerifier() = default;
  virtual void check_class(int class_id) const = 0;
  virtual bool accepts(int class_id, std::span<const double> features) const = 0;
};

// Subnet score against a threshold. Classes absent from the map raise
// WeightsUnavailable.
class OconVerifier final : public ClassVerifier {
 public:
  OconVerifier(std::map<int, const ClassModel*> models, double threshold = kDefaultThreshold,
               EvalCounters* counters = nullptr);
  explicit OconVerifier(const OconEnsemble& ensemble, double threshold = kDefaultThreshold,
                        EvalCounters* counters = nullptr);

  void check_class(int class_id) const override;
  bool accepts(int class_id, std::span<const double> features) const override;

 private:
  std::map<int, const ClassModel*> models_;
  double threshold_;
  EvalCounters* counters_;
};

// Winner-take-all: accept when the ACON argmax is the class under test.
class AconVerifier final : public ClassVerifier {
 public:
  explicit AconVerifier(const AconModel& model) : model_(model) {}

  void check_class(int class_id) const override;
  bool accepts(int class_id, std::span<const double> features) const override;

 private:
  const AconModel& model_;
};

// correct = accepted positives + rejected negatives.
ClassResult evaluate_class(const ClassVerifier& verifier, int class_id,
                           std::span<const FeatureVector> positives,
                           std::span<const FeatureVector> negatives);

ClassResult evaluate_class_ocon(const ClassModel& model, std::span<const FeatureVector> positives,
                                std::span<const FeatureVector> negatives,
                                double threshold = kDefaultThreshold);

ClassResult evaluate_class_acon(const AconModel& model, int class_id,
                                std::span<const FeatureVector> positives,
                                std::span<const FeatureVector> negatives);

struct ProtocolSpec {
  std::size_t n_pos = 10;
  std::size_t n_neg = 10;
  std::uint64_t seed = 1;
};

struct ProtocolSplit {
  std::vector<FeatureVector> positives;
  std::vector<FeatureVector> negatives;
};

// Positives: the first n_pos samples of the class in input order. Negatives:
// a seeded draw without replacement of n_neg samples from the other classes.
// Throws ProtocolError when the class has no positives or no negatives exist.
ProtocolSplit select_protocol(int class_id, std::span<const LabeledFeature> samples,
                              const ProtocolSpec& spec);

// Evaluates every registered class exactly once. A class whose verifier
// throws is recorded with an error and left out of the average.
EvaluationReport evaluate_all(const ClassVerifier& verifier, Mode mode,
                              std::span<const int> registered_classes,
                              std::span<const LabeledFeature> samples, const ProtocolSpec& spec,
                              EvalCounters* counters = nullptr);

// Closed-set identification accuracy over all samples.
IdentificationResult identify_ocon(const OconEnsemble& ensemble,
                                   std::span<const LabeledFeature> samples);
IdentificationResult identify_acon(const AconModel& model, std::span<const LabeledFeature> samples);

enum class ReportFormat { Table, Csv };

ReportFormat parse_report_format(std::string_view name);

std::string render_report(const EvaluationReport& report, ReportFormat format);

// Per-network listing: network, epochs, final mse, goal, outcome.
std::string render_training_summary(std::span<const TraceSummary> traces, ReportFormat format);

struct ParsedReportCsv {
  std::vector<ClassResult> per_class;
  std::optional<double> average_rate;
};

ParsedReportCsv parse_report_csv(std::string_view text);

// `epoch,mse` rows for one network.
std::string convergence_trace_csv(const TrainingTrace& trace);

}  // namespace ocon
