#include "ocon/evaluator.hpp"

#include <cmath>
#include <cstdio>

#include "ocon/error.hpp"
#include "ocon/random.hpp"
#include "text_util.hpp"

namespace ocon {

const char* to_string(Mode mode) noexcept { return mode == Mode::Ocon ? "OCON" : "ACON"; }

ClassResult make_class_result(int class_id, std::size_t n_pos, std::size_t n_neg, std::size_t correct) {
  ClassResult r;
  r.class_id = class_id;
  r.n_pos = n_pos;
  r.n_neg = n_neg;
  r.n_test = n_pos + n_neg;
  r.correct = correct;
  r.rate = r.n_test == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(r.n_test);
  return r;
}

long rounded_percent(double rate) { return std::lround(rate); }

TraceSummary summarize(std::string network, const TrainingTrace& trace) {
  return {std::move(network), trace.epochs_run, trace.final_mse, trace.goal_met, trace.goal, trace.max_epochs};
}

// ---------------------------------------------------------------------------

OconVerifier::OconVerifier(std::map<int, const ClassModel*> models, double threshold, EvalCounters* counters)
    : models_(std::move(models)), threshold_(threshold), counters_(counters) {
  if (!(threshold_ > 0.0 && threshold_ < 1.0)) throw Error(ErrorCode::InvalidConfig, "threshold must be in (0, 1)");
}

OconVerifier::OconVerifier(const OconEnsemble& ensemble, double threshold, EvalCounters* counters)
    : OconVerifier(std::map<int, const ClassModel*>{}, threshold, counters) {
  for (const auto& m : ensemble.models) models_[m.class_id] = &m;
}

void OconVerifier::check_class(int class_id) const {
  const auto it = models_.find(class_id);
  if (it == models_.end() || it->second == nullptr) {
    throw Error(ErrorCode::WeightsUnavailable, "no weights for class " + std::to_string(class_id), class_id);
  }
}

bool OconVerifier::accepts(int class_id, std::span<const double> features) const {
  check_class(class_id);
  const ClassModel& model = *models_.at(class_id);
  if (counters_) ++counters_->subnet_evaluations;
  return verify(forward(model.weights, features).output()[0], threshold_);
}

void AconVerifier::check_class(int class_id) const {
  for (int id : model_.class_ids) {
    if (id == class_id) return;
  }
  throw Error(ErrorCode::UnknownClass, "class " + std::to_string(class_id) + " is not an ACON output", class_id);
}

bool AconVerifier::accepts(int class_id, std::span<const double> features) const {
  return classify_acon(model_, features).class_id == class_id;
}

ClassResult evaluate_class(const ClassVerifier& verifier, int class_id, std::span<const FeatureVector> positives,
                           std::span<const FeatureVector> negatives) {
  verifier.check_class(class_id);
  std::size_t correct = 0;
  for (const auto& f : positives) correct += verifier.accepts(class_id, f) ? 1 : 0;
  for (const auto& f : negatives) correct += verifier.accepts(class_id, f) ? 0 : 1;
  return make_class_result(class_id, positives.size(), negatives.size(), correct);
}

ClassResult evaluate_class_ocon(const ClassModel& model, std::span<const FeatureVector> positives,
                                std::span<const FeatureVector> negatives, double threshold) {
  if (positives.empty() || negatives.empty()) {
    throw Error(ErrorCode::ProtocolError, "need positives and negatives", model.class_id);
  }
  const OconVerifier verifier({{model.class_id, &model}}, threshold);
  return evaluate_class(verifier, model.class_id, positives, negatives);
}

ClassResult evaluate_class_acon(const AconModel& model, int class_id, std::span<const FeatureVector> positives,
                                std::span<const FeatureVector> negatives) {
  const AconVerifier verifier(model);
  return evaluate_class(verifier, class_id, positives, negatives);
}

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

ProtocolSplit select_protocol(int class_id, std::span<const LabeledFeature> samples, const ProtocolSpec& spec) {
  ProtocolSplit split;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].class_id == class_id) {
      if (split.positives.size() < spec.n_pos) split.positives.push_back(samples[i].features);
    } else {
      pool.push_back(i);
    }
  }
  if (split.positives.empty()) {
    throw Error(ErrorCode::ProtocolError, "class " + std::to_string(class_id) + " has no test positives", class_id);
  }
  if (pool.empty()) {
    throw Error(ErrorCode::ProtocolError, "no negatives available for class " + std::to_string(class_id), class_id);
  }
  Rng rng(mix(spec.seed, static_cast<std::uint64_t>(class_id)));
  const std::size_t take = std::min(spec.n_neg, pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
    split.negatives.push_back(samples[pool[i]].features);
  }
  return split;
}

EvaluationReport evaluate_all(const ClassVerifier& verifier, Mode mode, std::span<const int> registered_classes,
                              std::span<const LabeledFeature> samples, const ProtocolSpec& spec,
                              EvalCounters* counters) {
  EvaluationReport report;
  report.mode = mode;
  double sum = 0.0;
  std::size_t evaluated = 0;
  for (int class_id : registered_classes) {
    if (counters) ++counters->class_evaluations;
    const ProtocolSplit split = select_protocol(class_id, samples, spec);
    try {
      ClassResult r = evaluate_class(verifier, class_id, split.positives, split.negatives);
      sum += r.rate;
      ++evaluated;
      report.per_class.push_back(std::move(r));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::WeightsUnavailable && e.code() != ErrorCode::UnknownClass) throw;
      ClassResult r;
      r.class_id = class_id;
      r.error = e.what();
      report.per_class.push_back(std::move(r));
    }
  }
  report.average_rate = evaluated == 0 ? 0.0 : sum / static_cast<double>(evaluated);
  return report;
}

IdentificationResult identify_ocon(const OconEnsemble& ensemble, std::span<const LabeledFeature> samples) {
  IdentificationResult r;
  for (const auto& s : samples) {
    ++r.total;
    if (classify_ocon(ensemble, s.features).class_id == s.class_id) ++r.correct;
  }
  return r;
}

IdentificationResult identify_acon(const AconModel& model, std::span<const LabeledFeature> samples) {
  IdentificationResult r;
  for (const auto& s : samples) {
    ++r.total;
    if (classify_acon(model, s.features).class_id == s.class_id) ++r.correct;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Rendering

ReportFormat parse_report_format(std::string_view name) {
  if (name == "table") return ReportFormat::Table;
  if (name == "csv") return ReportFormat::Csv;
  throw Error(ErrorCode::InvalidConfig, "unknown report format '" + std::string(name) + "'");
}

namespace {

std::string printf_string(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

std::string short_double(double v) { return printf_string("%.6g", v); }

}  // namespace

std::string render_training_summary(std::span<const TraceSummary> traces, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::Csv) {
    out = "network,epochs_run,final_mse,goal,goal_met\n";
    for (const auto& t : traces) {
      out += t.network + "," + std::to_string(t.epochs_run) + "," + detail::format_double(t.final_mse) + "," +
             detail::format_double(t.goal) + "," + (t.goal_met ? "true" : "false") + "\n";
    }
    return out;
  }
  out += printf_string("%-10s %10s %14s %10s  %s\n", "Network", "Epochs", "Final MSE", "Goal", "Outcome");
  for (const auto& t : traces) {
    out += printf_string("%-10s %10llu %14s %10s  %s\n", t.network.c_str(),
                         static_cast<unsigned long long>(t.epochs_run), short_double(t.final_mse).c_str(),
                         short_double(t.goal).c_str(), t.goal_met ? "goal met" : "goal not met");
  }
  return out;
}

std::string render_report(const EvaluationReport& report, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::Csv) {
    out = "class_id,n_test,n_pos,n_neg,correct,rate_percent\n";
    for (const auto& r : report.per_class) {
      if (r.error) {
        out += std::to_string(r.class_id) + ",,,,,error\n";
        continue;
      }
      out += std::to_string(r.class_id) + "," + std::to_string(r.n_test) + "," + std::to_string(r.n_pos) + "," +
             std::to_string(r.n_neg) + "," + std::to_string(r.correct) + "," + detail::format_double(r.rate) + "\n";
    }
    out += "average,,,,," + detail::format_double(report.average_rate) + "\n";
    return out;
  }

  out += std::string(to_string(report.mode)) + " per-class verification (" + report.split + " split)\n";
  out += printf_string("%-10s %6s %10s %10s %6s\n", "Class", "Total", "Positives", "Negatives", "Rate");
  for (const auto& r : report.per_class) {
    const std::string name = "Class-" + std::to_string(r.class_id);
    if (r.error) {
      out += printf_string("%-10s %6s %10s %10s  %s\n", name.c_str(), "-", "-", "-", r.error->c_str());
      continue;
    }
    out += printf_string("%-10s %6zu %10zu %10zu %5ld%%\n", name.c_str(), r.n_test, r.n_pos, r.n_neg,
                         rounded_percent(r.rate));
  }
  out += printf_string("%-10s %6s %10s %10s %5ld%%\n", "Average", "", "", "", rounded_percent(report.average_rate));
  if (report.identification) {
    const auto& id = *report.identification;
    out += printf_string("\nClosed-set identification: %zu/%zu correct (%ld%%)\n", id.correct, id.total,
                         rounded_percent(id.rate()));
  }
  if (!report.traces.empty()) {
    out += "\nTraining convergence\n";
    out += render_training_summary(report.traces, ReportFormat::Table);
  }
  return out;
}

ParsedReportCsv parse_report_csv(std::string_view text) {
  ParsedReportCsv parsed;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    if (header) {
      if (line != "class_id,n_test,n_pos,n_neg,correct,rate_percent") {
        throw Error(ErrorCode::ParseError, "unexpected report header");
      }
      header = false;
      continue;
    }
    std::vector<std::string_view> f;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (f.size() != 6) throw Error(ErrorCode::ParseError, "expected 6 fields");
    if (f[0] == "average") {
      parsed.average_rate = detail::parse_double(f[5]);
      continue;
    }
    ClassResult r;
    r.class_id = detail::parse_int<int>(f[0]);
    if (f[5] == "error") {
      r.error = "error";
    } else {
      r.n_test = detail::parse_int<std::size_t>(f[1]);
      r.n_pos = detail::parse_int<std::size_t>(f[2]);
      r.n_neg = detail::parse_int<std::size_t>(f[3]);
      r.correct = detail::parse_int<std::size_t>(f[4]);
      r.rate = detail::parse_double(f[5]);
    }
    parsed.per_class.push_back(std::move(r));
  }
  return parsed;
}

std::string convergence_trace_csv(const TrainingTrace& trace) {
  std::string out = "epoch,mse\n";
  for (const auto& [epoch, value] : trace.mse_history) {
    out += std::to_string(epoch) + "," + detail::format_double(value) + "\n";
  }
  return out;
}

}  // namespace ocon
