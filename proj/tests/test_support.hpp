#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "doctest.h"
#include "ocon/error.hpp"
#include "ocon/models.hpp"

namespace ocon::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ocon_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Runs fn and returns the ocon::Error code it throws.
template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ocon::Error");
  return ErrorCode::InvalidConfig;
}

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Network whose outputs ignore the input: zero weights, biases set so that
// sigmoid(bias) equals the requested value.
inline Weights constant_output_weights(std::size_t inputs, std::size_t hidden, std::span<const double> outputs) {
  Weights w = zero_weights(Topology{{inputs, hidden, outputs.size()}});
  for (std::size_t k = 0; k < outputs.size(); ++k) w.layers.back().b[k] = logit(outputs[k]);
  return w;
}

inline ClassModel constant_class_model(int class_id, std::size_t inputs, double output) {
  const double out[] = {output};
  ClassModel m;
  m.class_id = class_id;
  m.weights = constant_output_weights(inputs, 2, out);
  m.topology = m.weights.topology();
  return m;
}

}  // namespace ocon::testing
