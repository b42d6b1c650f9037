#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace ocon {

// Layer sizes from input to output. Every layer after the input is a
// sigmoid layer.
struct Topology {
  std::vector<std::size_t> layer_sizes;

  std::size_t inputs() const { return layer_sizes.front(); }
  std::size_t outputs() const { return layer_sizes.back(); }
  std::size_t layers() const { return layer_sizes.size() - 1; }

  bool operator==(const Topology&) const = default;
};

void validate(const Topology& topology);

struct Layer {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::vector<double> w;  // fan_out x fan_in, row-major
  std::vector<double> b;  // fan_out

  double& at(std::size_t out, std::size_t in) { return w[out * fan_in + in]; }
  double at(std::size_t out, std::size_t in) const { return w[out * fan_in + in]; }

  bool operator==(const Layer&) const = default;
};

struct Weights {
  std::vector<Layer> layers;

  Topology topology() const;
  bool operator==(const Weights&) const = default;
};

// Gradients share the weight layout.
using Gradients = Weights;

Weights zero_weights(const Topology& topology);

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
Weights init_weights(const Topology& topology, std::uint64_t seed);

struct ForwardPass {
  std::vector<std::vector<double>> activations;  // [0] is the input

  const std::vector<double>& output() const { return activations.back(); }
};

double sigmoid(double z) noexcept;

ForwardPass forward(const Weights& weights, std::span<const double> x);

struct TrainingExample {
  std::vector<double> input;
  std::vector<double> target;
};

// Mean over samples and output components of the squared error.
double mse(std::span<const std::vector<double>> outputs,
           std::span<const std::vector<double>> targets);

struct LossAndGradients {
  double loss = 0.0;
  Gradients grad;
};

// Exact gradient of mse over the batch by backpropagation.
LossAndGradients loss_and_gradients(const Weights& weights,
                                    std::span<const TrainingExample> batch);
Gradients gradients(const Weights& weights, std::span<const TrainingExample> batch);

double batch_mse(const Weights& weights, std::span<const TrainingExample> batch);

inline constexpr double kReferenceGoal = 1e-6;
inline constexpr std::uint64_t kReferenceMaxEpochs = 700000;

struct TrainingConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double goal = kReferenceGoal;
  std::uint64_t max_epochs = kReferenceMaxEpochs;
  std::uint64_t seed = 1;
  // Record every n-th epoch in the MSE history; 0 picks a stride that keeps
  // at most ~100k points.
  std::uint64_t history_stride = 0;
};

void validate(const TrainingConfig& config);

struct TrainingTrace {
  std::uint64_t epochs_run = 0;
  std::vector<std::pair<std::uint64_t, double>> mse_history;  // (epoch, mse)
  double final_mse = 0.0;
  bool goal_met = false;
  double goal = 0.0;
  std::uint64_t max_epochs = 0;
  double wall_seconds = 0.0;
};

struct TrainingResult {
  Weights weights;
  TrainingTrace trace;
};

// Full-batch gradient descent with momentum, step = momentum * step - lr * grad.
// Each epoch first measures the MSE of the current weights; training stops at
// the first epoch whose MSE is below the goal, otherwise after max_epochs
// updates. Throws Diverged (value = epoch) when the MSE stops being finite.
TrainingResult train(const Topology& topology, std::span<const TrainingExample> batch,
                     const TrainingConfig& config);

}  // namespace ocon
