#include "ocon/mlp.hpp"

#include <chrono>
#include <cmath>

#include "ocon/error.hpp"
#include "ocon/random.hpp"

namespace ocon {

void validate(const Topology& topology) {
  if (topology.layer_sizes.size() < 2) {
    throw Error(ErrorCode::InvalidConfig, "topology needs an input and an output layer");
  }
  for (auto size : topology.layer_sizes) {
    if (size < 1) throw Error(ErrorCode::InvalidConfig, "layer sizes must be >= 1");
  }
}

void validate(const TrainingConfig& config) {
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw Error(ErrorCode::InvalidConfig, "learning rate must be positive and finite");
  }
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "momentum must be in [0, 1)");
  }
  if (!(config.goal > 0.0)) throw Error(ErrorCode::InvalidConfig, "goal must be positive");
  if (config.max_epochs < 1) throw Error(ErrorCode::InvalidConfig, "max_epochs must be >= 1");
}

Topology Weights::topology() const {
  Topology t;
  if (layers.empty()) return t;
  t.layer_sizes.push_back(layers.front().fan_in);
  for (const auto& l : layers) t.layer_sizes.push_back(l.fan_out);
  return t;
}

Weights zero_weights(const Topology& topology) {
  validate(topology);
  Weights w;
  for (std::size_t l = 0; l < topology.layers(); ++l) {
    Layer layer;
    layer.fan_in = topology.layer_sizes[l];
    layer.fan_out = topology.layer_sizes[l + 1];
    layer.w.assign(layer.fan_in * layer.fan_out, 0.0);
    layer.b.assign(layer.fan_out, 0.0);
    w.layers.push_back(std::move(layer));
  }
  return w;
}

Weights init_weights(const Topology& topology, std::uint64_t seed) {
  Weights w = zero_weights(topology);
  Rng rng(seed);
  for (auto& layer : w.layers) {
    const double r = 1.0 / std::sqrt(static_cast<double>(layer.fan_in));
    for (auto& v : layer.w) v = rng.uniform(-r, r);
  }
  return w;
}

double sigmoid(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

namespace {

void dense_sigmoid(const Layer& layer, const double* in, double* out) {
  for (std::size_t o = 0; o < layer.fan_out; ++o) {
    const double* row = layer.w.data() + o * layer.fan_in;
    double z = layer.b[o];
    for (std::size_t i = 0; i < layer.fan_in; ++i) z += row[i] * in[i];
    out[o] = sigmoid(z);
  }
}

void check_input(const Weights& weights, std::size_t size) {
  if (weights.layers.empty()) throw Error(ErrorCode::InvalidConfig, "network has no layers");
  if (size != weights.layers.front().fan_in) {
    throw Error(ErrorCode::DimensionMismatch, "input has length " + std::to_string(size) + ", network expects " +
                                                  std::to_string(weights.layers.front().fan_in));
  }
}

void check_batch(const Weights& weights, std::span<const TrainingExample> batch) {
  if (batch.empty()) throw Error(ErrorCode::InsufficientData, "empty batch");
  const std::size_t outputs = weights.layers.back().fan_out;
  for (const auto& ex : batch) {
    check_input(weights, ex.input.size());
    if (ex.target.size() != outputs) {
      throw Error(ErrorCode::DimensionMismatch, "target has length " + std::to_string(ex.target.size()) +
                                                    ", network has " + std::to_string(outputs) + " outputs");
    }
  }
}

}  // namespace

ForwardPass forward(const Weights& weights, std::span<const double> x) {
  check_input(weights, x.size());
  ForwardPass pass;
  pass.activations.reserve(weights.layers.size() + 1);
  pass.activations.emplace_back(x.begin(), x.end());
  for (const auto& layer : weights.layers) {
    std::vector<double> next(layer.fan_out);
    dense_sigmoid(layer, pass.activations.back().data(), next.data());
    pass.activations.push_back(std::move(next));
  }
  return pass;
}

double mse(std::span<const std::vector<double>> outputs, std::span<const std::vector<double>> targets) {
  if (outputs.size() != targets.size()) {
    throw Error(ErrorCode::DimensionMismatch, "outputs and targets differ in count");
  }
  if (outputs.empty()) return 0.0;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < outputs.size(); ++s) {
    if (outputs[s].size() != targets[s].size()) {
      throw Error(ErrorCode::DimensionMismatch, "output and target lengths differ at sample " + std::to_string(s));
    }
    for (std::size_t k = 0; k < outputs[s].size(); ++k) {
      const double e = outputs[s][k] - targets[s][k];
      sum += e * e;
    }
    count += outputs[s].size();
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

LossAndGradients loss_and_gradients(const Weights& weights, std::span<const TrainingExample> batch) {
  check_batch(weights, batch);
  const std::size_t depth = weights.layers.size();
  const std::size_t outputs = weights.layers.back().fan_out;
  const double scale = 1.0 / static_cast<double>(batch.size() * outputs);

  LossAndGradients result{0.0, zero_weights(weights.topology())};

  std::vector<std::vector<double>> act(depth + 1);
  std::vector<std::vector<double>> delta(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    act[l + 1].resize(weights.layers[l].fan_out);
    delta[l].resize(weights.layers[l].fan_out);
  }

  double sum_sq = 0.0;
  for (const auto& ex : batch) {
    act[0] = ex.input;
    for (std::size_t l = 0; l < depth; ++l) dense_sigmoid(weights.layers[l], act[l].data(), act[l + 1].data());

    // d(mse)/dy = 2 (y - t) / (N * out); times sigmoid'(z) = y (1 - y)
    const auto& y = act[depth];
    for (std::size_t k = 0; k < outputs; ++k) {
      const double e = y[k] - ex.target[k];
      sum_sq += e * e;
      delta[depth - 1][k] = 2.0 * scale * e * y[k] * (1.0 - y[k]);
    }

    for (std::size_t l = depth; l-- > 0;) {
      const Layer& layer = weights.layers[l];
      Layer& g = result.grad.layers[l];
      const double* a = act[l].data();
      const double* d = delta[l].data();
      for (std::size_t o = 0; o < layer.fan_out; ++o) {
        double* grow = g.w.data() + o * layer.fan_in;
        for (std::size_t i = 0; i < layer.fan_in; ++i) grow[i] += d[o] * a[i];
        g.b[o] += d[o];
      }
      if (l == 0) break;
      double* prev = delta[l - 1].data();
      for (std::size_t i = 0; i < layer.fan_in; ++i) prev[i] = 0.0;
      for (std::size_t o = 0; o < layer.fan_out; ++o) {
        const double* row = layer.w.data() + o * layer.fan_in;
        for (std::size_t i = 0; i < layer.fan_in; ++i) prev[i] += row[i] * d[o];
      }
      for (std::size_t i = 0; i < layer.fan_in; ++i) prev[i] *= a[i] * (1.0 - a[i]);
    }
  }
  result.loss = sum_sq * scale;
  return result;
}

Gradients gradients(const Weights& weights, std::span<const TrainingExample> batch) {
  return loss_and_gradients(weights, batch).grad;
}

double batch_mse(const Weights& weights, std::span<const TrainingExample> batch) {
  check_batch(weights, batch);
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& ex : batch) {
    const auto pass = forward(weights, ex.input);
    for (std::size_t k = 0; k < ex.target.size(); ++k) {
      const double e = pass.output()[k] - ex.target[k];
      sum += e * e;
    }
    count += ex.target.size();
  }
  return sum / static_cast<double>(count);
}

TrainingResult train(const Topology& topology, std::span<const TrainingExample> batch,
                     const TrainingConfig& config) {
  validate(topology);
  validate(config);
  const auto started = std::chrono::steady_clock::now();

  TrainingResult result{init_weights(topology, config.seed), {}};
  check_batch(result.weights, batch);
  TrainingTrace& trace = result.trace;
  trace.goal = config.goal;
  trace.max_epochs = config.max_epochs;

  std::uint64_t stride = config.history_stride;
  if (stride == 0) stride = (config.max_epochs + 99999) / 100000;

  Weights velocity = zero_weights(topology);
  // Loss and gradient at the current weights; after epoch e this holds the
  // MSE reached by e updates.
  LossAndGradients current = loss_and_gradients(result.weights, batch);
  if (!std::isfinite(current.loss)) throw Error(ErrorCode::Diverged, "initial MSE is not finite", 0);

  for (std::uint64_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t l = 0; l < velocity.layers.size(); ++l) {
      Layer& v = velocity.layers[l];
      Layer& w = result.weights.layers[l];
      const Layer& g = current.grad.layers[l];
      for (std::size_t i = 0; i < v.w.size(); ++i) {
        v.w[i] = config.momentum * v.w[i] - config.learning_rate * g.w[i];
        w.w[i] += v.w[i];
      }
      for (std::size_t i = 0; i < v.b.size(); ++i) {
        v.b[i] = config.momentum * v.b[i] - config.learning_rate * g.b[i];
        w.b[i] += v.b[i];
      }
    }
    current = loss_and_gradients(result.weights, batch);
    trace.epochs_run = epoch;
    if (!std::isfinite(current.loss)) {
      throw Error(ErrorCode::Diverged, "MSE became non-finite at epoch " + std::to_string(epoch),
                  static_cast<std::int64_t>(epoch));
    }
    const bool met = current.loss < config.goal;
    if (met || epoch % stride == 0 || epoch == config.max_epochs) {
      trace.mse_history.emplace_back(epoch, current.loss);
    }
    if (met) break;
  }
  trace.final_mse = current.loss;
  trace.goal_met = trace.final_mse < config.goal;
  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace ocon
