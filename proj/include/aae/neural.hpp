#pragma once

// Dense feed-forward networks with reverse-mode gradients and Adam.
//
// Batches are column-major: every column of an input matrix is one sample.
// Training goes through forward()/backward() on whole mini-batches; frozen
// inference goes through evaluate(), which computes one sample at a time so
// that a sample's output never depends on what else is in the batch.

#include <Eigen/Dense>

#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "aae/errors.hpp"

namespace aae::nn {

enum class ActivationKind : std::uint8_t { lrelu = 0, tanh = 1, sigmoid = 2, identity = 3 };

struct Activation {
  ActivationKind kind = ActivationKind::identity;
  double alpha = 0.4;  // only read for lrelu

  static Activation lrelu(double alpha) { return {ActivationKind::lrelu, alpha}; }
  static Activation tanh() { return {ActivationKind::tanh, 0.0}; }
  static Activation sigmoid() { return {ActivationKind::sigmoid, 0.0}; }
  static Activation identity() { return {ActivationKind::identity, 0.0}; }

  friend bool operator==(const Activation&, const Activation&) = default;
};

inline std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::lrelu: return "lrelu";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::identity: return "identity";
  }
  return "unknown";
}

inline double lrelu(double x, double alpha) { return x >= 0.0 ? x : alpha * x; }

namespace detail {

// Saturated sigmoid/tanh are pinned to the nearest representable value inside
// the open codomain, so callers can rely on strict bounds.
inline constexpr double kUnitBelowOne = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
inline constexpr double kTinyPositive = std::numeric_limits<double>::min();

inline double sigmoid(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  if (s >= 1.0) return kUnitBelowOne;
  if (s <= 0.0) return kTinyPositive;
  return s;
}

inline double bounded_tanh(double x) {
  const double t = std::tanh(x);
  if (t >= 1.0) return kUnitBelowOne;
  if (t <= -1.0) return -kUnitBelowOne;
  return t;
}

}  // namespace detail

inline double activate(const Activation& act, double x) {
  switch (act.kind) {
    case ActivationKind::lrelu: return lrelu(x, act.alpha);
    case ActivationKind::tanh: return detail::bounded_tanh(x);
    case ActivationKind::sigmoid: return detail::sigmoid(x);
    case ActivationKind::identity: return x;
  }
  return x;
}

// Derivative expressed through the pre-activation and the activation output.
inline double activation_derivative(const Activation& act, double pre, double out) {
  switch (act.kind) {
    case ActivationKind::lrelu: return pre >= 0.0 ? 1.0 : act.alpha;
    case ActivationKind::tanh: return 1.0 - out * out;
    case ActivationKind::sigmoid: return out * (1.0 - out);
    case ActivationKind::identity: return 1.0;
  }
  return 1.0;
}

/// SplitMix64 step; used to derive independent per-layer seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Glorot/Xavier uniform initialisation: U[-b, b], b = sqrt(6 / (fan_in + fan_out)).
/// Returns a fan_out x fan_in matrix.
inline Eigen::MatrixXd glorot_init(long fan_in, long fan_out, std::uint64_t seed) {
  if (fan_in < 1 || fan_out < 1) {
    throw DimensionError("glorot_init: dimensions must be positive, got " + std::to_string(fan_in) +
                         "x" + std::to_string(fan_out));
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd w(fan_out, fan_in);
  // Row-major fill so the draw order matches the serialized layout.
  for (long r = 0; r < fan_out; ++r)
    for (long c = 0; c < fan_in; ++c) w(r, c) = dist(rng);
  return w;
}

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation;

  long in_dim() const { return weights.cols(); }
  long out_dim() const { return weights.rows(); }
};

/// Everything backward() needs from a forward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // input to layer i
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of layer i
  Eigen::MatrixXd output;

  bool empty() const { return inputs.empty(); }
};

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;
  Eigen::MatrixXd input;

  Gradients& operator+=(const Gradients& other) {
    if (other.weights.size() != weights.size()) throw DimensionError("gradient layer count mismatch");
    for (std::size_t i = 0; i < weights.size(); ++i) {
      weights[i] += other.weights[i];
      bias[i] += other.bias[i];
    }
    if (input.size() == other.input.size()) input += other.input;
    return *this;
  }
};

class Network {
 public:
  Network() = default;

  explicit Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw DimensionError("network needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      if (l.in_dim() < 1 || l.out_dim() < 1 || l.bias.size() != l.out_dim()) {
        throw DimensionError("layer " + std::to_string(i) + " has inconsistent weight/bias shapes");
      }
      if (i > 0 && layers_[i - 1].out_dim() != l.in_dim()) {
        throw DimensionError("layer " + std::to_string(i) + " input dim does not chain");
      }
    }
  }

  /// Fully connected stack input -> hidden... -> output. Hidden layers share
  /// `hidden`; the last layer uses `output_act`. Biases start at zero.
  static Network build(long input_dim, std::span<const long> hidden, long output_dim,
                       Activation hidden_act, Activation output_act, std::uint64_t seed) {
    std::vector<long> dims{input_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(output_dim);
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
      const bool last = i + 2 == dims.size();
      layers.push_back({glorot_init(dims[i], dims[i + 1], mix_seed(seed + i)),
                        Eigen::VectorXd::Zero(std::max<long>(dims[i + 1], 0)),
                        last ? output_act : hidden_act});
    }
    return Network(std::move(layers));
  }

  long input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
  long output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
  }

  ForwardCache forward(const Eigen::MatrixXd& batch) const {
    check_input(batch.rows(), "forward");
    if (!batch.allFinite()) throw NumericError("forward: non-finite input");
    ForwardCache cache;
    cache.inputs.reserve(layers_.size());
    cache.pre.reserve(layers_.size());
    Eigen::MatrixXd x = batch;
    for (const auto& layer : layers_) {
      Eigen::MatrixXd z = layer.weights * x;
      z.colwise() += layer.bias;
      cache.inputs.push_back(std::move(x));
      x = z.unaryExpr([&](double v) { return activate(layer.activation, v); });
      cache.pre.push_back(std::move(z));
    }
    assert(codomain_ok(x));
    cache.output = std::move(x);
    return cache;
  }

  /// Single-sample inference. The result depends only on `input` and the
  /// parameters, never on batch composition.
  Eigen::VectorXd evaluate(std::span<const double> input) const {
    check_input(static_cast<long>(input.size()), "evaluate");
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<long>(input.size()));
    if (!x.allFinite()) throw NumericError("evaluate: non-finite input");
    for (const auto& layer : layers_) {
      Eigen::VectorXd z = layer.weights * x + layer.bias;
      x = z.unaryExpr([&](double v) { return activate(layer.activation, v); });
    }
    assert(codomain_ok(x));
    return x;
  }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& input) const {
    return evaluate(std::span<const double>(input.data(), static_cast<std::size_t>(input.size())));
  }

  /// Reverse pass for d(loss)/d(output) = `output_grad` (same shape as the
  /// cached output). Returns parameter gradients summed over the batch and the
  /// gradient with respect to the network input.
  Gradients backward(const ForwardCache& cache, const Eigen::MatrixXd& output_grad) const {
    if (cache.empty() || cache.inputs.size() != layers_.size()) {
      throw StateError("backward called without a matching forward cache");
    }
    if (output_grad.rows() != cache.output.rows() || output_grad.cols() != cache.output.cols()) {
      throw DimensionError("backward: output gradient shape mismatch");
    }
    Gradients g;
    g.weights.resize(layers_.size());
    g.bias.resize(layers_.size());
    Eigen::MatrixXd delta = output_grad;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const auto& layer = layers_[i];
      const Eigen::MatrixXd& pre = cache.pre[i];
      const Eigen::MatrixXd& out = (i + 1 == layers_.size()) ? cache.output : cache.inputs[i + 1];
      for (long c = 0; c < delta.cols(); ++c)
        for (long r = 0; r < delta.rows(); ++r)
          delta(r, c) *= activation_derivative(layer.activation, pre(r, c), out(r, c));
      g.weights[i].noalias() = delta * cache.inputs[i].transpose();
      g.bias[i] = delta.rowwise().sum();
      Eigen::MatrixXd next = layer.weights.transpose() * delta;
      delta = std::move(next);
    }
    g.input = std::move(delta);
    return g;
  }

 private:
  void check_input(long rows, const char* where) const {
    if (layers_.empty()) throw StateError(std::string(where) + ": empty network");
    if (rows != input_dim()) {
      throw DimensionError(std::string(where) + ": expected input dim " + std::to_string(input_dim()) +
                           ", got " + std::to_string(rows));
    }
  }

  bool codomain_ok(const Eigen::MatrixXd& out) const {
    switch (layers_.back().activation.kind) {
      case ActivationKind::sigmoid: return (out.array() > 0.0).all() && (out.array() < 1.0).all();
      case ActivationKind::tanh: return (out.array() > -1.0).all() && (out.array() < 1.0).all();
      default: return true;
    }
  }

  std::vector<DenseLayer> layers_;
};

// ---------------------------------------------------------------------------
// Adam

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-9;

  void validate() const {
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0) || !(epsilon > 0.0) ||
        !(learning_rate >= 0.0)) {
      throw ConfigError("Adam hyperparameters out of range");
    }
  }
};

/// First/second moment buffers, one per parameter block.
struct AdamState {
  AdamHyper hyper;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(AdamHyper h, std::span<const std::size_t> block_sizes) : hyper(h) {
    hyper.validate();
    for (std::size_t n : block_sizes) {
      first_moment.emplace_back(n, 0.0);
      second_moment.emplace_back(n, 0.0);
    }
  }

  static AdamState for_network(const Network& net, AdamHyper h) {
    std::vector<std::size_t> sizes;
    for (const auto& l : net.layers()) {
      sizes.push_back(static_cast<std::size_t>(l.weights.size()));
      sizes.push_back(static_cast<std::size_t>(l.bias.size()));
    }
    return AdamState(h, sizes);
  }
};

/// One bias-corrected Adam update of `params` in place. `t` is the 1-based
/// step index of this update.
inline void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                        std::span<double> v, std::uint64_t t, const AdamHyper& h) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    throw DimensionError("adam: parameter/gradient/moment sizes differ");
  }
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * grads[i];
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * grads[i] * grads[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    params[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
  }
}

/// Generic Adam step over parameter blocks; increments the state's step count.
inline void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                      AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw DimensionError("adam_step: block count mismatch");
  }
  ++state.step;
  for (std::size_t b = 0; b < params.size(); ++b) {
    adam_update(params[b], grads[b], state.first_moment[b], state.second_moment[b], state.step, state.hyper);
  }
}

inline void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  auto& layers = net.layers();
  if (grads.weights.size() != layers.size() || grads.bias.size() != layers.size()) {
    throw DimensionError("adam_step: gradient layer count mismatch");
  }
  std::vector<std::span<double>> p;
  std::vector<std::span<const double>> g;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& l = layers[i];
    if (grads.weights[i].rows() != l.weights.rows() || grads.weights[i].cols() != l.weights.cols() ||
        grads.bias[i].size() != l.bias.size()) {
      throw DimensionError("adam_step: gradient shape mismatch at layer " + std::to_string(i));
    }
    p.emplace_back(l.weights.data(), static_cast<std::size_t>(l.weights.size()));
    g.emplace_back(grads.weights[i].data(), static_cast<std::size_t>(grads.weights[i].size()));
    p.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    g.emplace_back(grads.bias[i].data(), static_cast<std::size_t>(grads.bias[i].size()));
  }
  adam_step(p, g, state);
}

}  // namespace aae::nn
