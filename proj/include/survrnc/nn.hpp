#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "survrnc/error.hpp"
#include "survrnc/matrix.hpp"

namespace survrnc {

enum class Activation { Relu, Tanh };

inline std::string_view to_string(Activation a) { return a == Activation::Relu ? "relu" : "tanh"; }

inline Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw Error(ErrorCode::InvalidArgument, "unknown activation '" + std::string(s) + "'");
}

/// Fully connected network shape: widths[0] is the input width, widths.back() the output width.
struct MlpSpec {
  std::vector<std::size_t> layer_widths;
  Activation activation = Activation::Relu;
  std::uint64_t seed = 0;

  std::size_t input_width() const { return layer_widths.front(); }
  std::size_t output_width() const { return layer_widths.back(); }

  void validate() const {
    if (layer_widths.size() < 2) throw Error(ErrorCode::InvalidArgument, "MLP needs at least 2 widths");
    for (auto w : layer_widths)
      if (w == 0) throw Error(ErrorCode::InvalidArgument, "MLP widths must be positive");
  }

  bool operator==(const MlpSpec&) const = default;
};

struct Layer {
  Matrix weight;  // out x in
  std::vector<double> bias;

  bool operator==(const Layer&) const = default;
};

struct ModelParams {
  MlpSpec spec;
  std::vector<Layer> layers;

  std::size_t num_parameters() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  bool operator==(const ModelParams&) const = default;
};

/// Zero-valued tensors with the same shapes as `like`.
inline ModelParams zeros_like(const ModelParams& like) {
  ModelParams out{like.spec, {}};
  for (const auto& l : like.layers)
    out.layers.push_back({Matrix(l.weight.rows(), l.weight.cols()), std::vector<double>(l.bias.size(), 0.0)});
  return out;
}

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases.
inline ModelParams init_params(const MlpSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  ModelParams params{spec, {}};
  for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
    const std::size_t in = spec.layer_widths[l];
    const std::size_t out = spec.layer_widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer layer{Matrix(out, in), std::vector<double>(out, 0.0)};
    for (double& w : layer.weight.flat()) w = dist(rng);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

/// Intermediate values recorded by forward() for the reverse pass.
struct Tape {
  std::vector<Matrix> layer_inputs;     // input to each affine map
  std::vector<Matrix> pre_activations;  // output of each affine map
};

struct ForwardResult {
  Matrix output;
  Tape tape;
};

namespace detail {

inline double activate(Activation a, double z) { return a == Activation::Relu ? (z > 0.0 ? z : 0.0) : std::tanh(z); }

inline double activate_derivative(Activation a, double z) {
  if (a == Activation::Relu) return z > 0.0 ? 1.0 : 0.0;
  const double t = std::tanh(z);
  return 1.0 - t * t;
}

}  // namespace detail

/// Affine + activation on hidden layers; the last layer is affine only.
inline ForwardResult forward(const ModelParams& params, const Matrix& inputs) {
  if (params.layers.empty()) throw Error(ErrorCode::ShapeMismatch, "model has no layers");
  if (inputs.cols() != params.layers.front().weight.cols())
    throw Error(ErrorCode::ShapeMismatch, "input width " + std::to_string(inputs.cols()) + " does not match model input " +
                                              std::to_string(params.layers.front().weight.cols()));
  ForwardResult res;
  Matrix x = inputs;
  const std::size_t rows = inputs.rows();
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    const std::size_t out = layer.weight.rows(), in = layer.weight.cols();
    Matrix z(rows, out);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t o = 0; o < out; ++o) {
        double s = layer.bias[o];
        for (std::size_t i = 0; i < in; ++i) s += layer.weight(o, i) * x(r, i);
        z(r, o) = s;
      }
    }
    res.tape.layer_inputs.push_back(std::move(x));
    const bool last = l + 1 == params.layers.size();
    Matrix h = z;
    if (!last)
      for (double& v : h.flat()) v = detail::activate(params.spec.activation, v);
    res.tape.pre_activations.push_back(std::move(z));
    x = std::move(h);
  }
  res.output = std::move(x);
  return res;
}

struct Gradients {
  ModelParams params;  // same shapes as the model
  Matrix inputs;
};

/// Reverse pass: gradients of a scalar whose gradient w.r.t. the outputs is `upstream`.
inline Gradients backward(const ModelParams& params, const Tape& tape, const Matrix& upstream) {
  const std::size_t depth = params.layers.size();
  if (tape.layer_inputs.size() != depth || tape.pre_activations.size() != depth)
    throw Error(ErrorCode::TapeMismatch, "tape depth does not match the model");
  const Matrix& last_z = tape.pre_activations.back();
  if (upstream.rows() != last_z.rows() || upstream.cols() != last_z.cols())
    throw Error(ErrorCode::TapeMismatch, "upstream gradient shape does not match recorded outputs");

  Gradients g{zeros_like(params), {}};
  Matrix dz = upstream;
  for (std::size_t l = depth; l-- > 0;) {
    const auto& layer = params.layers[l];
    const Matrix& x = tape.layer_inputs[l];
    const std::size_t rows = x.rows(), out = layer.weight.rows(), in = layer.weight.cols();
    if (x.cols() != in || dz.cols() != out) throw Error(ErrorCode::TapeMismatch, "tape layer shape mismatch");
    auto& gl = g.params.layers[l];
    Matrix dx(rows, in);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t o = 0; o < out; ++o) {
        const double d = dz(r, o);
        if (d == 0.0) continue;
        gl.bias[o] += d;
        for (std::size_t i = 0; i < in; ++i) {
          gl.weight(o, i) += d * x(r, i);
          dx(r, i) += d * layer.weight(o, i);
        }
      }
    }
    if (l > 0) {
      const Matrix& z = tape.pre_activations[l - 1];
      for (std::size_t k = 0; k < dx.size(); ++k)
        dx.flat()[k] *= detail::activate_derivative(params.spec.activation, z.flat()[k]);
    }
    dz = std::move(dx);
  }
  g.inputs = std::move(dz);
  return g;
}

struct AdamConfig {
  double lr = 1e-4;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ModelParams first_moment;
  ModelParams second_moment;
  std::uint64_t step = 0;
};

inline AdamState init_adam(const ModelParams& params) { return {zeros_like(params), zeros_like(params), 0}; }

namespace detail {

inline void adam_tensor(std::span<double> p, std::span<const double> g, std::span<double> m, std::span<double> v,
                        const AdamConfig& cfg, double c1, double c2) {
  const double decay = 1.0 - cfg.lr * cfg.weight_decay;
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    p[i] = p[i] * decay - cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
}

}  // namespace detail

/// One Adam update with bias correction and decoupled multiplicative weight decay.
inline void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const AdamConfig& cfg) {
  if (grads.layers.size() != params.layers.size() || state.first_moment.layers.size() != params.layers.size())
    throw Error(ErrorCode::ShapeMismatch, "adam_step: parameter, gradient and state shapes differ");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& p = params.layers[l];
    const auto& g = grads.layers[l];
    auto& m = state.first_moment.layers[l];
    auto& v = state.second_moment.layers[l];
    if (g.weight.size() != p.weight.size() || g.bias.size() != p.bias.size())
      throw Error(ErrorCode::ShapeMismatch, "adam_step: layer shape mismatch");
    detail::adam_tensor(p.weight.flat(), g.weight.flat(), m.weight.flat(), v.weight.flat(), cfg, c1, c2);
    detail::adam_tensor(p.bias, g.bias, m.bias, v.bias, cfg, c1, c2);
  }
}

}  // namespace survrnc
