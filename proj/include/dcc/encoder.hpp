#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dcc/matrix.hpp"
#include "dcc/rng.hpp"

namespace dcc {

// lr(epoch) = base_lr * decay_factor^floor(epoch / decay_every)
struct LrSchedule {
  double base_lr = 3.5e-4;
  double decay_factor = 0.1;
  std::size_t decay_every = 20;
  std::size_t total_epochs = 60;

  double at(std::size_t epoch) const {
    check(decay_every > 0, ErrorCode::InvalidArgument, "decay_every must be > 0");
    const auto steps = static_cast<double>(epoch / decay_every);
    return base_lr * std::pow(decay_factor, steps);
  }
};

struct Layer {
  Matrix weights;            // out_dim x in_dim
  std::vector<double> bias;  // out_dim
};

using ParamGrads = std::vector<Layer>;

struct ForwardCache {
  std::uint64_t encoder_version = 0;
  std::vector<Matrix> inputs;   // per layer: the batch fed into that layer
  std::vector<Matrix> preacts;  // per layer: X * W^T + b before activation
  Matrix pre_norm;              // final layer output before row normalization
  std::vector<double> norms;    // per-row norm of pre_norm
};

struct ForwardResult {
  Matrix features;  // unit-norm rows
  ForwardCache cache;
};

// Small MLP: rectifier on hidden layers, linear output, final row
// L2-normalization. Stands in for the feature-extraction backbone.
class Encoder {
 public:
  Encoder(std::vector<std::size_t> layer_dims, Rng& rng)
      : layer_dims_(std::move(layer_dims)) {
    check(layer_dims_.size() >= 2, ErrorCode::InvalidArgument,
          "encoder needs at least input and output dims");
    for (std::size_t l = 0; l + 1 < layer_dims_.size(); ++l) {
      const std::size_t fan_in = layer_dims_[l];
      const std::size_t fan_out = layer_dims_[l + 1];
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      Layer layer;
      layer.weights = Matrix(fan_out, fan_in);
      for (double& w : layer.weights.data) w = rng.uniform(-limit, limit);
      layer.bias.assign(fan_out, 0.0);
      layers_.push_back(std::move(layer));
    }
  }

  const std::vector<std::size_t>& layer_dims() const { return layer_dims_; }
  std::size_t input_dim() const { return layer_dims_.front(); }
  std::size_t output_dim() const { return layer_dims_.back(); }
  std::size_t num_layers() const { return layers_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }

  ForwardResult forward(const Matrix& batch) const {
    check(batch.cols == input_dim(), ErrorCode::DimMismatch,
          "encoder input dim " + std::to_string(batch.cols) + " != " +
              std::to_string(input_dim()));
    ForwardCache cache;
    cache.encoder_version = version_;
    Matrix x = batch;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      cache.inputs.push_back(x);
      Matrix z = affine(layers_[l], x);
      cache.preacts.push_back(z);
      if (l + 1 < layers_.size()) relu_in_place(z);
      x = std::move(z);
    }
    cache.pre_norm = x;
    cache.norms.resize(x.rows);
    Matrix features = std::move(x);
    for (std::size_t i = 0; i < features.rows; ++i) {
      cache.norms[i] = norm(features.row(i));
      l2_normalize_in_place(features.row(i));
    }
    return {std::move(features), std::move(cache)};
  }

  // Gradient of a scalar loss w.r.t. all parameters, given dL/dfeatures.
  // The normalization layer backpropagates as the tangent projection
  // dL/dz = (g - (g . f) f) / ||z||.
  ParamGrads backward(const ForwardCache& cache, const Matrix& grad_features) const {
    check(cache.encoder_version == version_, ErrorCode::StaleCache,
          "forward cache does not match current encoder parameters");
    check(grad_features.rows == cache.pre_norm.rows &&
              grad_features.cols == cache.pre_norm.cols,
          ErrorCode::DimMismatch, "grad shape != features shape");

    Matrix grad_z(grad_features.rows, grad_features.cols);
    for (std::size_t i = 0; i < grad_features.rows; ++i) {
      const auto g = grad_features.row(i);
      const auto z = cache.pre_norm.row(i);
      const double n = cache.norms[i];
      const double inv = 1.0 / n;
      // f = z / ||z||
      double gf = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) gf += g[k] * z[k] * inv;
      auto out = grad_z.row(i);
      for (std::size_t k = 0; k < g.size(); ++k)
        out[k] = (g[k] - gf * z[k] * inv) * inv;
    }

    ParamGrads grads(layers_.size());
    Matrix upstream = std::move(grad_z);
    for (std::size_t l = layers_.size(); l-- > 0;) {
      if (l + 1 < layers_.size()) {
        // rectifier gate: pass gradient only where the pre-activation was > 0
        const Matrix& z = cache.preacts[l];
        for (std::size_t i = 0; i < upstream.data.size(); ++i)
          if (z.data[i] <= 0.0) upstream.data[i] = 0.0;
      }
      const Matrix& input = cache.inputs[l];
      Layer& g = grads[l];
      g.weights = Matrix(layers_[l].weights.rows, layers_[l].weights.cols);
      g.bias.assign(layers_[l].bias.size(), 0.0);
      for (std::size_t i = 0; i < upstream.rows; ++i) {
        const auto u = upstream.row(i);
        const auto in = input.row(i);
        for (std::size_t o = 0; o < u.size(); ++o) {
          g.bias[o] += u[o];
          auto wrow = g.weights.row(o);
          for (std::size_t k = 0; k < in.size(); ++k) wrow[k] += u[o] * in[k];
        }
      }
      if (l > 0) {
        // dL/dinput = upstream * W
        const Matrix& w = layers_[l].weights;
        Matrix next(upstream.rows, w.cols);
        for (std::size_t i = 0; i < upstream.rows; ++i) {
          const auto u = upstream.row(i);
          auto out = next.row(i);
          for (std::size_t o = 0; o < w.rows; ++o) {
            const auto wrow = w.row(o);
            for (std::size_t k = 0; k < w.cols; ++k) out[k] += u[o] * wrow[k];
          }
        }
        upstream = std::move(next);
      }
    }
    return grads;
  }

 private:
  static Matrix affine(const Layer& layer, const Matrix& x) {
    Matrix z = matmul_transpose(x, layer.weights);
    for (std::size_t i = 0; i < z.rows; ++i) {
      auto r = z.row(i);
      for (std::size_t o = 0; o < r.size(); ++o) r[o] += layer.bias[o];
    }
    return z;
  }

  static void relu_in_place(Matrix& z) {
    for (double& v : z.data)
      if (v < 0.0) v = 0.0;
  }

  std::vector<std::size_t> layer_dims_;
  std::vector<Layer> layers_;
  std::uint64_t version_ = 0;
};

// Adam with decoupled weight decay. Moments mirror the encoder layout.
class AdamOptimizer {
 public:
  double learning_rate = 3.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamOptimizer(const Encoder& enc) {
    for (const Layer& layer : enc.layers()) {
      Layer zero;
      zero.weights = Matrix(layer.weights.rows, layer.weights.cols);
      zero.bias.assign(layer.bias.size(), 0.0);
      m_.push_back(zero);
      v_.push_back(std::move(zero));
    }
  }

  std::uint64_t step_count() const { return step_; }
  std::vector<Layer>& moments_m() { return m_; }
  std::vector<Layer>& moments_v() { return v_; }
  void set_step_count(std::uint64_t t) { step_ = t; }

  void apply(Encoder& enc, const ParamGrads& grads, double weight_decay) {
    check(grads.size() == enc.num_layers(), ErrorCode::DimMismatch,
          "gradient layer count mismatch");
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
    auto& layers = enc.mutable_layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      update(layers[l].weights.data, grads[l].weights.data, m_[l].weights.data,
             v_[l].weights.data, bc1, bc2, weight_decay);
      update(layers[l].bias, grads[l].bias, m_[l].bias, v_[l].bias, bc1, bc2,
             weight_decay);
    }
    enc.bump_version();
  }

 private:
  void update(std::vector<double>& params, const std::vector<double>& grads,
              std::vector<double>& m, std::vector<double>& v, double bc1,
              double bc2, double weight_decay) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grads[i];
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
      params[i] -= learning_rate * weight_decay * params[i];
    }
  }

  std::uint64_t step_ = 0;
  std::vector<Layer> m_;
  std::vector<Layer> v_;
};

inline void apply_gradients(Encoder& enc, AdamOptimizer& opt,
                            const ParamGrads& grads, double weight_decay) {
  opt.apply(enc, grads, weight_decay);
}

}  // namespace dcc
