#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "rna/errors.hpp"
#include "rna/sampling.hpp"

namespace rna {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class OutputActivation { softplus, identity_clamp };

// Two RGB triples: [0..3) assumes the light is visible, [3..6) assumes the
// asset itself shadows it.
inline constexpr int mlp_output_size = 6;

// Fully connected decoder: ReLU hidden layers, softplus outputs.
template <typename Scalar>
struct Mlp {
  std::vector<Matrix<Scalar>> weights;  // weights[l] is sizes[l+1] x sizes[l]
  std::vector<Vector<Scalar>> biases;
  OutputActivation output_activation = OutputActivation::softplus;

  int input_size() const { return weights.empty() ? 0 : int(weights.front().cols()); }
  int layer_count() const { return int(weights.size()); }
  std::vector<int> sizes() const {
    std::vector<int> s;
    if (weights.empty()) return s;
    s.push_back(int(weights.front().cols()));
    for (const auto& w : weights) s.push_back(int(w.rows()));
    return s;
  }
  size_t parameter_count() const {
    size_t n = 0;
    for (size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }

  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> m;
    m.output_activation = output_activation;
    for (const auto& w : weights) m.weights.push_back(w.template cast<Other>());
    for (const auto& b : biases) m.biases.push_back(b.template cast<Other>());
    return m;
  }
};

// input -> hidden_layers x width -> 6, He-uniform weights and zero biases.
template <typename Scalar>
Mlp<Scalar> make_mlp(int input_size, int hidden_layers, int width, Rng& rng,
                     OutputActivation act = OutputActivation::softplus) {
  require(input_size > 0 && hidden_layers >= 1 && width > 0, "invalid MLP dimensions");
  Mlp<Scalar> m;
  m.output_activation = act;
  auto fan_in = input_size;
  for (int l = 0; l <= hidden_layers; ++l) {
    auto out = l == hidden_layers ? mlp_output_size : width;
    auto bound = std::sqrt(6.0 / fan_in);
    Matrix<Scalar> w(out, fan_in);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = Scalar(bound * (2 * rng.uniform() - 1));
    m.weights.push_back(std::move(w));
    m.biases.push_back(Vector<Scalar>::Zero(out));
    fan_in = width;
  }
  return m;
}

template <typename Scalar>
Scalar softplus(Scalar z) {
  return z > Scalar(20) ? z : std::log1p(std::exp(z));
}

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  return Scalar(1) / (Scalar(1) + std::exp(-z));
}

// Activations kept for the backward pass. activations[0] is the input
// batch (one column per sample); activations[l] for 0 < l < L are the ReLU
// outputs; `output_pre` holds the last affine layer before the output
// activation and `output` the final values.
template <typename Scalar>
struct MlpCache {
  std::vector<Matrix<Scalar>> activations;
  Matrix<Scalar> output_pre;
  Matrix<Scalar> output;
};

template <typename Scalar>
void mlp_forward_batch(const Mlp<Scalar>& mlp, const Matrix<Scalar>& input, MlpCache<Scalar>& cache) {
  require(input.rows() == mlp.input_size(), "MLP input length mismatch");
  auto layers = mlp.layer_count();
  cache.activations.resize(layers);
  cache.activations[0] = input;
  for (int l = 0; l + 1 < layers; ++l) {
    cache.activations[l + 1].noalias() = mlp.weights[l] * cache.activations[l];
    cache.activations[l + 1].colwise() += mlp.biases[l];
    cache.activations[l + 1] = cache.activations[l + 1].cwiseMax(Scalar(0));
  }
  cache.output_pre.noalias() = mlp.weights[layers - 1] * cache.activations[layers - 1];
  cache.output_pre.colwise() += mlp.biases[layers - 1];
  if (mlp.output_activation == OutputActivation::softplus)
    cache.output = cache.output_pre.unaryExpr([](Scalar z) { return softplus(z); });
  else
    cache.output = cache.output_pre.cwiseMax(Scalar(0));
}

template <typename Scalar>
struct MlpGradients {
  std::vector<Matrix<Scalar>> weights;
  std::vector<Vector<Scalar>> biases;

  static MlpGradients zeros_like(const Mlp<Scalar>& mlp) {
    MlpGradients g;
    for (const auto& w : mlp.weights) g.weights.push_back(Matrix<Scalar>::Zero(w.rows(), w.cols()));
    for (const auto& b : mlp.biases) g.biases.push_back(Vector<Scalar>::Zero(b.size()));
    return g;
  }
  void set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
  }
  MlpGradients& operator+=(const MlpGradients& o) {
    for (size_t l = 0; l < weights.size(); ++l) {
      weights[l] += o.weights[l];
      biases[l] += o.biases[l];
    }
    return *this;
  }
};

// Reverse pass for a batch. `upstream` is dLoss/dOutput (6 x B). Parameter
// gradients are accumulated into `grads`; when `input_grad` is given it
// receives dLoss/dInput (input_size x B).
template <typename Scalar>
void mlp_backward_batch(const Mlp<Scalar>& mlp, const MlpCache<Scalar>& cache,
                        const Matrix<Scalar>& upstream, MlpGradients<Scalar>& grads,
                        Matrix<Scalar>* input_grad = nullptr) {
  auto layers = mlp.layer_count();
  Matrix<Scalar> delta;
  if (mlp.output_activation == OutputActivation::softplus)
    delta = upstream.cwiseProduct(cache.output_pre.unaryExpr([](Scalar z) { return sigmoid(z); }));
  else
    delta = upstream.cwiseProduct(
        cache.output_pre.unaryExpr([](Scalar z) { return z > Scalar(0) ? Scalar(1) : Scalar(0); }));
  for (int l = layers - 1; l >= 0; --l) {
    grads.weights[l].noalias() += delta * cache.activations[l].transpose();
    grads.biases[l] += delta.rowwise().sum();
    if (l == 0 && !input_grad) break;
    Matrix<Scalar> prev = mlp.weights[l].transpose() * delta;
    if (l == 0) {
      *input_grad = std::move(prev);
      break;
    }
    delta = prev.cwiseProduct(cache.activations[l].unaryExpr(
        [](Scalar a) { return a > Scalar(0) ? Scalar(1) : Scalar(0); }));
  }
}

// Single-sample convenience wrapper over the batched path.
template <typename Scalar>
std::array<Scalar, mlp_output_size> mlp_forward(const Mlp<Scalar>& mlp, std::span<const Scalar> input) {
  require(input.size() == size_t(mlp.input_size()), "MLP input length mismatch");
  Matrix<Scalar> x(input.size(), 1);
  for (size_t i = 0; i < input.size(); ++i) x(i, 0) = input[i];
  MlpCache<Scalar> cache;
  mlp_forward_batch(mlp, x, cache);
  std::array<Scalar, mlp_output_size> out;
  for (int i = 0; i < mlp_output_size; ++i) out[i] = cache.output(i, 0);
  return out;
}

}  // namespace rna
