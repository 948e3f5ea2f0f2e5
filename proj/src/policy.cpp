// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include "zoomcascade/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zoomcascade/errors.hpp"

namespace zoomcascade {

int ActionVector::ones() const {
  return static_cast<int>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

ActionVector ActionVector::from_mask(std::uint64_t mask, int length) {
  ActionVector a;
  a.bits.resize(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) a.bits[i] = static_cast<std::uint8_t>((mask >> i) & 1U);
  return a;
}

namespace {

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw ArgumentError("a policy needs at least input and output dimensions");
  for (int d : dims) {
    if (d < 1) throw ArgumentError("layer dimensions must be positive");
  }
}

}  // namespace

PolicyModel PolicyModel::zeros(std::vector<int> layer_dims) {
  check_dims(layer_dims);
  PolicyModel m;
  m.dims_ = std::move(layer_dims);
  for (std::size_t l = 0; l + 1 < m.dims_.size(); ++l) {
    m.layers_.push_back({Eigen::MatrixXd::Zero(m.dims_[l + 1], m.dims_[l]),
                         Eigen::VectorXd::Zero(m.dims_[l + 1])});
  }
  return m;
}

PolicyModel PolicyModel::create(std::vector<int> layer_dims, std::uint64_t seed) {
  PolicyModel m = zeros(std::move(layer_dims));
  Stream rng(derive_key({seed, 0x90171cULL}));
  for (auto& layer : m.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weights.cols()));
    // Row-major fill keeps the draw order independent of Eigen's storage.
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
      }
    }
  }
  return m;
}

std::size_t PolicyModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.biases.size());
  return n;
}

std::vector<DenseLayer>& PolicyModel::mutable_layers() {
  ++revision_;
  return layers_;
}

std::vector<int> default_layer_dims(int input_dim, int outputs) {
  return {input_dim, 128, 64, outputs};
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

ForwardCache forward(const PolicyModel& model, std::span<const double> input, double alpha) {
  if (static_cast<int>(input.size()) != model.input_dim()) {
    throw ArgumentError("observation has " + std::to_string(input.size()) +
                        " values but the policy expects " + std::to_string(model.input_dim()));
  }
  ForwardCache cache;
  cache.alpha = alpha;
  cache.revision = model.revision();
  cache.model = &model;
  cache.activations.emplace_back(
      Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size())));
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::VectorXd z = layers[l].weights * cache.activations.back() + layers[l].biases;
    if (l + 1 < layers.size()) {
      cache.activations.push_back(z.cwiseMax(0.0));
    } else {
      cache.probs = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    }
  }
  cache.policy_probs = alpha * cache.probs.array() + (1.0 - alpha) * (1.0 - cache.probs.array());
  return cache;
}

std::vector<double> temperature_scale(std::span<const double> s, double alpha) {
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = alpha * s[i] + (1.0 - alpha) * (1.0 - s[i]);
  return out;
}

ActionVector sample_actions(std::span<const double> s, Stream& rng) {
  ActionVector a;
  a.bits.reserve(s.size());
  for (double p : s) a.bits.push_back(rng.uniform() < p ? 1 : 0);
  return a;
}

ActionVector greedy_actions(std::span<const double> s) {
  ActionVector a;
  a.bits.reserve(s.size());
  for (double p : s) a.bits.push_back(p > 0.5 ? 1 : 0);
  return a;
}

double log_likelihood(std::span<const double> s, const ActionVector& a) {
  if (s.size() != a.size()) throw ArgumentError("probability and action lengths differ");
  double total = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = std::clamp(s[i], kProbFloor, 1.0 - kProbFloor);
    total += a[i] ? std::log(p) : std::log1p(-p);
  }
  return total;
}

Gradients Gradients::zeros_like(const PolicyModel& model) {
  Gradients g;
  for (const auto& l : model.layers()) {
    g.weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(l.biases.size()));
  }
  return g;
}

void Gradients::add_scaled(const Gradients& other, double factor) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += factor * other.weights[l];
    biases[l] += factor * other.biases[l];
  }
}

void Gradients::scale(double factor) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] *= factor;
    biases[l] *= factor;
  }
}

double Gradients::norm() const {
  double sq = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    sq += weights[l].squaredNorm() + biases[l].squaredNorm();
  }
  return std::sqrt(sq);
}

bool Gradients::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

void backward(const PolicyModel& model, const ForwardCache& cache, const ActionVector& a,
              double scale, Gradients& grads) {
  if (cache.model != &model || cache.revision != model.revision()) {
    throw InternalError("forward cache is stale: the policy changed after the forward pass");
  }
  const auto n_out = cache.probs.size();
  if (static_cast<Eigen::Index>(a.size()) != n_out) {
    throw ArgumentError("action length does not match the policy output");
  }
  const auto& layers = model.layers();
  if (grads.weights.size() != layers.size()) grads = Gradients::zeros_like(model);

  // d(log pi)/d(logit): chain through the clamp, the temperature map and the logistic.
  const double dscaled = 2.0 * cache.alpha - 1.0;
  Eigen::VectorXd delta(n_out);
  for (Eigen::Index i = 0; i < n_out; ++i) {
    const double p = cache.policy_probs[i];
    const double s = cache.probs[i];
    double dlp = 0.0;
    if (p > kProbFloor && p < 1.0 - kProbFloor) dlp = a[i] ? 1.0 / p : -1.0 / (1.0 - p);
    delta[i] = scale * dlp * dscaled * s * (1.0 - s);
  }
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Eigen::VectorXd& in = cache.activations[l];
    grads.weights[l].noalias() += delta * in.transpose();
    grads.biases[l] += delta;
    if (l == 0) break;
    Eigen::VectorXd back = layers[l].weights.transpose() * delta;
    delta = back.array() * (in.array() > 0.0).cast<double>();
  }
}

Adam::Adam(const PolicyModel& model, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      m_(Gradients::zeros_like(model)),
      v_(Gradients::zeros_like(model)) {}

void Adam::reset() {
  t_ = 0;
  m_.scale(0.0);
  v_.scale(0.0);
}

void Adam::ascend(PolicyModel& model, const Gradients& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto& layers = model.mutable_layers();
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    param.array() += lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weights, m_.weights[l], v_.weights[l], grads.weights[l]);
    update(layers[l].biases, m_.biases[l], v_.biases[l], grads.biases[l]);
  }
}

}  // namespace zoomcascade
