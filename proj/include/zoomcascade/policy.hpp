// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zoomcascade/rng.hpp"

namespace zoomcascade {

/// Binary zoom decision per tile (1 = acquire high resolution, run fine tier).
struct ActionVector {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  int ones() const;
  std::uint8_t operator[](std::size_t i) const { return bits[i]; }

  /// Action whose bit i is bit i of `mask` (for exhaustive enumeration).
  static ActionVector from_mask(std::uint64_t mask, int length);

  friend bool operator==(const ActionVector&, const ActionVector&) = default;
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd biases;
};

/**
 * Feed-forward patch-selection policy: rectifier hidden layers and a logistic
 * output per tile. `revision` changes whenever parameters are modified so
 * that stale forward caches can be detected.
 */
class PolicyModel {
 public:
  PolicyModel() = default;

  /// Uniform(+-1/sqrt(fan_in)) weights, zero biases.
  static PolicyModel create(std::vector<int> layer_dims, std::uint64_t seed);
  static PolicyModel zeros(std::vector<int> layer_dims);

  const std::vector<int>& layer_dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  /// Mutable access bumps the revision.
  std::vector<DenseLayer>& mutable_layers();

  std::uint64_t revision() const { return revision_; }

  std::string trained_for = "cpnet";

 private:
  std::vector<int> dims_;
  std::vector<DenseLayer> layers_;
  std::uint64_t revision_ = 0;
};

/// Default layout: input -> 128 -> 64 -> outputs.
std::vector<int> default_layer_dims(int input_dim, int outputs);

/// Intermediates of one forward pass, consumed by backward().
struct ForwardCache {
  std::vector<Eigen::VectorXd> activations;  // input, then each hidden output
  Eigen::VectorXd probs;                     // raw logistic outputs s
  Eigen::VectorXd policy_probs;              // temperature-scaled s used for sampling
  double alpha = 1.0;
  std::uint64_t revision = 0;
  const PolicyModel* model = nullptr;
};

/// Throws ArgumentError when the input length differs from the model input.
ForwardCache forward(const PolicyModel& model, std::span<const double> input, double alpha = 1.0);

/// Componentwise alpha*s + (1-alpha)*(1-s).
std::vector<double> temperature_scale(std::span<const double> s, double alpha);

ActionVector sample_actions(std::span<const double> s, Stream& rng);
/// Bit i set iff s_i > 0.5.
ActionVector greedy_actions(std::span<const double> s);

/// Probability clamp applied before logarithms.
inline constexpr double kProbFloor = 1e-7;

/// Sum of log Bernoulli(s_i) likelihoods of the bits of `a`.
double log_likelihood(std::span<const double> s, const ActionVector& a);

std::vector<double> to_std(const Eigen::VectorXd& v);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static Gradients zeros_like(const PolicyModel& model);
  void add_scaled(const Gradients& other, double factor);
  void scale(double factor);
  double norm() const;
  bool all_finite() const;
};

/**
 * Accumulates d(scale * log pi(a))/d(theta) into `grads`, where pi uses the
 * temperature-scaled probabilities of `cache`. Throws InternalError if the
 * model changed since the forward pass.
 */
void backward(const PolicyModel& model, const ForwardCache& cache, const ActionVector& a,
              double scale, Gradients& grads);

/// Adam ascent on the policy parameters.
class Adam {
 public:
  Adam(const PolicyModel& model, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  /// theta += lr * mhat / (sqrt(vhat) + eps)
  void ascend(PolicyModel& model, const Gradients& grads);
  void reset();
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Gradients m_, v_;
};

}  // namespace zoomcascade
