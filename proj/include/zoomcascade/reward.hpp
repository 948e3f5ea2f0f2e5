// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "zoomcascade/policy.hpp"

namespace zoomcascade {

struct Hyperparams {
  double alpha = 0.8;   // temperature
  double beta = 0.05;   // recall margin
  double sigma = 0.25;  // acquisition cost
  double lambda = 0.25; // run-time cost
  double learning_rate = 1e-4;
  int batch_size = 64;
  int epochs = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Detector recalls on one tile and the number of objects it owns.
struct PatchOutcome {
  double recall_fine = 0;
  double recall_coarse = 0;
  int n_objects = 0;
};

struct RewardBreakdown {
  double r_acc = 0;
  double r_cost = 0;
  double total = 0;
  std::vector<double> per_patch_terms;
};

enum class RewardVariant { combined, ablation };

std::string_view to_string(RewardVariant v);
RewardVariant reward_variant_from_string(std::string_view name);

struct AccuracyReward {
  double r_acc = 0;
  std::vector<double> per_patch_terms;
};

/// term_i = a_i * (recall_fine_i - recall_coarse_i - beta) * N_i
AccuracyReward accuracy_reward(std::span<const PatchOutcome> outcomes, const ActionVector& a,
                               double beta);

/// (sigma + lambda) * (1 - |a|_1) / P
double cost_reward(const ActionVector& a, double sigma, double lambda, int tiles);

RewardBreakdown combined_reward(std::span<const PatchOutcome> outcomes, const ActionVector& a,
                                const Hyperparams& hyper);

/// Coarse detector removed: term_i = a_i * (recall_fine_i - beta) * N_i.
RewardBreakdown ablation_reward(std::span<const PatchOutcome> outcomes, const ActionVector& a,
                                const Hyperparams& hyper);

RewardBreakdown reward_for(RewardVariant variant, std::span<const PatchOutcome> outcomes,
                           const ActionVector& a, const Hyperparams& hyper);

/// Gain a patch earns when zoomed, before the per-zoom cost.
double zoom_gain(RewardVariant variant, const PatchOutcome& o, double beta);

/**
 * Exact maximizer of the (separable) reward: zoom tile i iff its gain exceeds
 * (sigma + lambda) / P. Ties resolve to not zooming.
 */
ActionVector oracle_policy(std::span<const PatchOutcome> outcomes, const Hyperparams& hyper,
                           int tiles, RewardVariant variant = RewardVariant::combined);

}  // namespace zoomcascade
