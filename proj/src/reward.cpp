// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include "zoomcascade/reward.hpp"

#include <string>

#include "zoomcascade/errors.hpp"

namespace zoomcascade {

void Hyperparams::validate() const {
  if (!(alpha > 0 && alpha <= 1)) throw ConfigError("reward.alpha must lie in (0,1]");
  if (!(sigma >= 0) || !(lambda >= 0)) throw ConfigError("reward.sigma and reward.lambda must be >= 0");
  if (!(learning_rate > 0)) throw ConfigError("train.learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
}

std::string_view to_string(RewardVariant v) {
  return v == RewardVariant::combined ? "combined" : "ablation";
}

RewardVariant reward_variant_from_string(std::string_view name) {
  if (name == "combined") return RewardVariant::combined;
  if (name == "ablation") return RewardVariant::ablation;
  throw ConfigError("unknown reward variant '" + std::string(name) + "'");
}

namespace {

void check_lengths(std::span<const PatchOutcome> outcomes, const ActionVector& a) {
  if (outcomes.size() != a.size()) {
    throw ArgumentError("reward: " + std::to_string(outcomes.size()) + " outcomes for " +
                        std::to_string(a.size()) + " action bits");
  }
}

}  // namespace

double zoom_gain(RewardVariant variant, const PatchOutcome& o, double beta) {
  const double margin = variant == RewardVariant::combined ? o.recall_fine - o.recall_coarse - beta
                                                           : o.recall_fine - beta;
  return margin * o.n_objects;
}

AccuracyReward accuracy_reward(std::span<const PatchOutcome> outcomes, const ActionVector& a,
                               double beta) {
  check_lengths(outcomes, a);
  AccuracyReward out;
  out.per_patch_terms.resize(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    out.per_patch_terms[i] = a[i] ? zoom_gain(RewardVariant::combined, outcomes[i], beta) : 0.0;
    out.r_acc += out.per_patch_terms[i];
  }
  return out;
}

double cost_reward(const ActionVector& a, double sigma, double lambda, int tiles) {
  if (tiles <= 0) throw ArgumentError("cost_reward needs at least one tile");
  if (static_cast<int>(a.size()) != tiles) throw ArgumentError("cost_reward: P differs from |a|");
  return (sigma + lambda) * (1.0 - a.ones()) / tiles;
}

namespace {

RewardBreakdown assemble(RewardVariant variant, std::span<const PatchOutcome> outcomes,
                         const ActionVector& a, const Hyperparams& hyper) {
  check_lengths(outcomes, a);
  RewardBreakdown r;
  r.per_patch_terms.resize(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    r.per_patch_terms[i] = a[i] ? zoom_gain(variant, outcomes[i], hyper.beta) : 0.0;
    r.r_acc += r.per_patch_terms[i];
  }
  r.r_cost = cost_reward(a, hyper.sigma, hyper.lambda, static_cast<int>(a.size()));
  r.total = r.r_acc + r.r_cost;
  return r;
}

}  // namespace

RewardBreakdown combined_reward(std::span<const PatchOutcome> outcomes, const ActionVector& a,
                                const Hyperparams& hyper) {
  return assemble(RewardVariant::combined, outcomes, a, hyper);
}

RewardBreakdown ablation_reward(std::span<const PatchOutcome> outcomes, const ActionVector& a,
                                const Hyperparams& hyper) {
  return assemble(RewardVariant::ablation, outcomes, a, hyper);
}

RewardBreakdown reward_for(RewardVariant variant, std::span<const PatchOutcome> outcomes,
                           const ActionVector& a, const Hyperparams& hyper) {
  return assemble(variant, outcomes, a, hyper);
}

ActionVector oracle_policy(std::span<const PatchOutcome> outcomes, const Hyperparams& hyper,
                           int tiles, RewardVariant variant) {
  if (tiles <= 0 || static_cast<int>(outcomes.size()) != tiles) {
    throw ArgumentError("oracle_policy: outcome count differs from P");
  }
  const double threshold = (hyper.sigma + hyper.lambda) / tiles;
  ActionVector a;
  a.bits.reserve(outcomes.size());
  for (const auto& o : outcomes) a.bits.push_back(zoom_gain(variant, o, hyper.beta) > threshold ? 1 : 0);
  return a;
}

}  // namespace zoomcascade
