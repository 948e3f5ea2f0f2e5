// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zoomcascade/detector.hpp"
#include "zoomcascade/errors.hpp"
#include "zoomcascade/policy.hpp"
#include "zoomcascade/reward.hpp"
#include "zoomcascade/scene.hpp"

namespace zoomcascade {

enum class Stage { cpnet, fpnet };

std::string_view to_string(Stage s);
Stage stage_from_string(std::string_view name);

/// How scenes become policy inputs. The fine-level input is the matching
/// crop of the scene raster.
struct RasterConfig {
  int side = 64;
  ClassIntensities intensities{{0, 1.0}, {1, 0.5}};
};

struct TrainConfig {
  Hyperparams hyper;
  Stage stage = Stage::cpnet;
  RewardVariant variant = RewardVariant::combined;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double reward_iou = 0.5;
  int log_every = 1;
  int threads = 1;
};

/// One policy decision problem: an observation and the tiles it chooses among.
struct TrainSample {
  std::string scene_id;
  int patch = -1;  // owning patch for fine-level samples
  RasterObservation obs;
  std::vector<TileRef> tiles;
  std::vector<std::vector<BBox>> tile_gt;
};

/// Coarse level: one sample per scene over its patches. Fine level: one
/// sample per (scene, patch) over that patch's subpatches.
std::vector<TrainSample> build_samples(const std::vector<Scene>& scenes, const GridLayout& grid,
                                       Stage stage, const RasterConfig& raster);

/// Recalls from one shared detector draw per (tile, tier), keyed by `draw_seed`.
std::vector<PatchOutcome> sampled_outcomes(const TrainSample& sample, const DetectorPair& detectors,
                                           std::uint64_t draw_seed, double reward_iou);
/// Recalls replaced by their analytic expectation.
std::vector<PatchOutcome> expected_outcomes(const TrainSample& sample, const DetectorPair& detectors);

struct Rollout {
  ForwardCache cache;
  ActionVector sampled;
  ActionVector baseline;
  double reward_sampled = 0;
  double reward_baseline = 0;
  double advantage = 0;
};

/// Sampled action vs greedy baseline under identical detector draws.
/// `reward_offset` is added to both rewards (used to probe baseline invariance).
Rollout rollout(const PolicyModel& model, const TrainSample& sample, const TrainConfig& config,
                const DetectorPair& detectors, std::uint64_t step_seed, double reward_offset = 0.0);

struct TrainLogRecord {
  int epoch = 0;
  long step = 0;
  double mean_sampled_reward = 0;
  double mean_baseline_reward = 0;
  double mean_advantage = 0;
  double mean_zoom_fraction = 0;
  double gradient_norm = 0;
};

std::string to_json_line(const TrainLogRecord& record);

/// Thrown when a step yields non-finite gradients; carries the offending step.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, TrainLogRecord record)
      : NumericError(what), record_(record) {}
  const TrainLogRecord& record() const { return record_; }

 private:
  TrainLogRecord record_;
};

/// Batched gradient of sum_k scale_k * log pi(a_k); equals repeated backward().
void backward_batch(const PolicyModel& model, std::span<const ForwardCache* const> caches,
                    std::span<const ActionVector* const> actions, std::span<const double> scales,
                    Gradients& grads);

class Trainer {
 public:
  Trainer(PolicyModel& model, TrainConfig config, DetectorPair detectors);

  /// One REINFORCE update on the mean advantage-weighted gradient.
  TrainLogRecord step(std::span<const TrainSample* const> batch, std::uint64_t step_seed);

  Adam& optimizer() { return adam_; }
  const TrainConfig& config() const { return config_; }

 private:
  PolicyModel& model_;
  TrainConfig config_;
  DetectorPair detectors_;
  Adam adam_;
};

struct TrainResult {
  std::vector<TrainLogRecord> log;
  long steps = 0;
};

using LogSink = std::function<void(const TrainLogRecord&)>;
/// Called after each epoch with the model (for checkpoints).
using EpochHook = std::function<void(int epoch, const PolicyModel&)>;

TrainResult train(PolicyModel& model, const std::vector<TrainSample>& samples,
                  const TrainConfig& config, const DetectorPair& detectors, std::uint64_t seed,
                  const LogSink& on_log = {}, const EpochHook& on_epoch = {});

// ---------------------------------------------------------------------------
// Diagnostics

struct GradCheckReport {
  double max_relative_error = 0;
  double max_abs_error = 0;
  std::size_t parameters_checked = 0;
};

/// Analytic backward vs central differences (step 1e-5) of
/// scale * log_likelihood(temperature_scale(s, alpha), action) over every
/// parameter. `corrupt` is added to one analytic component (negative control).
GradCheckReport grad_check(const PolicyModel& model, std::span<const double> observation,
                           const ActionVector& action, double scale, double alpha,
                           double corrupt = 0.0);

struct McCheckReport {
  double empirical_mean = 0;
  double exact_expectation = 0;
  double abs_gap = 0;
  double standard_error = 0;
  long samples = 0;
};

/// Monte-Carlo mean reward of sampled actions vs exhaustive sum_a pi(a) R(a),
/// using temperature-scaled probabilities and expected-recall outcomes.
McCheckReport mc_check(std::span<const double> policy_probs, std::span<const PatchOutcome> outcomes,
                       const Hyperparams& hyper, RewardVariant variant, long n_samples,
                       std::uint64_t seed);
McCheckReport mc_check(const PolicyModel& model, const TrainSample& sample,
                       const TrainConfig& config, const DetectorPair& detectors, long n_samples,
                       std::uint64_t seed);

// ---------------------------------------------------------------------------
// Analytic policy evaluation on expected-recall outcomes

/// Reward of the greedy action of the untempered policy.
double greedy_expected_reward(const PolicyModel& model, const TrainSample& sample,
                              const Hyperparams& hyper, RewardVariant variant,
                              const DetectorPair& detectors);
double oracle_expected_reward(const TrainSample& sample, const Hyperparams& hyper,
                              RewardVariant variant, const DetectorPair& detectors);
/// Expected reward of zooming each tile independently with probability p.
double random_expected_reward(const TrainSample& sample, double p, const Hyperparams& hyper,
                              RewardVariant variant, const DetectorPair& detectors);

}  // namespace zoomcascade
