// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include "zoomcascade/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "zoomcascade/metrics.hpp"
#include "zoomcascade/parallel.hpp"

namespace zoomcascade {

std::string_view to_string(Stage s) { return s == Stage::cpnet ? "cpnet" : "fpnet"; }

Stage stage_from_string(std::string_view name) {
  if (name == "cpnet") return Stage::cpnet;
  if (name == "fpnet") return Stage::fpnet;
  throw ArgumentError("unknown stage '" + std::string(name) + "' (expected cpnet or fpnet)");
}

std::vector<TrainSample> build_samples(const std::vector<Scene>& scenes, const GridLayout& grid,
                                       Stage stage, const RasterConfig& raster) {
  std::vector<TrainSample> out;
  for (const auto& scene : scenes) {
    const Assignment assign = assign_boxes(scene, grid);
    RasterObservation obs = rasterize(scene, raster.side, raster.side, raster.intensities);
    if (stage == Stage::cpnet) {
      TrainSample s;
      s.scene_id = scene.id;
      s.obs = std::move(obs);
      for (int p = 0; p < grid.patch_count(); ++p) {
        s.tiles.push_back({p, std::nullopt, grid.patch_rect(p)});
        s.tile_gt.push_back(assign.patch_boxes[p]);
      }
      out.push_back(std::move(s));
    } else {
      for (int p = 0; p < grid.patch_count(); ++p) {
        TrainSample s;
        s.scene_id = scene.id;
        s.patch = p;
        s.obs = crop_observation(obs, grid, p);
        for (int q = 0; q < grid.subpatch_count(); ++q) {
          s.tiles.push_back({p, q, grid.subpatch_rect(p, q)});
          s.tile_gt.push_back(assign.subpatch_boxes[p][q]);
        }
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

std::vector<PatchOutcome> sampled_outcomes(const TrainSample& sample, const DetectorPair& detectors,
                                           std::uint64_t draw_seed, double reward_iou) {
  std::vector<PatchOutcome> out(sample.tiles.size());
  for (std::size_t t = 0; t < sample.tiles.size(); ++t) {
    const auto& gt = sample.tile_gt[t];
    out[t].n_objects = static_cast<int>(gt.size());
    for (Tier tier : {Tier::coarse, Tier::fine}) {
      Stream rng = detector_stream(draw_seed, sample.scene_id, sample.tiles[t], tier);
      const DetectionSet dets = detect(detectors[tier], gt, sample.tiles[t], rng);
      const double r = recall(gt, dets.boxes, reward_iou);
      (tier == Tier::coarse ? out[t].recall_coarse : out[t].recall_fine) = r;
    }
  }
  return out;
}

std::vector<PatchOutcome> expected_outcomes(const TrainSample& sample, const DetectorPair& detectors) {
  std::vector<PatchOutcome> out(sample.tiles.size());
  for (std::size_t t = 0; t < sample.tiles.size(); ++t) {
    const auto& gt = sample.tile_gt[t];
    out[t] = {expected_recall(detectors.fine, gt), expected_recall(detectors.coarse, gt),
              static_cast<int>(gt.size())};
  }
  return out;
}

namespace {

void check_output_dim(const PolicyModel& model, const TrainSample& sample) {
  if (model.output_dim() != static_cast<int>(sample.tiles.size())) {
    throw ArgumentError("policy has " + std::to_string(model.output_dim()) + " outputs but the " +
                        "sample offers " + std::to_string(sample.tiles.size()) + " tiles");
  }
}

}  // namespace

Rollout rollout(const PolicyModel& model, const TrainSample& sample, const TrainConfig& config,
                const DetectorPair& detectors, std::uint64_t step_seed, double reward_offset) {
  check_output_dim(model, sample);
  Rollout r;
  r.cache = forward(model, sample.obs.view(), config.hyper.alpha);
  const auto scaled = to_std(r.cache.policy_probs);
  Stream action_rng(derive_key({step_seed, hash_string(sample.scene_id),
                               static_cast<std::uint64_t>(sample.patch), 0xac7ULL}));
  r.sampled = sample_actions(scaled, action_rng);
  r.baseline = greedy_actions(scaled);
  const auto outcomes = sampled_outcomes(sample, detectors, step_seed, config.reward_iou);
  r.reward_sampled = reward_for(config.variant, outcomes, r.sampled, config.hyper).total + reward_offset;
  r.reward_baseline = reward_for(config.variant, outcomes, r.baseline, config.hyper).total + reward_offset;
  r.advantage = r.reward_sampled - r.reward_baseline;
  return r;
}

std::string to_json_line(const TrainLogRecord& rec) {
  nlohmann::json j = {{"epoch", rec.epoch},
                      {"step", rec.step},
                      {"mean_sampled_reward", rec.mean_sampled_reward},
                      {"mean_baseline_reward", rec.mean_baseline_reward},
                      {"mean_advantage", rec.mean_advantage},
                      {"mean_zoom_fraction", rec.mean_zoom_fraction},
                      {"gradient_norm", rec.gradient_norm}};
  return j.dump();
}

void backward_batch(const PolicyModel& model, std::span<const ForwardCache* const> caches,
                    std::span<const ActionVector* const> actions, std::span<const double> scales,
                    Gradients& grads) {
  const auto batch = static_cast<Eigen::Index>(caches.size());
  if (actions.size() != caches.size() || scales.size() != caches.size()) {
    throw ArgumentError("backward_batch: caches, actions and scales differ in length");
  }
  const auto& layers = model.layers();
  if (grads.weights.size() != layers.size()) grads = Gradients::zeros_like(model);
  if (batch == 0) return;
  const Eigen::Index n_out = model.output_dim();

  Eigen::MatrixXd delta(n_out, batch);
  for (Eigen::Index k = 0; k < batch; ++k) {
    const ForwardCache& c = *caches[k];
    if (c.model != &model || c.revision != model.revision()) {
      throw InternalError("forward cache is stale: the policy changed after the forward pass");
    }
    const ActionVector& a = *actions[k];
    if (static_cast<Eigen::Index>(a.size()) != n_out) {
      throw ArgumentError("action length does not match the policy output");
    }
    const double dscaled = 2.0 * c.alpha - 1.0;
    for (Eigen::Index i = 0; i < n_out; ++i) {
      const double p = c.policy_probs[i];
      const double s = c.probs[i];
      double dlp = 0.0;
      if (p > kProbFloor && p < 1.0 - kProbFloor) dlp = a[i] ? 1.0 / p : -1.0 / (1.0 - p);
      delta(i, k) = scales[k] * dlp * dscaled * s * (1.0 - s);
    }
  }
  for (std::size_t l = layers.size(); l-- > 0;) {
    Eigen::MatrixXd in(layers[l].weights.cols(), batch);
    for (Eigen::Index k = 0; k < batch; ++k) in.col(k) = caches[k]->activations[l];
    grads.weights[l].noalias() += delta * in.transpose();
    grads.biases[l] += delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = layers[l].weights.transpose() * delta;
    delta = back.array() * (in.array() > 0.0).cast<double>();
  }
}

Trainer::Trainer(PolicyModel& model, TrainConfig config, DetectorPair detectors)
    : model_(model),
      config_(std::move(config)),
      detectors_(std::move(detectors)),
      adam_(model, config_.hyper.learning_rate, config_.adam_beta1, config_.adam_beta2,
            config_.adam_eps) {
  config_.hyper.validate();
  detectors_.validate();
}

TrainLogRecord Trainer::step(std::span<const TrainSample* const> batch, std::uint64_t step_seed) {
  TrainLogRecord rec;
  if (batch.empty()) return rec;
  std::vector<Rollout> rollouts(batch.size());
  parallel_for(batch.size(), config_.threads, [&](std::size_t k) {
    rollouts[k] = rollout(model_, *batch[k], config_, detectors_, step_seed);
  });

  std::vector<const ForwardCache*> caches;
  std::vector<const ActionVector*> actions;
  std::vector<double> scales;
  double zoom = 0;
  for (const auto& r : rollouts) {
    caches.push_back(&r.cache);
    actions.push_back(&r.sampled);
    scales.push_back(r.advantage);
    rec.mean_sampled_reward += r.reward_sampled;
    rec.mean_baseline_reward += r.reward_baseline;
    rec.mean_advantage += r.advantage;
    zoom += static_cast<double>(r.sampled.ones()) / static_cast<double>(r.sampled.size());
  }
  const double n = static_cast<double>(batch.size());
  rec.mean_sampled_reward /= n;
  rec.mean_baseline_reward /= n;
  rec.mean_advantage /= n;
  rec.mean_zoom_fraction = zoom / n;

  Gradients grads = Gradients::zeros_like(model_);
  backward_batch(model_, caches, actions, scales, grads);
  grads.scale(1.0 / n);
  rec.gradient_norm = grads.norm();
  if (!grads.all_finite() || !std::isfinite(rec.mean_advantage)) {
    throw TrainingDiverged("non-finite policy gradient", rec);
  }
  adam_.ascend(model_, grads);
  return rec;
}

TrainResult train(PolicyModel& model, const std::vector<TrainSample>& samples,
                  const TrainConfig& config, const DetectorPair& detectors, std::uint64_t seed,
                  const LogSink& on_log, const EpochHook& on_epoch) {
  if (samples.empty()) throw ArgumentError("training needs at least one sample");
  for (const auto& s : samples) check_output_dim(model, s);
  Trainer trainer(model, config, detectors);
  TrainResult result;
  std::vector<std::size_t> order(samples.size());
  const auto batch_size = static_cast<std::size_t>(config.hyper.batch_size);
  for (int epoch = 0; epoch < config.hyper.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Stream shuffle_rng(derive_key({seed, 0x5u, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng() % i]);
    }
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      std::vector<const TrainSample*> batch;
      for (std::size_t k = start; k < std::min(order.size(), start + batch_size); ++k) {
        batch.push_back(&samples[order[k]]);
      }
      const std::uint64_t step_seed =
          derive_key({seed, 0x57e9ULL, static_cast<std::uint64_t>(result.steps)});
      TrainLogRecord rec = trainer.step(batch, step_seed);
      rec.epoch = epoch;
      rec.step = result.steps++;
      if (config.log_every > 0 && rec.step % config.log_every == 0) {
        result.log.push_back(rec);
        if (on_log) on_log(rec);
      }
    }
    if (on_epoch) on_epoch(epoch, model);
  }
  return result;
}

GradCheckReport grad_check(const PolicyModel& model, std::span<const double> observation,
                           const ActionVector& action, double scale, double alpha, double corrupt) {
  const ForwardCache cache = forward(model, observation, alpha);
  Gradients analytic = Gradients::zeros_like(model);
  backward(model, cache, action, scale, analytic);
  if (corrupt != 0.0) analytic.weights[0](0, 0) += corrupt;

  auto objective = [&](const PolicyModel& m) {
    const ForwardCache c = forward(m, observation, alpha);
    return scale * log_likelihood(to_std(c.policy_probs), action);
  };
  constexpr double kStep = 1e-5;
  PolicyModel probe = model;
  GradCheckReport report;
  auto compare = [&](double a, double fd) {
    const double abs_err = std::abs(a - fd);
    const double denom = std::max({std::abs(a), std::abs(fd), 1e-6});
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    report.max_relative_error = std::max(report.max_relative_error, abs_err / denom);
    ++report.parameters_checked;
  };
  auto central = [&](double& param) {
    const double saved = param;
    param = saved + kStep;
    const double up = objective(probe);
    param = saved - kStep;
    const double down = objective(probe);
    param = saved;
    return (up - down) / (2 * kStep);
  };
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    auto& layer = probe.mutable_layers()[l];
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        compare(analytic.weights[l](r, c), central(layer.weights(r, c)));
      }
      compare(analytic.biases[l](r), central(layer.biases(r)));
    }
  }
  return report;
}

McCheckReport mc_check(std::span<const double> policy_probs, std::span<const PatchOutcome> outcomes,
                       const Hyperparams& hyper, RewardVariant variant, long n_samples,
                       std::uint64_t seed) {
  const int p = static_cast<int>(policy_probs.size());
  if (p > 12) throw ArgumentError("mc_check enumerates 2^P actions and requires P <= 12");
  if (n_samples < 1) throw ArgumentError("mc_check needs at least one sample");
  McCheckReport rep;
  rep.samples = n_samples;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << p); ++mask) {
    const ActionVector a = ActionVector::from_mask(mask, p);
    double prob = 1.0;
    for (int i = 0; i < p; ++i) prob *= a[i] ? policy_probs[i] : 1.0 - policy_probs[i];
    rep.exact_expectation += prob * reward_for(variant, outcomes, a, hyper).total;
  }
  Stream rng(derive_key({seed, 0x3cULL}));
  double sum = 0, sum_sq = 0;
  for (long k = 0; k < n_samples; ++k) {
    const double r = reward_for(variant, outcomes, sample_actions(policy_probs, rng), hyper).total;
    sum += r;
    sum_sq += r * r;
  }
  const double n = static_cast<double>(n_samples);
  rep.empirical_mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum_sq - n * rep.empirical_mean * rep.empirical_mean) / (n - 1)) : 0.0;
  rep.standard_error = std::sqrt(var / n);
  rep.abs_gap = std::abs(rep.empirical_mean - rep.exact_expectation);
  return rep;
}

McCheckReport mc_check(const PolicyModel& model, const TrainSample& sample,
                       const TrainConfig& config, const DetectorPair& detectors, long n_samples,
                       std::uint64_t seed) {
  check_output_dim(model, sample);
  const ForwardCache c = forward(model, sample.obs.view(), config.hyper.alpha);
  return mc_check(to_std(c.policy_probs), expected_outcomes(sample, detectors), config.hyper,
                  config.variant, n_samples, seed);
}

double greedy_expected_reward(const PolicyModel& model, const TrainSample& sample,
                              const Hyperparams& hyper, RewardVariant variant,
                              const DetectorPair& detectors) {
  check_output_dim(model, sample);
  const ForwardCache c = forward(model, sample.obs.view());
  return reward_for(variant, expected_outcomes(sample, detectors), greedy_actions(to_std(c.probs)),
                    hyper)
      .total;
}

double oracle_expected_reward(const TrainSample& sample, const Hyperparams& hyper,
                              RewardVariant variant, const DetectorPair& detectors) {
  const auto outcomes = expected_outcomes(sample, detectors);
  const auto a = oracle_policy(outcomes, hyper, static_cast<int>(outcomes.size()), variant);
  return reward_for(variant, outcomes, a, hyper).total;
}

double random_expected_reward(const TrainSample& sample, double p, const Hyperparams& hyper,
                              RewardVariant variant, const DetectorPair& detectors) {
  const auto outcomes = expected_outcomes(sample, detectors);
  const double tiles = static_cast<double>(outcomes.size());
  double acc = 0;
  for (const auto& o : outcomes) acc += p * zoom_gain(variant, o, hyper.beta);
  return acc + (hyper.sigma + hyper.lambda) * (1.0 - p * tiles) / tiles;
}

}  // namespace zoomcascade
