// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include "zoomcascade/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "zoomcascade/errors.hpp"
#include "zoomcascade/rng.hpp"

namespace zoomcascade {

void SynthConfig::validate() const {
  if (scene_side <= 0) throw ConfigError("synth.scene_side must be positive");
  if (n_scenes < 0) throw ConfigError("synth.n_scenes must be non-negative");
  if (!(cluster_rate >= 0)) throw ConfigError("synth.cluster_rate must be non-negative");
  if (objects_per_cluster_min < 1 || objects_per_cluster_max < objects_per_cluster_min) {
    throw ConfigError("synth.objects_per_cluster range is empty");
  }
  if (!(cluster_spread > 0)) throw ConfigError("synth.cluster_spread must be positive");
  if (class_sizes.empty() || class_sizes.size() != class_mix.size()) {
    throw ConfigError("synth class size laws and class_mix must be non-empty and equally long");
  }
  double total = 0;
  for (double p : class_mix) {
    if (!(p >= 0)) throw ConfigError("synth.class_mix entries must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("synth.class_mix must sum to 1");
  for (const auto& law : class_sizes) {
    if (!(law.log_std > 0)) throw ConfigError("synth class log_std must be positive");
  }
}

Scene generate_scene(const SynthConfig& config, int index) {
  Stream rng(derive_key({config.seed, 0x5ce9eULL, static_cast<std::uint64_t>(index)}));
  const double side = config.scene_side;
  Scene scene;
  char id[32];
  std::snprintf(id, sizeof id, "scene_%05d", index);
  scene.id = id;
  scene.width = config.scene_side;
  scene.height = config.scene_side;

  std::poisson_distribution<int> n_clusters(config.cluster_rate);
  std::uniform_int_distribution<int> per_cluster(config.objects_per_cluster_min,
                                                 config.objects_per_cluster_max);
  std::discrete_distribution<int> pick_class(config.class_mix.begin(), config.class_mix.end());
  std::normal_distribution<double> normal(0.0, 1.0);

  const int clusters = config.cluster_rate > 0 ? n_clusters(rng) : 0;
  for (int c = 0; c < clusters; ++c) {
    const double ccx = rng.uniform() * side;
    const double ccy = rng.uniform() * side;
    const int count = per_cluster(rng);
    const int cluster_class = pick_class(rng);
    for (int k = 0; k < count; ++k) {
      BBox b;
      b.class_id = config.homogeneous_clusters ? cluster_class : pick_class(rng);
      b.cx = std::clamp(ccx + config.cluster_spread * normal(rng), 0.0, side);
      b.cy = std::clamp(ccy + config.cluster_spread * normal(rng), 0.0, side);
      const auto& law = config.class_sizes[static_cast<std::size_t>(b.class_id)];
      const double size = std::exp(law.log_mean + law.log_std * normal(rng));
      const double aspect = 0.7 + 0.7 * rng.uniform();
      b.w = size * std::sqrt(aspect);
      b.h = size / std::sqrt(aspect);
      scene.ground_truth.push_back(b);
    }
  }
  return scene;
}

std::vector<Scene> generate(const SynthConfig& config) {
  config.validate();
  std::vector<Scene> scenes;
  scenes.reserve(static_cast<std::size_t>(config.n_scenes));
  for (int i = 0; i < config.n_scenes; ++i) scenes.push_back(generate_scene(config, i));
  return scenes;
}

}  // namespace zoomcascade
