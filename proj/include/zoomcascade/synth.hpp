// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "zoomcascade/scene.hpp"

namespace zoomcascade {

/// Log-normal size law for one object class (size = sqrt(w*h) in pixels).
struct ClassSizeLaw {
  double log_mean = 0;
  double log_std = 0;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  int scene_side = 2400;
  int n_scenes = 1;
  double cluster_rate = 3.0;
  int objects_per_cluster_min = 5;
  int objects_per_cluster_max = 15;
  double cluster_spread = 120.0;
  std::vector<ClassSizeLaw> class_sizes;
  std::vector<double> class_mix;
  /// One class per cluster (car parks, building blocks) instead of per object.
  bool homogeneous_clusters = false;

  void validate() const;
};

/// Clustered scenes. Scene k draws from a stream keyed by (seed, k), so a
/// scene's content does not depend on how many scenes are generated.
std::vector<Scene> generate(const SynthConfig& config);
Scene generate_scene(const SynthConfig& config, int index);

}  // namespace zoomcascade
