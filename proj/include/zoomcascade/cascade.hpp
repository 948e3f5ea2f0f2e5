// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zoomcascade/detector.hpp"
#include "zoomcascade/metrics.hpp"
#include "zoomcascade/policy.hpp"
#include "zoomcascade/scene.hpp"
#include "zoomcascade/trainer.hpp"

namespace zoomcascade {

/// Modeled wall-clock: detector cost per subpatch-sized inference plus
/// policy-network overheads.
struct CostModel {
  double t_coarse_ms = 10.0;
  double t_fine_ms = 50.0;
  double t_cpnet_ms = 30.0;  // once per scene
  double t_fpnet_ms = 2.0;   // per patch FPNet is run on

  static CostModel zero_overhead() { return {10.0, 50.0, 0.0, 0.0}; }
  void validate() const;
};

enum class PolicyKind { cascade, cpnet_only, fpnet_only, random, entropy, sliding_lr, sliding_hr };

std::string_view to_string(PolicyKind kind);
/// Accepts both "sliding_hr" and the CLI spelling "sliding-h".
PolicyKind policy_kind_from_string(std::string_view name);

struct PolicySpec {
  PolicyKind kind = PolicyKind::sliding_lr;
  std::shared_ptr<const PolicyModel> cpnet;
  std::shared_ptr<const PolicyModel> fpnet;
  double zoom_prob = 0.5;
  double entropy_threshold_coarse = 0.3;
  double entropy_threshold_fine = 0.3;

  std::string name() const;
  /// Throws ArgumentError when a required model or parameter is missing.
  void validate(const GridLayout& grid) const;
};

/// Zoom decisions for one scene: a coarse bit per patch and, per patch, a
/// fine bit per subpatch. A subpatch runs the fine tier iff both bits are set.
struct ActionPlan {
  ActionVector coarse;
  std::vector<ActionVector> fine;

  bool subpatch_fine(int patch, int subpatch) const {
    return coarse[patch] && fine[patch][subpatch];
  }
  int fine_subpatches() const;
};

struct CascadeResult {
  std::vector<BBox> detections;  // merged, scene coordinates
  ActionPlan plan;
  double runtime_ms = 0;
  int hr_subpatch_count = 0;
  int coarse_subpatch_count = 0;
  int policy_patches = 0;   // patches FPNet ran on
  bool cpnet_ran = false;
  double probe_ms = 0;      // coarse probes later upgraded to fine (entropy)
};

/// Scene raster, patch crops and tile geometry prepared once per scene.
struct SceneView {
  const Scene* scene = nullptr;
  Assignment assignment;
  RasterObservation raster;
};

SceneView make_scene_view(const Scene& scene, const GridLayout& grid, const RasterConfig& raster);

/// Runs the detectors a plan calls for, merges with cross-tile NMS at IoU 0.5
/// and fills subpatch counts (runtime is left to the caller).
CascadeResult execute_plan(const SceneView& view, const GridLayout& grid, const ActionPlan& plan,
                           const DetectorSource& detectors);

/// t_cpnet (if run) + policy_patches * t_fpnet + fine * t_fine + coarse * t_coarse + probes.
double modeled_runtime(const CostModel& cost, const CascadeResult& r);

CascadeResult run_cascade(const SceneView& view, const GridLayout& grid, const PolicyModel& cpnet,
                          const PolicyModel& fpnet, const DetectorSource& detectors,
                          const CostModel& cost);

CascadeResult run_baseline(const SceneView& view, const GridLayout& grid, const PolicySpec& spec,
                           const DetectorSource& detectors, const CostModel& cost,
                           std::uint64_t seed);

/// Dispatches on spec.kind (cascade included).
CascadeResult run_policy(const SceneView& view, const GridLayout& grid, const PolicySpec& spec,
                         const DetectorSource& detectors, const CostModel& cost, std::uint64_t seed);

struct EvalReport {
  std::string policy_name;
  double ap_percent = 0;
  double ar_percent = 0;
  double runtime_ms_mean = 0;
  double hr_ratio_percent = 0;
  int scenes_evaluated = 0;
  std::vector<double> zoom_grid_stats;  // per-patch fraction of scenes with the patch zoomed
  std::vector<CascadeResult> per_scene;
};

struct EvalOptions {
  RasterConfig raster;
  MetricConfig metrics;
  int threads = 1;
  bool keep_per_scene = false;
};

/// Per-scene detector draws are keyed by (seed, scene id, tile, tier), so
/// results do not depend on thread count or scene order.
EvalReport evaluate(const PolicySpec& policy, const std::vector<Scene>& dataset,
                    const GridLayout& grid, const DetectorPair& detectors, const CostModel& cost,
                    const EvalOptions& options, std::uint64_t seed);

EvalReport evaluate(const PolicySpec& policy, const std::vector<Scene>& dataset,
                    const GridLayout& grid, const DetectorSource& detectors, const CostModel& cost,
                    const EvalOptions& options, std::uint64_t seed);

struct ProfileBin {
  double lower = 0;
  double upper = 0;  // exclusive; +inf for the last bin
  long patches = 0;
  std::optional<double> mean_zoom_probability;  // empty when no patch fell in the bin
};

struct ZoomProfile {
  std::vector<ProfileBin> by_object_count;
  std::vector<ProfileBin> by_object_area;  // mean box area / patch area
};

/// CPNet patch probabilities binned by object count and normalized object area.
/// Area bins only see patches with at least one object.
ZoomProfile zoom_probability_profile(const PolicyModel& cpnet, const std::vector<Scene>& dataset,
                                     const GridLayout& grid, const RasterConfig& raster,
                                     const std::vector<double>& count_edges,
                                     const std::vector<double>& area_edges);

std::vector<double> default_count_edges();
std::vector<double> default_area_edges();

/// Spearman rank correlation of (bin index, mean probability) over present bins.
double profile_spearman(const std::vector<ProfileBin>& bins);

}  // namespace zoomcascade
