// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "zoomcascade/scene.hpp"

namespace zoomcascade {

double iou(const BBox& a, const BBox& b);

struct MatchedPair {
  int gt_index = 0;
  int det_index = 0;
  double iou = 0;
};

struct MatchResult {
  std::vector<MatchedPair> matched_pairs;
  std::vector<int> unmatched_gt;
  std::vector<int> unmatched_det;
};

/// Greedy matching in descending score order (ties: lower detection index).
/// Each detection claims the free ground-truth box of highest IoU >= threshold
/// (ties: lower gt index). Class-agnostic. Throws ArgumentError on unscored
/// detections.
MatchResult match_greedy(std::span<const BBox> gt, std::span<const BBox> det, double threshold);

/// Matched fraction of ground truth; 1.0 for empty ground truth.
double recall(std::span<const BBox> gt, std::span<const BBox> det, double threshold);

struct MetricConfig {
  std::vector<double> iou_thresholds = default_iou_thresholds();
  double reward_iou = 0.5;

  /// {0.50, 0.55, ..., 0.95}
  static std::vector<double> default_iou_thresholds();
  void validate() const;
};

struct ApArResult {
  double ap_percent = 0;
  double ar_percent = 0;
};

/**
 * COCO-style AP/AR over a dataset.
 *
 * Per class (classes with ground truth only) and per IoU threshold, detections
 * from every scene are matched per scene, pooled, sorted by score (ties: scene
 * order, then detection index) and integrated with all-point interpolation.
 * AP averages over classes, then thresholds; AR is the final recall averaged
 * the same way. Throws UndefinedMetricError when there is no ground truth.
 */
ApArResult average_precision(const std::vector<std::vector<BBox>>& gt_by_scene,
                             const std::vector<std::vector<BBox>>& det_by_scene,
                             const MetricConfig& config);

/// Class-aware NMS. Higher score wins; equal scores resolve to the earlier
/// element of `dets`, so callers order input by tile to get tile tie-breaks.
std::vector<BBox> non_max_suppression(const std::vector<BBox>& dets, double iou_threshold);

}  // namespace zoomcascade
