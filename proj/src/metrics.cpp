// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include "zoomcascade/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "zoomcascade/errors.hpp"

namespace zoomcascade {

double iou(const BBox& a, const BBox& b) {
  const Rect ra = a.rect();
  const Rect rb = b.rect();
  const double iw = std::max(0.0, std::min(ra.x1, rb.x1) - std::max(ra.x0, rb.x0));
  const double ih = std::max(0.0, std::min(ra.y1, rb.y1) - std::max(ra.y0, rb.y0));
  const double inter = iw * ih;
  if (inter <= 0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::min(1.0, inter / uni);
}

namespace {

std::vector<int> score_order(std::span<const BBox> det) {
  std::vector<int> order(det.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return *det[i].score > *det[j].score; });
  return order;
}

}  // namespace

MatchResult match_greedy(std::span<const BBox> gt, std::span<const BBox> det, double threshold) {
  for (const auto& d : det) {
    if (!d.score) throw ArgumentError("detection without a score passed to match_greedy");
  }
  MatchResult out;
  std::vector<char> gt_taken(gt.size(), 0);
  std::vector<char> det_taken(det.size(), 0);
  for (int d : score_order(det)) {
    int best = -1;
    double best_iou = threshold;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (gt_taken[g]) continue;
      const double v = iou(gt[g], det[d]);
      if (v >= best_iou && (best < 0 || v > best_iou)) {
        best = static_cast<int>(g);
        best_iou = v;
      }
    }
    if (best >= 0) {
      gt_taken[best] = 1;
      det_taken[d] = 1;
      out.matched_pairs.push_back({best, d, best_iou});
    }
  }
  for (std::size_t g = 0; g < gt.size(); ++g) {
    if (!gt_taken[g]) out.unmatched_gt.push_back(static_cast<int>(g));
  }
  for (std::size_t d = 0; d < det.size(); ++d) {
    if (!det_taken[d]) out.unmatched_det.push_back(static_cast<int>(d));
  }
  return out;
}

double recall(std::span<const BBox> gt, std::span<const BBox> det, double threshold) {
  if (gt.empty()) return 1.0;
  const auto m = match_greedy(gt, det, threshold);
  return static_cast<double>(m.matched_pairs.size()) / static_cast<double>(gt.size());
}

std::vector<double> MetricConfig::default_iou_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back((50 + 5 * k) / 100.0);
  return t;
}

void MetricConfig::validate() const {
  if (iou_thresholds.empty()) throw ConfigError("metric.iou_thresholds is empty");
  for (double t : iou_thresholds) {
    if (!(t > 0 && t <= 1)) throw ConfigError("IoU thresholds must lie in (0,1]");
  }
  if (!(reward_iou > 0 && reward_iou <= 1)) throw ConfigError("metric.reward_iou must lie in (0,1]");
}

namespace {

struct ScoredFlag {
  double score;
  int scene;
  int index;
  bool tp;
};

}  // namespace

ApArResult average_precision(const std::vector<std::vector<BBox>>& gt_by_scene,
                             const std::vector<std::vector<BBox>>& det_by_scene,
                             const MetricConfig& config) {
  if (gt_by_scene.size() != det_by_scene.size()) {
    throw ArgumentError("ground truth and detections cover different scene counts");
  }
  std::set<int> classes;
  for (const auto& scene : gt_by_scene) {
    for (const auto& b : scene) classes.insert(b.class_id);
  }
  if (classes.empty()) throw UndefinedMetricError("AP/AR undefined without ground truth");
  for (const auto& scene : det_by_scene) {
    for (const auto& d : scene) {
      if (!d.score) throw ArgumentError("unscored detection passed to average_precision");
    }
  }

  double ap_sum = 0, ar_sum = 0;
  for (int cls : classes) {
    // Per-scene class slices, keeping original detection indices for tie order.
    std::vector<std::vector<BBox>> gts(gt_by_scene.size()), dets(gt_by_scene.size());
    std::vector<std::vector<int>> det_ids(gt_by_scene.size());
    std::size_t n_gt = 0;
    for (std::size_t s = 0; s < gt_by_scene.size(); ++s) {
      for (const auto& b : gt_by_scene[s]) {
        if (b.class_id == cls) gts[s].push_back(b);
      }
      for (std::size_t d = 0; d < det_by_scene[s].size(); ++d) {
        if (det_by_scene[s][d].class_id == cls) {
          dets[s].push_back(det_by_scene[s][d]);
          det_ids[s].push_back(static_cast<int>(d));
        }
      }
      n_gt += gts[s].size();
    }
    for (double thr : config.iou_thresholds) {
      std::vector<ScoredFlag> flags;
      for (std::size_t s = 0; s < gts.size(); ++s) {
        const auto m = match_greedy(gts[s], dets[s], thr);
        std::vector<char> tp(dets[s].size(), 0);
        for (const auto& p : m.matched_pairs) tp[p.det_index] = 1;
        for (std::size_t d = 0; d < dets[s].size(); ++d) {
          flags.push_back({*dets[s][d].score, static_cast<int>(s), det_ids[s][d], tp[d] != 0});
        }
      }
      std::sort(flags.begin(), flags.end(), [](const ScoredFlag& a, const ScoredFlag& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.scene != b.scene) return a.scene < b.scene;
        return a.index < b.index;
      });
      std::vector<double> prec(flags.size()), rec(flags.size());
      std::size_t tp_count = 0;
      for (std::size_t k = 0; k < flags.size(); ++k) {
        tp_count += flags[k].tp ? 1 : 0;
        prec[k] = static_cast<double>(tp_count) / static_cast<double>(k + 1);
        rec[k] = static_cast<double>(tp_count) / static_cast<double>(n_gt);
      }
      // Precision envelope from the right, then sum over recall increments.
      for (std::size_t k = flags.size(); k-- > 1;) prec[k - 1] = std::max(prec[k - 1], prec[k]);
      double ap = 0, prev_recall = 0;
      for (std::size_t k = 0; k < flags.size(); ++k) {
        ap += (rec[k] - prev_recall) * prec[k];
        prev_recall = rec[k];
      }
      ap_sum += ap;
      ar_sum += flags.empty() ? 0.0 : rec.back();
    }
  }
  const double n = static_cast<double>(classes.size() * config.iou_thresholds.size());
  return {100.0 * ap_sum / n, 100.0 * ar_sum / n};
}

std::vector<BBox> non_max_suppression(const std::vector<BBox>& dets, double iou_threshold) {
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return dets[i].score.value_or(0.0) > dets[j].score.value_or(0.0);
  });
  std::vector<BBox> kept;
  for (int i : order) {
    const BBox& cand = dets[i];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const BBox& k) {
      return k.class_id == cand.class_id && iou(k, cand) >= iou_threshold;
    });
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

}  // namespace zoomcascade
