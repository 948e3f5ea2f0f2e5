// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include "zoomcascade/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "zoomcascade/errors.hpp"
#include "zoomcascade/parallel.hpp"

namespace zoomcascade {

void CostModel::validate() const {
  if (!(t_coarse_ms >= 0 && t_fine_ms >= 0 && t_cpnet_ms >= 0 && t_fpnet_ms >= 0)) {
    throw ConfigError("cost model timings must be non-negative");
  }
}

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::cascade: return "cascade";
    case PolicyKind::cpnet_only: return "cpnet_only";
    case PolicyKind::fpnet_only: return "fpnet_only";
    case PolicyKind::random: return "random";
    case PolicyKind::entropy: return "entropy";
    case PolicyKind::sliding_lr: return "sliding_lr";
    case PolicyKind::sliding_hr: return "sliding_hr";
  }
  return "unknown";
}

PolicyKind policy_kind_from_string(std::string_view raw) {
  std::string name(raw);
  std::replace(name.begin(), name.end(), '-', '_');
  if (name == "cascade") return PolicyKind::cascade;
  if (name == "cpnet_only" || name == "cpnet") return PolicyKind::cpnet_only;
  if (name == "fpnet_only" || name == "fpnet") return PolicyKind::fpnet_only;
  if (name == "random") return PolicyKind::random;
  if (name == "entropy") return PolicyKind::entropy;
  if (name == "sliding_lr" || name == "sliding_l") return PolicyKind::sliding_lr;
  if (name == "sliding_hr" || name == "sliding_h") return PolicyKind::sliding_hr;
  throw ArgumentError("unknown policy kind '" + std::string(raw) + "'");
}

std::string PolicySpec::name() const { return std::string(to_string(kind)); }

void PolicySpec::validate(const GridLayout& grid) const {
  const bool needs_cp = kind == PolicyKind::cascade || kind == PolicyKind::cpnet_only;
  const bool needs_fp = kind == PolicyKind::cascade || kind == PolicyKind::fpnet_only;
  if (needs_cp) {
    if (!cpnet) throw ArgumentError(name() + " policy requires a CPNet model");
    if (cpnet->output_dim() != grid.patch_count()) {
      throw ArgumentError("CPNet outputs " + std::to_string(cpnet->output_dim()) +
                          " probabilities but the grid has " + std::to_string(grid.patch_count()) +
                          " patches");
    }
  }
  if (needs_fp) {
    if (!fpnet) throw ArgumentError(name() + " policy requires an FPNet model");
    if (fpnet->output_dim() != grid.subpatch_count()) {
      throw ArgumentError("FPNet outputs " + std::to_string(fpnet->output_dim()) +
                          " probabilities but patches have " +
                          std::to_string(grid.subpatch_count()) + " subpatches");
    }
  }
  if (kind == PolicyKind::random && !(zoom_prob >= 0 && zoom_prob <= 1)) {
    throw ArgumentError("random policy zoom probability must lie in [0,1]");
  }
}

int ActionPlan::fine_subpatches() const {
  int n = 0;
  for (std::size_t p = 0; p < coarse.size(); ++p) {
    if (coarse[p]) n += fine[p].ones();
  }
  return n;
}

namespace {

ActionPlan uniform_plan(const GridLayout& grid, std::uint8_t coarse_bit, std::uint8_t fine_bit) {
  ActionPlan plan;
  plan.coarse.bits.assign(static_cast<std::size_t>(grid.patch_count()), coarse_bit);
  ActionVector f;
  f.bits.assign(static_cast<std::size_t>(grid.subpatch_count()), fine_bit);
  plan.fine.assign(static_cast<std::size_t>(grid.patch_count()), f);
  return plan;
}

TileRef subpatch_tile(const GridLayout& grid, int p, int q) {
  return {p, q, grid.subpatch_rect(p, q)};
}

std::vector<double> mean_scores(const std::vector<BBox>& boxes, double& out_mean) {
  std::vector<double> scores;
  for (const auto& b : boxes) scores.push_back(b.score.value_or(0.0));
  out_mean = scores.empty() ? 0.0
                            : std::accumulate(scores.begin(), scores.end(), 0.0) /
                                  static_cast<double>(scores.size());
  return scores;
}

}  // namespace

SceneView make_scene_view(const Scene& scene, const GridLayout& grid, const RasterConfig& raster) {
  if (scene.width != grid.scene_side || scene.height != grid.scene_side) {
    throw ArgumentError("scene '" + scene.id + "' does not match the grid's scene side");
  }
  return {&scene, assign_boxes(scene, grid),
          rasterize(scene, raster.side, raster.side, raster.intensities)};
}

CascadeResult execute_plan(const SceneView& view, const GridLayout& grid, const ActionPlan& plan,
                           const DetectorSource& detectors) {
  if (static_cast<int>(plan.coarse.size()) != grid.patch_count() ||
      static_cast<int>(plan.fine.size()) != grid.patch_count()) {
    throw ArgumentError("action plan does not match the grid's patch count");
  }
  CascadeResult out;
  out.plan = plan;
  std::vector<BBox> raw;
  for (int p = 0; p < grid.patch_count(); ++p) {
    if (static_cast<int>(plan.fine[p].size()) != grid.subpatch_count()) {
      throw ArgumentError("action plan does not match the grid's subpatch count");
    }
    for (int q = 0; q < grid.subpatch_count(); ++q) {
      const bool fine = plan.subpatch_fine(p, q);
      const Tier tier = fine ? Tier::fine : Tier::coarse;
      (fine ? out.hr_subpatch_count : out.coarse_subpatch_count) += 1;
      const auto dets = detectors.run(*view.scene, subpatch_tile(grid, p, q), tier,
                                      view.assignment.subpatch_boxes[p][q]);
      raw.insert(raw.end(), dets.boxes.begin(), dets.boxes.end());
    }
  }
  out.detections = non_max_suppression(raw, 0.5);
  return out;
}

double modeled_runtime(const CostModel& cost, const CascadeResult& r) {
  return (r.cpnet_ran ? cost.t_cpnet_ms : 0.0) + r.policy_patches * cost.t_fpnet_ms +
         r.hr_subpatch_count * cost.t_fine_ms + r.coarse_subpatch_count * cost.t_coarse_ms +
         r.probe_ms;
}

namespace {

ActionVector cpnet_actions(const SceneView& view, const PolicyModel& cpnet) {
  return greedy_actions(to_std(forward(cpnet, view.raster.view()).probs));
}

ActionVector fpnet_actions(const SceneView& view, const GridLayout& grid, const PolicyModel& fpnet,
                           int patch) {
  const auto crop = crop_observation(view.raster, grid, patch);
  return greedy_actions(to_std(forward(fpnet, crop.view()).probs));
}

}  // namespace

CascadeResult run_cascade(const SceneView& view, const GridLayout& grid, const PolicyModel& cpnet,
                          const PolicyModel& fpnet, const DetectorSource& detectors,
                          const CostModel& cost) {
  if (cpnet.output_dim() != grid.patch_count() || fpnet.output_dim() != grid.subpatch_count()) {
    throw ArgumentError("policy outputs do not match the grid (P_c/P_f)");
  }
  ActionPlan plan = uniform_plan(grid, 0, 0);
  plan.coarse = cpnet_actions(view, cpnet);
  int activated = 0;
  for (int p = 0; p < grid.patch_count(); ++p) {
    if (!plan.coarse[p]) continue;
    ++activated;
    plan.fine[p] = fpnet_actions(view, grid, fpnet, p);
  }
  CascadeResult r = execute_plan(view, grid, plan, detectors);
  r.cpnet_ran = true;
  r.policy_patches = activated;
  r.runtime_ms = modeled_runtime(cost, r);
  return r;
}

CascadeResult run_baseline(const SceneView& view, const GridLayout& grid, const PolicySpec& spec,
                           const DetectorSource& detectors, const CostModel& cost,
                           std::uint64_t seed) {
  spec.validate(grid);
  ActionPlan plan;
  bool cpnet_ran = false;
  int policy_patches = 0;
  int probe_subpatches = 0;
  switch (spec.kind) {
    case PolicyKind::sliding_lr:
      plan = uniform_plan(grid, 0, 0);
      break;
    case PolicyKind::sliding_hr:
      plan = uniform_plan(grid, 1, 1);
      break;
    case PolicyKind::random: {
      // Every subpatch independently; the patch bit records whether any fired.
      plan = uniform_plan(grid, 0, 0);
      Stream rng(derive_key({seed, hash_string(view.scene->id), 0x7a4dULL}));
      for (int p = 0; p < grid.patch_count(); ++p) {
        for (int q = 0; q < grid.subpatch_count(); ++q) {
          plan.fine[p].bits[q] = rng.uniform() < spec.zoom_prob ? 1 : 0;
        }
        plan.coarse.bits[p] = plan.fine[p].ones() > 0 ? 1 : 0;
      }
      break;
    }
    case PolicyKind::entropy: {
      plan = uniform_plan(grid, 0, 0);
      for (int p = 0; p < grid.patch_count(); ++p) {
        std::vector<double> sub_means(static_cast<std::size_t>(grid.subpatch_count()));
        std::vector<BBox> patch_dets;
        for (int q = 0; q < grid.subpatch_count(); ++q) {
          const auto dets = detectors.run(*view.scene, subpatch_tile(grid, p, q), Tier::coarse,
                                          view.assignment.subpatch_boxes[p][q]);
          mean_scores(dets.boxes, sub_means[q]);
          patch_dets.insert(patch_dets.end(), dets.boxes.begin(), dets.boxes.end());
        }
        double patch_mean = 0;
        mean_scores(patch_dets, patch_mean);
        if (patch_mean > spec.entropy_threshold_coarse) {
          plan.coarse.bits[p] = 1;
          for (int q = 0; q < grid.subpatch_count(); ++q) {
            plan.fine[p].bits[q] = sub_means[q] > spec.entropy_threshold_fine ? 1 : 0;
          }
        }
      }
      probe_subpatches = plan.fine_subpatches();
      break;
    }
    case PolicyKind::cpnet_only:
      plan = uniform_plan(grid, 0, 1);
      plan.coarse = cpnet_actions(view, *spec.cpnet);
      cpnet_ran = true;
      break;
    case PolicyKind::fpnet_only:
      plan = uniform_plan(grid, 1, 0);
      for (int p = 0; p < grid.patch_count(); ++p) plan.fine[p] = fpnet_actions(view, grid, *spec.fpnet, p);
      policy_patches = grid.patch_count();
      break;
    case PolicyKind::cascade:
      return run_cascade(view, grid, *spec.cpnet, *spec.fpnet, detectors, cost);
  }
  CascadeResult r = execute_plan(view, grid, plan, detectors);
  r.cpnet_ran = cpnet_ran;
  r.policy_patches = policy_patches;
  r.probe_ms = probe_subpatches * cost.t_coarse_ms;
  r.runtime_ms = modeled_runtime(cost, r);
  return r;
}

CascadeResult run_policy(const SceneView& view, const GridLayout& grid, const PolicySpec& spec,
                         const DetectorSource& detectors, const CostModel& cost, std::uint64_t seed) {
  spec.validate(grid);
  if (spec.kind == PolicyKind::cascade) {
    return run_cascade(view, grid, *spec.cpnet, *spec.fpnet, detectors, cost);
  }
  return run_baseline(view, grid, spec, detectors, cost, seed);
}

EvalReport evaluate(const PolicySpec& policy, const std::vector<Scene>& dataset,
                    const GridLayout& grid, const DetectorPair& detectors, const CostModel& cost,
                    const EvalOptions& options, std::uint64_t seed) {
  const SimulatedDetectors source(detectors, derive_key({seed, 0xde7ULL}));
  return evaluate(policy, dataset, grid, source, cost, options, seed);
}

EvalReport evaluate(const PolicySpec& policy, const std::vector<Scene>& dataset,
                    const GridLayout& grid, const DetectorSource& detectors, const CostModel& cost,
                    const EvalOptions& options, std::uint64_t seed) {
  if (dataset.empty()) throw ArgumentError("evaluate needs at least one scene");
  policy.validate(grid);
  cost.validate();
  options.metrics.validate();

  std::vector<CascadeResult> results(dataset.size());
  parallel_for(dataset.size(), options.threads, [&](std::size_t i) {
    const SceneView view = make_scene_view(dataset[i], grid, options.raster);
    results[i] = run_policy(view, grid, policy, detectors, cost, seed);
  });

  EvalReport rep;
  rep.policy_name = policy.name();
  rep.scenes_evaluated = static_cast<int>(dataset.size());
  rep.zoom_grid_stats.assign(static_cast<std::size_t>(grid.patch_count()), 0.0);
  std::vector<std::vector<BBox>> gts, dets;
  double runtime = 0;
  long hr = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    gts.push_back(dataset[i].ground_truth);
    dets.push_back(results[i].detections);
    runtime += results[i].runtime_ms;
    hr += results[i].hr_subpatch_count;
    for (int p = 0; p < grid.patch_count(); ++p) {
      const bool zoomed = results[i].plan.coarse[p] && results[i].plan.fine[p].ones() > 0;
      rep.zoom_grid_stats[p] += zoomed ? 1.0 : 0.0;
    }
  }
  const double n = static_cast<double>(dataset.size());
  for (double& z : rep.zoom_grid_stats) z /= n;
  rep.runtime_ms_mean = runtime / n;
  rep.hr_ratio_percent = 100.0 * static_cast<double>(hr) / (n * grid.total_subpatches());
  const bool any_gt = std::any_of(gts.begin(), gts.end(), [](const auto& g) { return !g.empty(); });
  if (any_gt) {
    const ApArResult m = average_precision(gts, dets, options.metrics);
    rep.ap_percent = m.ap_percent;
    rep.ar_percent = m.ar_percent;
  } else {
    rep.ap_percent = std::numeric_limits<double>::quiet_NaN();
    rep.ar_percent = std::numeric_limits<double>::quiet_NaN();
  }
  if (options.keep_per_scene) rep.per_scene = std::move(results);
  return rep;
}

std::vector<double> default_count_edges() { return {0, 1, 3, 6, 11, 21}; }
std::vector<double> default_area_edges() { return {0, 0.0005, 0.002, 0.01, 0.04}; }

namespace {

std::vector<ProfileBin> make_bins(const std::vector<double>& edges) {
  if (edges.empty()) throw ArgumentError("profile needs at least one bin edge");
  if (!std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw ArgumentError("profile bin edges must be strictly increasing");
  }
  std::vector<ProfileBin> bins;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    bins.push_back({edges[k],
                    k + 1 < edges.size() ? edges[k + 1] : std::numeric_limits<double>::infinity(),
                    0, std::nullopt});
  }
  return bins;
}

void add_to_bins(std::vector<ProfileBin>& bins, std::vector<double>& sums, double key, double prob) {
  for (std::size_t k = 0; k < bins.size(); ++k) {
    if (key >= bins[k].lower && key < bins[k].upper) {
      ++bins[k].patches;
      sums[k] += prob;
      return;
    }
  }
}

void finish_bins(std::vector<ProfileBin>& bins, const std::vector<double>& sums) {
  for (std::size_t k = 0; k < bins.size(); ++k) {
    if (bins[k].patches > 0) bins[k].mean_zoom_probability = sums[k] / static_cast<double>(bins[k].patches);
  }
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

ZoomProfile zoom_probability_profile(const PolicyModel& cpnet, const std::vector<Scene>& dataset,
                                     const GridLayout& grid, const RasterConfig& raster,
                                     const std::vector<double>& count_edges,
                                     const std::vector<double>& area_edges) {
  if (cpnet.output_dim() != grid.patch_count()) {
    throw ArgumentError("CPNet output does not match the grid's patch count");
  }
  ZoomProfile prof{make_bins(count_edges), make_bins(area_edges)};
  std::vector<double> count_sums(prof.by_object_count.size(), 0.0);
  std::vector<double> area_sums(prof.by_object_area.size(), 0.0);
  const double patch_area = static_cast<double>(grid.patch_size) * grid.patch_size;
  for (const auto& scene : dataset) {
    const SceneView view = make_scene_view(scene, grid, raster);
    const auto s = forward(cpnet, view.raster.view()).probs;
    for (int p = 0; p < grid.patch_count(); ++p) {
      const auto& boxes = view.assignment.patch_boxes[p];
      add_to_bins(prof.by_object_count, count_sums, static_cast<double>(boxes.size()), s[p]);
      if (boxes.empty()) continue;
      double area = 0;
      for (const auto& b : boxes) area += b.area();
      add_to_bins(prof.by_object_area, area_sums, area / static_cast<double>(boxes.size()) / patch_area,
                  s[p]);
    }
  }
  finish_bins(prof.by_object_count, count_sums);
  finish_bins(prof.by_object_area, area_sums);
  return prof;
}

double profile_spearman(const std::vector<ProfileBin>& bins) {
  std::vector<double> x, y;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    if (!bins[k].mean_zoom_probability) continue;
    x.push_back(static_cast<double>(k));
    y.push_back(*bins[k].mean_zoom_probability);
  }
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace zoomcascade
