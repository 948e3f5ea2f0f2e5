// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "zoomcascade/cascade.hpp"
#include "zoomcascade/config.hpp"
#include "zoomcascade/synth.hpp"

using namespace zoomcascade;

namespace {

std::vector<Scene> scenes(int n, std::uint64_t seed = 1) {
  SynthConfig c = RunConfig::from(default_config()).synth;
  c.n_scenes = n;
  c.seed = seed;
  return generate(c);
}

std::shared_ptr<const PolicyModel> biased_model(int in, int out, double bias) {
  PolicyModel m = PolicyModel::zeros(default_layer_dims(in, out));
  m.mutable_layers().back().biases.setConstant(bias);
  return std::make_shared<const PolicyModel>(std::move(m));
}

std::shared_ptr<const PolicyModel> random_model(int in, int out, std::uint64_t seed) {
  return std::make_shared<const PolicyModel>(PolicyModel::create(default_layer_dims(in, out), seed));
}

PolicySpec spec_of(PolicyKind kind) {
  PolicySpec s;
  s.kind = kind;
  return s;
}

// Two detections scored 0.9 and 0.7 in subpatch 0 of patch 0; nothing elsewhere.
class FixedDetectors final : public DetectorSource {
 public:
  DetectionSet run(const Scene&, const TileRef& tile, Tier,
                   std::span<const BBox>) const override {
    DetectionSet d{tile.patch, tile.subpatch, {}};
    if (tile.patch == 0 && tile.subpatch == 0) {
      d.boxes.push_back({50, 50, 10, 10, 0, 0.9});
      d.boxes.push_back({200, 200, 10, 10, 0, 0.7});
    }
    return d;
  }
};

const GridLayout kGrid = default_grid();
const RasterConfig kRaster;

}  // namespace

TEST(CostModel, SlidingWindowRuntimesAreExact) {
  const auto data = scenes(3);
  const SimulatedDetectors det(DetectorPair::defaults(), 1);
  for (const auto& scene : data) {
    const auto view = make_scene_view(scene, kGrid, kRaster);
    const auto lr = run_baseline(view, kGrid, spec_of(PolicyKind::sliding_lr), det,
                                 CostModel::zero_overhead(), 1);
    const auto hr = run_baseline(view, kGrid, spec_of(PolicyKind::sliding_hr), det,
                                 CostModel::zero_overhead(), 1);
    EXPECT_EQ(lr.runtime_ms, 640.0);
    EXPECT_EQ(hr.runtime_ms, 3200.0);
    EXPECT_EQ(lr.hr_subpatch_count, 0);
    EXPECT_EQ(hr.hr_subpatch_count, 64);
  }
}

TEST(CostModel, ReconstructsAdaptiveRuntime) {
  CascadeResult r;
  r.cpnet_ran = true;
  r.policy_patches = 4;
  r.hr_subpatch_count = 20;
  r.coarse_subpatch_count = 44;
  EXPECT_DOUBLE_EQ(modeled_runtime(CostModel{}, r), 30 + 4 * 2 + 20 * 50 + 44 * 10);
  CostModel bad;
  bad.t_fine_ms = -1;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Cascade, QuietCpnetRunsCoarseOnly) {
  const auto data = scenes(2);
  const SimulatedDetectors det(DetectorPair::defaults(), 2);
  const auto cp = biased_model(64 * 64, 16, -3);
  const auto fp = biased_model(16 * 16, 4, 3);
  for (const auto& scene : data) {
    const auto r = run_cascade(make_scene_view(scene, kGrid, kRaster), kGrid, *cp, *fp, det, CostModel{});
    EXPECT_EQ(r.plan.coarse.ones(), 0);
    EXPECT_EQ(r.runtime_ms, 30 + 640.0);
  }
}

TEST(Cascade, EagerPoliciesRunFineEverywhere) {
  const auto data = scenes(1);
  const SimulatedDetectors det(DetectorPair::defaults(), 2);
  const auto cp = biased_model(64 * 64, 16, 3);
  const auto fp = biased_model(16 * 16, 4, 3);
  const auto r = run_cascade(make_scene_view(data[0], kGrid, kRaster), kGrid, *cp, *fp, det, CostModel{});
  EXPECT_EQ(r.hr_subpatch_count, 64);
  EXPECT_EQ(r.runtime_ms, 30 + 16 * 2 + 3200.0);
}

TEST(Cascade, ModelGridMismatchIsAnArgumentError) {
  const auto data = scenes(1);
  const SimulatedDetectors det(DetectorPair::defaults(), 2);
  const auto view = make_scene_view(data[0], kGrid, kRaster);
  const auto cp = biased_model(64 * 64, 15, 0);
  const auto fp = biased_model(16 * 16, 4, 0);
  EXPECT_THROW(run_cascade(view, kGrid, *cp, *fp, det, CostModel{}), ArgumentError);
  PolicySpec s = spec_of(PolicyKind::cascade);
  EXPECT_THROW(s.validate(kGrid), ArgumentError);
}

TEST(Cascade, CostAccountingIdentityProperty) {
  const auto data = scenes(6, 3);
  const SimulatedDetectors det(DetectorPair::defaults(), 4);
  const CostModel cost;
  PolicySpec cascade = spec_of(PolicyKind::cascade);
  cascade.cpnet = random_model(64 * 64, 16, 5);
  cascade.fpnet = random_model(16 * 16, 4, 6);
  PolicySpec cponly = spec_of(PolicyKind::cpnet_only);
  cponly.cpnet = cascade.cpnet;
  PolicySpec fponly = spec_of(PolicyKind::fpnet_only);
  fponly.fpnet = cascade.fpnet;
  PolicySpec rnd = spec_of(PolicyKind::random);
  rnd.zoom_prob = 0.3;
  for (const auto& spec : {cascade, cponly, fponly, rnd}) {
    for (const auto& scene : data) {
      const auto r = run_policy(make_scene_view(scene, kGrid, kRaster), kGrid, spec, det, cost, 9);
      EXPECT_EQ(r.hr_subpatch_count + r.coarse_subpatch_count, 64);
      EXPECT_EQ(r.hr_subpatch_count, r.plan.fine_subpatches());
      const double expect = (r.cpnet_ran ? cost.t_cpnet_ms : 0) + r.policy_patches * cost.t_fpnet_ms +
                            r.hr_subpatch_count * cost.t_fine_ms +
                            r.coarse_subpatch_count * cost.t_coarse_ms + r.probe_ms;
      EXPECT_DOUBLE_EQ(r.runtime_ms, expect);
      if (spec.kind == PolicyKind::cpnet_only) {
        EXPECT_EQ(r.hr_subpatch_count % 4, 0);
      }
    }
  }
}

TEST(Cascade, AddingAZoomBitNeverLowersRuntimeProperty) {
  const auto data = scenes(1);
  const SimulatedDetectors det(DetectorPair::defaults(), 4);
  const auto view = make_scene_view(data[0], kGrid, kRaster);
  Stream rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    ActionPlan plan;
    plan.coarse = ActionVector::from_mask(rng(), 16);
    for (int p = 0; p < 16; ++p) plan.fine.push_back(ActionVector::from_mask(rng(), 4));
    const int p = static_cast<int>(rng() % 16), q = static_cast<int>(rng() % 4);
    ActionPlan more = plan;
    more.coarse.bits[p] = 1;
    more.fine[p].bits[q] = 1;
    const double before = modeled_runtime(CostModel{}, execute_plan(view, kGrid, plan, det));
    const double after = modeled_runtime(CostModel{}, execute_plan(view, kGrid, more, det));
    EXPECT_GE(after, before);
  }
}

TEST(Baselines, RandomWithZeroProbabilityIsSlidingLr) {
  const auto data = scenes(4);
  const SimulatedDetectors det(DetectorPair::defaults(), 3);
  PolicySpec rnd = spec_of(PolicyKind::random);
  rnd.zoom_prob = 0;
  for (const auto& scene : data) {
    const auto view = make_scene_view(scene, kGrid, kRaster);
    const auto a = run_baseline(view, kGrid, rnd, det, CostModel{}, 5);
    const auto b = run_baseline(view, kGrid, spec_of(PolicyKind::sliding_lr), det, CostModel{}, 5);
    EXPECT_EQ(a.detections, b.detections);
    EXPECT_EQ(a.runtime_ms, b.runtime_ms);
  }
  rnd.zoom_prob = 1.5;
  EXPECT_THROW(rnd.validate(kGrid), ArgumentError);
}

TEST(Baselines, EntropyThresholdsMeanCoarseScore) {
  const auto data = scenes(1);
  const FixedDetectors det;
  const auto view = make_scene_view(data[0], kGrid, kRaster);
  PolicySpec e = spec_of(PolicyKind::entropy);
  e.entropy_threshold_coarse = e.entropy_threshold_fine = 0.75;
  const auto r = run_baseline(view, kGrid, e, det, CostModel::zero_overhead(), 1);
  EXPECT_EQ(r.plan.coarse.ones(), 1);
  EXPECT_EQ(r.plan.coarse[0], 1);
  EXPECT_EQ(r.hr_subpatch_count, 1);
  EXPECT_EQ(r.probe_ms, 10.0);
  EXPECT_EQ(r.runtime_ms, 63 * 10 + 50 + 10.0);
  e.entropy_threshold_coarse = 0.8;  // mean 0.8 is not strictly above
  EXPECT_EQ(run_baseline(view, kGrid, e, det, CostModel::zero_overhead(), 1).plan.coarse.ones(), 0);
}

TEST(Merging, NmsIsIdempotentOnCascadeOutput) {
  const auto data = scenes(3);
  const SimulatedDetectors det(DetectorPair::defaults(), 6);
  for (const auto& scene : data) {
    const auto r = run_baseline(make_scene_view(scene, kGrid, kRaster), kGrid,
                                spec_of(PolicyKind::sliding_hr), det, CostModel{}, 1);
    EXPECT_EQ(non_max_suppression(r.detections, 0.5), r.detections);
  }
}

TEST(PolicyKind, ParsesNamesAndAliases) {
  EXPECT_EQ(policy_kind_from_string("sliding-h"), PolicyKind::sliding_hr);
  EXPECT_EQ(policy_kind_from_string("sliding_hr"), PolicyKind::sliding_hr);
  EXPECT_EQ(policy_kind_from_string("cascade"), PolicyKind::cascade);
  for (auto k : {PolicyKind::cascade, PolicyKind::cpnet_only, PolicyKind::fpnet_only,
                 PolicyKind::random, PolicyKind::entropy, PolicyKind::sliding_lr,
                 PolicyKind::sliding_hr}) {
    EXPECT_EQ(policy_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(policy_kind_from_string("zoom"), ArgumentError);
}

TEST(Evaluate, FineTierDominatesStatistically) {
  const auto data = scenes(100, 11);
  const EvalOptions opt;
  const auto lr = evaluate(spec_of(PolicyKind::sliding_lr), data, kGrid, DetectorPair::defaults(),
                           CostModel::zero_overhead(), opt, 3);
  const auto hr = evaluate(spec_of(PolicyKind::sliding_hr), data, kGrid, DetectorPair::defaults(),
                           CostModel::zero_overhead(), opt, 3);
  EXPECT_GE(hr.ap_percent, lr.ap_percent);
  EXPECT_GT(hr.ar_percent, lr.ar_percent);
  EXPECT_EQ(hr.hr_ratio_percent, 100.0);
  EXPECT_EQ(lr.hr_ratio_percent, 0.0);
  EXPECT_EQ(hr.runtime_ms_mean, 3200.0);
  EXPECT_EQ(hr.scenes_evaluated, 100);
}

TEST(Evaluate, EmptyDatasetAndDeterminism) {
  EXPECT_THROW(evaluate(spec_of(PolicyKind::sliding_lr), {}, kGrid, DetectorPair::defaults(),
                        CostModel{}, EvalOptions{}, 1),
               ArgumentError);
  const auto data = scenes(12, 4);
  PolicySpec rnd = spec_of(PolicyKind::random);
  EvalOptions one, four;
  four.threads = 4;
  const auto a = evaluate(rnd, data, kGrid, DetectorPair::defaults(), CostModel{}, one, 7);
  const auto b = evaluate(rnd, data, kGrid, DetectorPair::defaults(), CostModel{}, four, 7);
  EXPECT_EQ(a.ap_percent, b.ap_percent);
  EXPECT_EQ(a.ar_percent, b.ar_percent);
  EXPECT_EQ(a.runtime_ms_mean, b.runtime_ms_mean);
  EXPECT_EQ(a.zoom_grid_stats, b.zoom_grid_stats);
  EXPECT_GE(a.hr_ratio_percent, 0.0);
  EXPECT_LE(a.hr_ratio_percent, 100.0);
}

TEST(ZoomProfile, ZeroModelGivesHalfAndEmptyBinsAreAbsent) {
  const auto data = scenes(5);
  const PolicyModel zero = PolicyModel::zeros(default_layer_dims(64 * 64, 16));
  const auto prof = zoom_probability_profile(zero, data, kGrid, kRaster, {0, 1, 1000}, {0, 10});
  ASSERT_EQ(prof.by_object_count.size(), 3u);
  for (const auto& bin : prof.by_object_count) {
    if (bin.patches > 0) {
      EXPECT_DOUBLE_EQ(*bin.mean_zoom_probability, 0.5);
    }
  }
  EXPECT_FALSE(prof.by_object_count[2].mean_zoom_probability.has_value());
  EXPECT_EQ(prof.by_object_count[2].patches, 0);
  EXPECT_FALSE(prof.by_object_area[1].mean_zoom_probability.has_value());
  long total = 0;
  for (const auto& bin : prof.by_object_count) total += bin.patches;
  EXPECT_EQ(total, 5 * 16);
  EXPECT_THROW(zoom_probability_profile(zero, data, kGrid, kRaster, {1, 0}, {0}), ArgumentError);
}

TEST(ZoomProfile, SpearmanExamples) {
  auto bins = [](std::vector<std::optional<double>> v) {
    std::vector<ProfileBin> out;
    for (auto p : v) out.push_back({0, 1, p ? 1 : 0, p});
    return out;
  };
  EXPECT_DOUBLE_EQ(profile_spearman(bins({0.1, 0.2, 0.4, 0.9})), 1.0);
  EXPECT_DOUBLE_EQ(profile_spearman(bins({0.9, 0.4, 0.2, 0.1})), -1.0);
  EXPECT_DOUBLE_EQ(profile_spearman(bins({0.1, std::nullopt, 0.4, 0.9})), 1.0);
  EXPECT_DOUBLE_EQ(profile_spearman(bins({0.5, 0.5, 0.5})), 0.0);
  // Ranks (1,2,3) vs (1,3,2): 1 - 6*2/(3*8) = 0.5.
  EXPECT_DOUBLE_EQ(profile_spearman(bins({0.1, 0.9, 0.5})), 0.5);
  EXPECT_TRUE(std::isnan(profile_spearman(bins({0.3}))));
}
