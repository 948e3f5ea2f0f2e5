// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "zoomcascade/config.hpp"
#include "zoomcascade/errors.hpp"
#include "zoomcascade/synth.hpp"

using namespace zoomcascade;

namespace {

SynthConfig defaults(int n) {
  SynthConfig c = RunConfig::from(default_config()).synth;
  c.n_scenes = n;
  return c;
}

}  // namespace

TEST(Synth, ZeroClusterRateGivesEmptyScenes) {
  SynthConfig c = defaults(20);
  c.cluster_rate = 0;
  for (const auto& s : generate(c)) EXPECT_TRUE(s.ground_truth.empty());
}

TEST(Synth, DeterministicInSeed) {
  const SynthConfig c = defaults(10);
  const auto a = generate(c), b = generate(c);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].ground_truth, b[i].ground_truth);
  }
  SynthConfig other = c;
  other.seed = c.seed + 1;
  EXPECT_NE(generate(other)[0].ground_truth, a[0].ground_truth);
}

TEST(Synth, SceneDoesNotDependOnDatasetSize) {
  const auto small = generate(defaults(3));
  const auto large = generate(defaults(8));
  EXPECT_EQ(small[2].ground_truth, large[2].ground_truth);
}

TEST(Synth, MeanObjectCountMatchesPoissonTimesUniform) {
  SynthConfig c = defaults(1000);
  c.cluster_rate = 4;
  double total = 0;
  for (const auto& s : generate(c)) total += static_cast<double>(s.ground_truth.size());
  EXPECT_NEAR(total / 1000.0, 40.0, 2.0);
}

TEST(Synth, ClassMixProperty) {
  SynthConfig c = defaults(400);
  double n = 0, small = 0;
  for (const auto& s : generate(c)) {
    for (const auto& b : s.ground_truth) {
      n += 1;
      small += b.class_id == 0;
    }
  }
  ASSERT_GE(n, 10000);
  EXPECT_NEAR(small / n, 0.7, 0.02);
}

TEST(Synth, BoxesAreValidProperty) {
  for (const auto& s : generate(defaults(100))) {
    EXPECT_NO_THROW(validate_scene(s));
    for (const auto& b : s.ground_truth) {
      EXPECT_GE(b.cx, 0);
      EXPECT_LE(b.cx, 2400);
      const double aspect = b.w / b.h;
      EXPECT_GE(aspect, 0.7 - 1e-9);
      EXPECT_LE(aspect, 1.4 + 1e-9);
    }
  }
}

TEST(Synth, HomogeneousClustersShareAClass) {
  SynthConfig c = defaults(50);
  c.homogeneous_clusters = true;
  c.cluster_rate = 1;
  c.cluster_spread = 1;
  for (const auto& s : generate(c)) {
    // With a 1 px spread, each cluster is a tight blob; one class per blob.
    for (std::size_t i = 1; i < s.ground_truth.size(); ++i) {
      const auto& a = s.ground_truth[i - 1];
      const auto& b = s.ground_truth[i];
      if (std::abs(a.cx - b.cx) < 20 && std::abs(a.cy - b.cy) < 20) {
        EXPECT_EQ(a.class_id, b.class_id);
      }
    }
  }
}

TEST(Synth, Validation) {
  SynthConfig c = defaults(1);
  c.class_mix = {0.5, 0.6};
  EXPECT_THROW(generate(c), ConfigError);
  c = defaults(1);
  c.objects_per_cluster_min = 9;
  c.objects_per_cluster_max = 3;
  EXPECT_THROW(generate(c), ConfigError);
  c = defaults(1);
  c.class_sizes.pop_back();
  EXPECT_THROW(generate(c), ConfigError);
}
