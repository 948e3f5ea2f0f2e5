// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "zoomcascade/errors.hpp"
#include "zoomcascade/rng.hpp"
#include "zoomcascade/scene.hpp"

using namespace zoomcascade;

namespace {

BBox box(double cx, double cy, double w, double h, int cls = 0) { return {cx, cy, w, h, cls, {}}; }

Scene scene_with(std::vector<BBox> boxes, int side = 2400) {
  return {"s", side, side, std::move(boxes)};
}

}  // namespace

TEST(BuildGrid, DefaultGeometry) {
  const auto g = build_grid(2400, 600, 320, 40);
  EXPECT_EQ(g.patch_count(), 16);
  EXPECT_EQ(g.subpatch_count(), 4);
  EXPECT_EQ(g.subpatch_stride(), 280);
  EXPECT_EQ(g.patches_per_side * g.patch_size, g.scene_side);
  EXPECT_EQ(g.subpatch_size + g.subpatch_stride(), g.patch_size);
}

TEST(BuildGrid, SinglePatch) {
  const auto g = build_grid(600, 600, 320, 40);
  EXPECT_EQ(g.patch_count(), 1);
  EXPECT_EQ(g.subpatch_count(), 4);
}

TEST(BuildGrid, RejectsNonTilingStride) {
  try {
    build_grid(2400, 600, 320, 30);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("290"), std::string::npos) << e.what();
  }
  EXPECT_THROW(build_grid(2500, 600, 320, 40), ConfigError);
  EXPECT_THROW(build_grid(2400, 600, 700, 40), ConfigError);
  EXPECT_THROW(build_grid(2400, 600, 320, 320), ConfigError);
}

TEST(BuildGrid, RectanglesNest) {
  const auto g = default_grid();
  const Rect scene{0, 0, 2400, 2400};
  for (int p = 0; p < g.patch_count(); ++p) {
    const Rect pr = g.patch_rect(p);
    EXPECT_TRUE(scene.contains(pr));
    for (int q = 0; q < g.subpatch_count(); ++q) EXPECT_TRUE(pr.contains(g.subpatch_rect(p, q)));
  }
  EXPECT_DOUBLE_EQ(g.patch_rect(5).x0, 600);
  EXPECT_DOUBLE_EQ(g.patch_rect(5).y0, 600);
  EXPECT_DOUBLE_EQ(g.subpatch_rect(0, 3).x0, 280);
  EXPECT_DOUBLE_EQ(g.subpatch_rect(0, 3).y1, 600);
}

TEST(AssignBoxes, CentroidAndTieBreak) {
  const auto g = default_grid();
  const auto a = assign_boxes(scene_with({box(10, 10, 8, 8), box(600, 10, 8, 8)}), g);
  EXPECT_EQ(a.object_counts[0], 2);
  EXPECT_EQ(a.object_counts[1], 0);
}

TEST(AssignBoxes, OverlapBandDuplicatesAcrossSubpatches) {
  const auto g = default_grid();
  const auto a = assign_boxes(scene_with({box(340, 290, 8, 8)}), g);
  // x=340 lies only in the right column [280,600]; y=290 lies in both rows.
  EXPECT_TRUE(a.subpatch_boxes[0][0].empty());
  EXPECT_EQ(a.subpatch_boxes[0][1].size(), 1u);
  EXPECT_TRUE(a.subpatch_boxes[0][2].empty());
  EXPECT_EQ(a.subpatch_boxes[0][3].size(), 1u);
  const auto b = assign_boxes(scene_with({box(100, 290, 8, 8)}), g);
  EXPECT_EQ(b.subpatch_boxes[0][0].size(), 1u);
  EXPECT_EQ(b.subpatch_boxes[0][2].size(), 1u);
}

TEST(AssignBoxes, PartitionProperty) {
  const auto g = default_grid();
  Stream rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<BBox> boxes;
    const int n = static_cast<int>(rng() % 40);
    for (int k = 0; k < n; ++k) {
      // Include exact grid lines to exercise tie-breaks.
      const double cx = (rng() % 4 == 0) ? 600.0 * static_cast<double>(rng() % 5) : rng.uniform() * 2400;
      const double cy = rng.uniform() * 2400;
      boxes.push_back(box(cx, cy, 5 + 50 * rng.uniform(), 5 + 50 * rng.uniform()));
    }
    const auto a = assign_boxes(scene_with(boxes), g);
    int total = 0;
    for (int p = 0; p < g.patch_count(); ++p) {
      total += a.object_counts[p];
      EXPECT_EQ(a.object_counts[p], static_cast<int>(a.patch_boxes[p].size()));
      std::size_t covered = 0;
      for (const auto& b : a.patch_boxes[p]) {
        bool any = false;
        for (int q = 0; q < g.subpatch_count(); ++q) {
          for (const auto& sb : a.subpatch_boxes[p][q]) any = any || sb == b;
        }
        covered += any;
      }
      EXPECT_EQ(covered, a.patch_boxes[p].size()) << "every patch box lands in some subpatch";
    }
    EXPECT_EQ(total, n);
  }
}

TEST(Rasterize, EmptySceneIsBlack) {
  const auto r = rasterize(scene_with({}), 64, 64, {{0, 1.0}});
  EXPECT_EQ(r.pixels.size(), 64u * 64u);
  for (double v : r.pixels) EXPECT_EQ(v, 0.0);
}

TEST(Rasterize, FullCoverage) {
  const auto r = rasterize(scene_with({box(1200, 1200, 2400, 2400)}), 64, 64, {{0, 0.7}});
  for (double v : r.pixels) EXPECT_DOUBLE_EQ(v, 0.7);
}

TEST(Rasterize, PatchAlignedBox) {
  const auto r = rasterize(scene_with({box(300, 300, 600, 600, 1)}), 64, 64, {{1, 0.5}});
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) EXPECT_EQ(r.at(x, y), (x < 16 && y < 16) ? 0.5 : 0.0) << x << "," << y;
  }
}

TEST(Rasterize, LaterBoxesOverwriteAndEdgesBlend) {
  // 37.5 px per cell: a box covering half a cell blends half its intensity.
  const auto r = rasterize(scene_with({box(18.75, 18.75, 37.5, 37.5, 0), box(18.75, 18.75, 37.5, 37.5, 1)}),
                           64, 64, {{0, 1.0}, {1, 0.25}});
  EXPECT_DOUBLE_EQ(r.at(0, 0), 0.25);
  const auto half = rasterize(scene_with({box(9.375, 18.75, 18.75, 37.5)}), 64, 64, {{0, 0.8}});
  EXPECT_DOUBLE_EQ(half.at(0, 0), 0.4);
}

TEST(Rasterize, UnknownClassAndBadSize) {
  EXPECT_THROW(rasterize(scene_with({box(10, 10, 5, 5, 3)}), 64, 64, {{0, 1.0}}), ConfigError);
  EXPECT_THROW(rasterize(scene_with({}), 0, 64, {{0, 1.0}}), ArgumentError);
}

TEST(Rasterize, Deterministic) {
  Stream rng(3);
  std::vector<BBox> boxes;
  for (int k = 0; k < 30; ++k) boxes.push_back(box(rng.uniform() * 2400, rng.uniform() * 2400, 5 + 200 * rng.uniform(), 5 + 200 * rng.uniform(), k % 2));
  const auto a = rasterize(scene_with(boxes), 64, 64, {{0, 1.0}, {1, 0.5}});
  const auto b = rasterize(scene_with(boxes), 64, 64, {{0, 1.0}, {1, 0.5}});
  EXPECT_EQ(a.pixels, b.pixels);
  for (double v : a.pixels) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(CropObservation, CornersAndBounds) {
  const auto g = default_grid();
  RasterObservation obs{64, 64, std::vector<double>(64 * 64)};
  for (int i = 0; i < 64 * 64; ++i) obs.pixels[i] = i / 4096.0;
  const auto first = crop_observation(obs, g, 0);
  const auto last = crop_observation(obs, g, 15);
  ASSERT_EQ(first.width, 16);
  ASSERT_EQ(last.height, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      EXPECT_EQ(first.at(x, y), obs.at(x, y));
      EXPECT_EQ(last.at(x, y), obs.at(48 + x, 48 + y));
    }
  }
  EXPECT_THROW(crop_observation(obs, g, 16), ArgumentError);
  EXPECT_THROW(crop_observation(obs, g, -1), ArgumentError);
  RasterObservation odd{63, 63, std::vector<double>(63 * 63)};
  EXPECT_THROW(crop_observation(odd, g, 0), ArgumentError);
}

TEST(CropObservation, MatchesRasterizingThePatchAlone) {
  const auto g = default_grid();
  Stream rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const int patch = static_cast<int>(rng() % 16);
    const Rect pr = g.patch_rect(patch);
    std::vector<BBox> boxes, local;
    for (int k = 0; k < 8; ++k) {
      const double w = 5 + 100 * rng.uniform(), h = 5 + 100 * rng.uniform();
      const double cx = pr.x0 + w / 2 + rng.uniform() * (600 - w);
      const double cy = pr.y0 + h / 2 + rng.uniform() * (600 - h);
      boxes.push_back(box(cx, cy, w, h, k % 2));
      local.push_back(box(cx - pr.x0, cy - pr.y0, w, h, k % 2));
    }
    const ClassIntensities ci{{0, 1.0}, {1, 0.5}};
    const auto crop = crop_observation(rasterize(scene_with(boxes), 64, 64, ci), g, patch);
    const auto direct = rasterize(Scene{"p", 600, 600, local}, 16, 16, ci);
    for (std::size_t i = 0; i < crop.pixels.size(); ++i) EXPECT_NEAR(crop.pixels[i], direct.pixels[i], 1e-9);
  }
}

TEST(ValidateScene, RejectsBadBoxes) {
  EXPECT_THROW(validate_scene(scene_with({box(10, 10, 0, 5)})), ArgumentError);
  EXPECT_THROW(validate_scene(scene_with({box(-100, 10, 10, 10)})), ArgumentError);
  BBox scored = box(10, 10, 5, 5);
  scored.score = 0.5;
  EXPECT_THROW(validate_scene(scene_with({scored})), ArgumentError);
  EXPECT_NO_THROW(validate_scene(scene_with({box(-2, 10, 10, 10)})));
}
