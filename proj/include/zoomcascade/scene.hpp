// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace zoomcascade {

/// Axis-aligned rectangle, closed on all sides.
struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool contains(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
  bool contains(const Rect& r) const {
    return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1;
  }
};

/// Centroid-parameterized box in scene pixels. Detections carry a score,
/// ground truth does not.
struct BBox {
  double cx = 0, cy = 0, w = 0, h = 0;
  int class_id = 0;
  std::optional<double> score;

  Rect rect() const { return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2}; }
  double area() const { return w * h; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Scene {
  std::string id;
  int width = 0;
  int height = 0;
  std::vector<BBox> ground_truth;
};

/// Throws ArgumentError if the box violates size, score or scene-overlap rules.
void validate_box(const BBox& box, int scene_width, int scene_height);
void validate_scene(const Scene& scene);

/**
 * Two-level tiling: patches_per_side² non-overlapping patches, each split
 * into subpatches_per_side² overlapping subpatches. Indices are row-major at
 * both levels.
 */
struct GridLayout {
  int scene_side = 0;
  int patch_size = 0;
  int patches_per_side = 0;
  int subpatch_size = 0;
  int subpatch_overlap = 0;
  int subpatches_per_side = 0;

  int patch_count() const { return patches_per_side * patches_per_side; }
  int subpatch_count() const { return subpatches_per_side * subpatches_per_side; }
  int subpatch_stride() const { return subpatch_size - subpatch_overlap; }
  int total_subpatches() const { return patch_count() * subpatch_count(); }

  Rect patch_rect(int patch) const;
  Rect subpatch_rect(int patch, int subpatch) const;
  /// Patch owning a point; boundary points go to the lower index.
  int patch_of(double x, double y) const;
};

GridLayout build_grid(int scene_side, int patch_size, int subpatch_size, int subpatch_overlap);
GridLayout default_grid();

/// Ground truth distributed over the tiles of a grid.
struct Assignment {
  std::vector<std::vector<BBox>> patch_boxes;                  // [patch]
  std::vector<std::vector<std::vector<BBox>>> subpatch_boxes;  // [patch][subpatch]
  std::vector<int> object_counts;                              // N_i per patch
};

Assignment assign_boxes(const Scene& scene, const GridLayout& grid);

/// Row-major grayscale raster with intensities in [0,1].
struct RasterObservation {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::span<const double> view() const { return pixels; }
};

using ClassIntensities = std::map<int, double>;

RasterObservation rasterize(const Scene& scene, int out_width, int out_height,
                            const ClassIntensities& class_intensities);

RasterObservation crop_observation(const RasterObservation& obs, const GridLayout& grid,
                                   int patch_index);

}  // namespace zoomcascade
