// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include "zoomcascade/scene.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "zoomcascade/errors.hpp"

namespace zoomcascade {

void validate_box(const BBox& box, int scene_width, int scene_height) {
  if (!std::isfinite(box.cx) || !std::isfinite(box.cy) || !(box.w > 0) || !(box.h > 0) ||
      !std::isfinite(box.w) || !std::isfinite(box.h)) {
    throw ArgumentError("box must have finite centroid and positive extent");
  }
  if (box.class_id < 0) throw ArgumentError("box class must be non-negative");
  if (box.score && !(*box.score >= 0.0 && *box.score <= 1.0)) {
    throw ArgumentError("box score outside [0,1]");
  }
  const Rect r = box.rect();
  if (r.x1 <= 0 || r.y1 <= 0 || r.x0 >= scene_width || r.y0 >= scene_height) {
    throw ArgumentError("box does not intersect the scene");
  }
}

void validate_scene(const Scene& scene) {
  if (scene.width <= 0 || scene.height <= 0) throw ArgumentError("scene '" + scene.id + "' has no area");
  for (const auto& b : scene.ground_truth) {
    if (b.score) throw ArgumentError("ground truth in scene '" + scene.id + "' carries a score");
    validate_box(b, scene.width, scene.height);
  }
}

Rect GridLayout::patch_rect(int patch) const {
  const int row = patch / patches_per_side;
  const int col = patch % patches_per_side;
  const double x0 = static_cast<double>(col) * patch_size;
  const double y0 = static_cast<double>(row) * patch_size;
  return {x0, y0, x0 + patch_size, y0 + patch_size};
}

Rect GridLayout::subpatch_rect(int patch, int subpatch) const {
  const Rect p = patch_rect(patch);
  const int row = subpatch / subpatches_per_side;
  const int col = subpatch % subpatches_per_side;
  const double x0 = p.x0 + static_cast<double>(col) * subpatch_stride();
  const double y0 = p.y0 + static_cast<double>(row) * subpatch_stride();
  return {x0, y0, x0 + subpatch_size, y0 + subpatch_size};
}

namespace {

// Column of a coordinate under closed cells [k*size, (k+1)*size], lower index
// on shared edges.
int cell_of(double v, int size, int count) {
  const int k = static_cast<int>(std::ceil(v / size)) - 1;
  return std::clamp(k, 0, count - 1);
}

}  // namespace

int GridLayout::patch_of(double x, double y) const {
  return cell_of(y, patch_size, patches_per_side) * patches_per_side +
         cell_of(x, patch_size, patches_per_side);
}

GridLayout build_grid(int scene_side, int patch_size, int subpatch_size, int subpatch_overlap) {
  if (scene_side <= 0 || patch_size <= 0 || subpatch_size <= 0 || subpatch_overlap < 0) {
    throw ConfigError("grid sizes must be positive and overlap non-negative");
  }
  if (scene_side % patch_size != 0) {
    std::ostringstream msg;
    msg << "scene_side " << scene_side << " is not a multiple of patch_size " << patch_size;
    throw ConfigError(msg.str());
  }
  if (subpatch_size > patch_size) {
    std::ostringstream msg;
    msg << "subpatch_size " << subpatch_size << " exceeds patch_size " << patch_size;
    throw ConfigError(msg.str());
  }
  const int stride = subpatch_size - subpatch_overlap;
  if (stride <= 0) {
    std::ostringstream msg;
    msg << "subpatch_overlap " << subpatch_overlap << " leaves no stride for subpatch_size "
        << subpatch_size;
    throw ConfigError(msg.str());
  }
  if ((patch_size - subpatch_size) % stride != 0) {
    std::ostringstream msg;
    msg << "subpatch stride " << stride << " does not tile patch_size " << patch_size
        << " (patch_size - subpatch_size = " << patch_size - subpatch_size << ")";
    throw ConfigError(msg.str());
  }
  GridLayout g;
  g.scene_side = scene_side;
  g.patch_size = patch_size;
  g.patches_per_side = scene_side / patch_size;
  g.subpatch_size = subpatch_size;
  g.subpatch_overlap = subpatch_overlap;
  g.subpatches_per_side = (patch_size - subpatch_size) / stride + 1;
  return g;
}

GridLayout default_grid() { return build_grid(2400, 600, 320, 40); }

Assignment assign_boxes(const Scene& scene, const GridLayout& grid) {
  Assignment out;
  const int pc = grid.patch_count();
  const int pf = grid.subpatch_count();
  out.patch_boxes.resize(pc);
  out.subpatch_boxes.assign(pc, std::vector<std::vector<BBox>>(pf));
  out.object_counts.assign(pc, 0);
  const double side = grid.scene_side;
  for (const auto& box : scene.ground_truth) {
    // Centroids outside the scene (boxes overhanging an edge) are pulled onto it.
    const double x = std::clamp(box.cx, 0.0, side);
    const double y = std::clamp(box.cy, 0.0, side);
    const int patch = grid.patch_of(x, y);
    out.patch_boxes[patch].push_back(box);
    ++out.object_counts[patch];
    for (int s = 0; s < pf; ++s) {
      if (grid.subpatch_rect(patch, s).contains(x, y)) out.subpatch_boxes[patch][s].push_back(box);
    }
  }
  return out;
}

namespace {

double overlap_1d(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

RasterObservation rasterize(const Scene& scene, int out_width, int out_height,
                            const ClassIntensities& class_intensities) {
  if (out_width < 1 || out_height < 1) throw ArgumentError("raster dimensions must be >= 1");
  RasterObservation obs{out_width, out_height,
                        std::vector<double>(static_cast<std::size_t>(out_width) * out_height, 0.0)};
  const double sx = static_cast<double>(out_width) / scene.width;
  const double sy = static_cast<double>(out_height) / scene.height;
  for (const auto& box : scene.ground_truth) {
    const auto it = class_intensities.find(box.class_id);
    if (it == class_intensities.end()) {
      throw ConfigError("no raster intensity configured for class " + std::to_string(box.class_id));
    }
    const double value = it->second;
    const Rect r = box.rect();
    const double fx0 = r.x0 * sx, fx1 = r.x1 * sx;
    const double fy0 = r.y0 * sy, fy1 = r.y1 * sy;
    const int c0 = std::max(0, static_cast<int>(std::floor(fx0)));
    const int c1 = std::min(out_width, static_cast<int>(std::ceil(fx1)));
    const int r0 = std::max(0, static_cast<int>(std::floor(fy0)));
    const int r1 = std::min(out_height, static_cast<int>(std::ceil(fy1)));
    for (int row = r0; row < r1; ++row) {
      const double cy = overlap_1d(fy0, fy1, row, row + 1.0);
      for (int col = c0; col < c1; ++col) {
        const double coverage = cy * overlap_1d(fx0, fx1, col, col + 1.0);
        if (coverage <= 0) continue;
        double& px = obs.pixels[static_cast<std::size_t>(row) * out_width + col];
        px = coverage >= 1.0 ? value : (1.0 - coverage) * px + coverage * value;
      }
    }
  }
  return obs;
}

RasterObservation crop_observation(const RasterObservation& obs, const GridLayout& grid,
                                   int patch_index) {
  if (patch_index < 0 || patch_index >= grid.patch_count()) {
    throw ArgumentError("patch index " + std::to_string(patch_index) + " outside [0, " +
                        std::to_string(grid.patch_count()) + ")");
  }
  const int n = grid.patches_per_side;
  if (obs.width % n != 0 || obs.height % n != 0) {
    throw ArgumentError("observation size is not divisible by patches_per_side");
  }
  const int cw = obs.width / n;
  const int ch = obs.height / n;
  const int ox = (patch_index % n) * cw;
  const int oy = (patch_index / n) * ch;
  RasterObservation out{cw, ch, std::vector<double>(static_cast<std::size_t>(cw) * ch)};
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      out.pixels[static_cast<std::size_t>(y) * cw + x] = obs.at(ox + x, oy + y);
    }
  }
  return out;
}

}  // namespace zoomcascade
