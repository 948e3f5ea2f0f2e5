// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "zoomcascade/rng.hpp"
#include "zoomcascade/scene.hpp"

namespace zoomcascade {

enum class Tier { coarse, fine };

std::string_view to_string(Tier tier);
Tier tier_from_string(std::string_view name);

/**
 * Size-driven stand-in for a trained detector. An object of geometric-mean
 * side `size` is found with probability logistic(steepness * (size/char_size - 1)).
 */
struct DetectorConfig {
  Tier tier = Tier::coarse;
  double char_size = 30.0;
  double steepness = 4.0;
  double loc_noise = 0.02;  // jitter std as a fraction of object extent
  double fp_rate = 0.2;     // mean false positives per tile
  double fp_size_min = 8.0;
  double fp_size_max = 150.0;
  int fp_classes = 2;
  double score_noise = 0.05;
  double fp_score_min = 0.1;
  double fp_score_max = 0.5;
  double unit_cost_ms = 10.0;

  void validate() const;
};

struct DetectorPair {
  DetectorConfig coarse;
  DetectorConfig fine;

  const DetectorConfig& operator[](Tier t) const { return t == Tier::coarse ? coarse : fine; }
  /// Checks each tier and that fine detectability dominates coarse for every size.
  void validate() const;

  static DetectorPair defaults();
};

/// Tile a detector is run on. `subpatch` is empty for whole-patch tiles.
struct TileRef {
  int patch = 0;
  std::optional<int> subpatch;
  Rect rect;
};

struct DetectionSet {
  int patch_index = 0;
  std::optional<int> subpatch_index;
  std::vector<BBox> boxes;
};

double detection_probability(const DetectorConfig& config, const BBox& box);

/// Stream for one (seed, scene, tile, tier) detector draw.
Stream detector_stream(std::uint64_t seed, std::string_view scene_id, const TileRef& tile, Tier tier);

DetectionSet detect(const DetectorConfig& config, std::span<const BBox> gt_in_tile,
                    const TileRef& tile, Stream& rng);

/// Mean per-object detection probability; 1.0 for an empty tile. Requires
/// loc_noise <= 0.05 so that jitter cannot explain a miss.
double expected_recall(const DetectorConfig& config, std::span<const BBox> gt_in_tile);

/// Read-only store of precomputed detections keyed by scene, tile and tier.
class ReplayArchive {
 public:
  static ReplayArchive from_json_text(std::string_view text);
  static ReplayArchive load(const std::string& path);

  void insert(const std::string& scene_id, int patch, std::optional<int> subpatch, Tier tier,
              std::vector<BBox> boxes);
  DetectionSet lookup(const std::string& scene_id, int patch, std::optional<int> subpatch,
                      Tier tier) const;
  bool contains_scene(const std::string& scene_id) const;
  std::string to_json_text() const;

 private:
  using Key = std::tuple<int, int, int>;  // patch, subpatch (-1 = none), tier
  std::map<std::string, std::map<Key, std::vector<BBox>>> scenes_;
};

/// Source of tile detections for the inference cascade.
class DetectorSource {
 public:
  virtual ~DetectorSource() = default;
  virtual DetectionSet run(const Scene& scene, const TileRef& tile, Tier tier,
                           std::span<const BBox> gt_in_tile) const = 0;
};

class SimulatedDetectors final : public DetectorSource {
 public:
  SimulatedDetectors(DetectorPair pair, std::uint64_t seed);
  DetectionSet run(const Scene& scene, const TileRef& tile, Tier tier,
                   std::span<const BBox> gt_in_tile) const override;
  const DetectorPair& pair() const { return pair_; }

 private:
  DetectorPair pair_;
  std::uint64_t seed_;
};

class ReplayDetectors final : public DetectorSource {
 public:
  explicit ReplayDetectors(const ReplayArchive& archive) : archive_(archive) {}
  DetectionSet run(const Scene& scene, const TileRef& tile, Tier tier,
                   std::span<const BBox> gt_in_tile) const override;

 private:
  const ReplayArchive& archive_;
};

}  // namespace zoomcascade
