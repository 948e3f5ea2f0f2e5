// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include "zoomcascade/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "zoomcascade/errors.hpp"

namespace zoomcascade {

std::string_view to_string(Tier tier) { return tier == Tier::coarse ? "coarse" : "fine"; }

Tier tier_from_string(std::string_view name) {
  if (name == "coarse") return Tier::coarse;
  if (name == "fine") return Tier::fine;
  throw ArgumentError("unknown tier '" + std::string(name) + "'");
}

void DetectorConfig::validate() const {
  const std::string t(to_string(tier));
  if (!(char_size > 0)) throw ConfigError("detector." + t + ".char_size must be positive");
  if (!(steepness > 0)) throw ConfigError("detector." + t + ".steepness must be positive");
  if (!(loc_noise >= 0)) throw ConfigError("detector." + t + ".loc_noise must be non-negative");
  if (!(fp_rate >= 0)) throw ConfigError("detector." + t + ".fp_rate must be non-negative");
  if (!(fp_size_min > 0 && fp_size_max >= fp_size_min)) {
    throw ConfigError("detector." + t + " false-positive size range is invalid");
  }
  if (fp_classes < 1) throw ConfigError("detector." + t + ".fp_classes must be >= 1");
  if (!(score_noise >= 0)) throw ConfigError("detector." + t + ".score_noise must be non-negative");
  if (!(fp_score_min >= 0 && fp_score_max <= 1 && fp_score_min <= fp_score_max)) {
    throw ConfigError("detector." + t + " false-positive score range must lie in [0,1]");
  }
  if (!(unit_cost_ms >= 0)) throw ConfigError("detector." + t + ".unit_cost_ms must be non-negative");
}

void DetectorPair::validate() const {
  coarse.validate();
  fine.validate();
  if (coarse.tier != Tier::coarse || fine.tier != Tier::fine) {
    throw ConfigError("detector pair tiers are swapped");
  }
  if (!(coarse.char_size > fine.char_size)) {
    throw ConfigError("coarse char_size must exceed fine char_size");
  }
  // logistic arguments are linear in size; fine dominates at size 0 and in slope.
  if (fine.steepness > coarse.steepness ||
      fine.steepness / fine.char_size < coarse.steepness / coarse.char_size) {
    throw ConfigError("detector steepness makes the coarse tier more sensitive for some sizes");
  }
}

DetectorPair DetectorPair::defaults() {
  DetectorPair p;
  p.coarse.tier = Tier::coarse;
  p.coarse.char_size = 30.0;
  p.coarse.unit_cost_ms = 10.0;
  p.fine.tier = Tier::fine;
  p.fine.char_size = 8.0;
  p.fine.unit_cost_ms = 50.0;
  return p;
}

double detection_probability(const DetectorConfig& config, const BBox& box) {
  const double size = std::sqrt(box.w * box.h);
  return 1.0 / (1.0 + std::exp(-config.steepness * (size / config.char_size - 1.0)));
}

Stream detector_stream(std::uint64_t seed, std::string_view scene_id, const TileRef& tile, Tier tier) {
  return Stream(derive_key({seed, hash_string(scene_id), static_cast<std::uint64_t>(tile.patch),
                            static_cast<std::uint64_t>(tile.subpatch.value_or(-1)),
                            static_cast<std::uint64_t>(tier)}));
}

DetectionSet detect(const DetectorConfig& config, std::span<const BBox> gt_in_tile,
                    const TileRef& tile, Stream& rng) {
  DetectionSet out{tile.patch, tile.subpatch, {}};
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& gt : gt_in_tile) {
    const double p = detection_probability(config, gt);
    if (!(rng.uniform() < p)) continue;
    BBox d = gt;
    if (config.loc_noise > 0) {
      d.cx += normal(rng) * config.loc_noise * gt.w;
      d.cy += normal(rng) * config.loc_noise * gt.h;
      d.w = std::max(0.05 * gt.w, gt.w + normal(rng) * config.loc_noise * gt.w);
      d.h = std::max(0.05 * gt.h, gt.h + normal(rng) * config.loc_noise * gt.h);
    }
    d.score = std::clamp(p + config.score_noise * normal(rng), 0.0, 1.0);
    out.boxes.push_back(d);
  }
  if (config.fp_rate > 0) {
    std::poisson_distribution<int> count(config.fp_rate);
    const int n = count(rng);
    const double log_lo = std::log(config.fp_size_min);
    const double log_hi = std::log(config.fp_size_max);
    for (int k = 0; k < n; ++k) {
      BBox fp;
      fp.cx = tile.rect.x0 + rng.uniform() * tile.rect.width();
      fp.cy = tile.rect.y0 + rng.uniform() * tile.rect.height();
      const double side = std::exp(log_lo + rng.uniform() * (log_hi - log_lo));
      fp.w = side;
      fp.h = side;
      fp.class_id = static_cast<int>(rng() % static_cast<std::uint64_t>(config.fp_classes));
      fp.score = config.fp_score_min + rng.uniform() * (config.fp_score_max - config.fp_score_min);
      out.boxes.push_back(fp);
    }
  }
  return out;
}

double expected_recall(const DetectorConfig& config, std::span<const BBox> gt_in_tile) {
  if (config.loc_noise > 0.05) {
    throw ConfigError("expected_recall requires loc_noise <= 0.05");
  }
  if (gt_in_tile.empty()) return 1.0;
  double sum = 0;
  for (const auto& b : gt_in_tile) sum += detection_probability(config, b);
  return sum / static_cast<double>(gt_in_tile.size());
}

// ---------------------------------------------------------------------------
// Replay archive

namespace {

BBox box_from_json(const nlohmann::json& j) {
  BBox b;
  b.cx = j.at("cx").get<double>();
  b.cy = j.at("cy").get<double>();
  b.w = j.at("w").get<double>();
  b.h = j.at("h").get<double>();
  b.class_id = j.at("class").get<int>();
  b.score = j.at("score").get<double>();
  return b;
}

}  // namespace

ReplayArchive ReplayArchive::from_json_text(std::string_view text) {
  ReplayArchive archive;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("replay archive is not valid JSON: ") + e.what());
  }
  try {
    for (const auto& [scene_id, entry] : doc.items()) {
      for (const auto& tile : entry.at("tiles")) {
        std::optional<int> sub;
        if (!tile.at("subpatch").is_null()) sub = tile.at("subpatch").get<int>();
        std::vector<BBox> boxes;
        for (const auto& b : tile.at("boxes")) boxes.push_back(box_from_json(b));
        archive.insert(scene_id, tile.at("patch").get<int>(), sub,
                       tier_from_string(tile.at("tier").get<std::string>()), std::move(boxes));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed replay archive: ") + e.what());
  }
  return archive;
}

ReplayArchive ReplayArchive::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LookupError("cannot open replay archive " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void ReplayArchive::insert(const std::string& scene_id, int patch, std::optional<int> subpatch,
                           Tier tier, std::vector<BBox> boxes) {
  scenes_[scene_id][{patch, subpatch.value_or(-1), static_cast<int>(tier)}] = std::move(boxes);
}

DetectionSet ReplayArchive::lookup(const std::string& scene_id, int patch,
                                   std::optional<int> subpatch, Tier tier) const {
  auto describe = [&] {
    std::ostringstream msg;
    msg << "scene '" << scene_id << "' patch " << patch << " subpatch "
        << (subpatch ? std::to_string(*subpatch) : std::string("none")) << " tier "
        << to_string(tier);
    return msg.str();
  };
  const auto s = scenes_.find(scene_id);
  if (s == scenes_.end()) throw LookupError("replay archive has no " + describe());
  const auto t = s->second.find({patch, subpatch.value_or(-1), static_cast<int>(tier)});
  if (t == s->second.end()) throw LookupError("replay archive has no " + describe());
  return {patch, subpatch, t->second};
}

bool ReplayArchive::contains_scene(const std::string& scene_id) const {
  return scenes_.count(scene_id) != 0;
}

std::string ReplayArchive::to_json_text() const {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [scene_id, tiles] : scenes_) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [key, boxes] : tiles) {
      const auto& [patch, sub, tier] = key;
      nlohmann::json jb = nlohmann::json::array();
      for (const auto& b : boxes) {
        jb.push_back({{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h},
                      {"class", b.class_id}, {"score", b.score.value_or(0.0)}});
      }
      arr.push_back({{"patch", patch},
                     {"subpatch", sub < 0 ? nlohmann::json(nullptr) : nlohmann::json(sub)},
                     {"tier", std::string(to_string(static_cast<Tier>(tier)))},
                     {"boxes", jb}});
    }
    doc[scene_id] = {{"tiles", arr}};
  }
  return doc.dump();
}

SimulatedDetectors::SimulatedDetectors(DetectorPair pair, std::uint64_t seed)
    : pair_(std::move(pair)), seed_(seed) {
  pair_.validate();
}

DetectionSet SimulatedDetectors::run(const Scene& scene, const TileRef& tile, Tier tier,
                                     std::span<const BBox> gt_in_tile) const {
  Stream rng = detector_stream(seed_, scene.id, tile, tier);
  return detect(pair_[tier], gt_in_tile, tile, rng);
}

DetectionSet ReplayDetectors::run(const Scene& scene, const TileRef& tile, Tier tier,
                                  std::span<const BBox>) const {
  return archive_.lookup(scene.id, tile.patch, tile.subpatch, tier);
}

}  // namespace zoomcascade
