// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "zoomcascade/cascade.hpp"
#include "zoomcascade/policy.hpp"
#include "zoomcascade/scene.hpp"

namespace zoomcascade::io {

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& doc);

void write_scene(const std::string& path, const Scene& scene);
Scene read_scene(const std::string& path);

/// Reads every scene listed in `<dir>/manifest.json`, in manifest order.
std::vector<Scene> read_scene_dir(const std::string& dir);

nlohmann::json model_to_json(const PolicyModel& model);
PolicyModel model_from_json(const nlohmann::json& doc);
void write_model(const std::string& path, const PolicyModel& model,
                 const nlohmann::json& effective_config = nullptr);
PolicyModel read_model(const std::string& path);

nlohmann::json report_to_json(const EvalReport& report);
nlohmann::json profile_to_json(const ZoomProfile& profile);
std::string profile_to_csv(const ZoomProfile& profile);

/// Binary PGM (P5), 8-bit, value = round(255 * intensity).
std::string to_pgm(const RasterObservation& raster);
void write_pgm(const std::string& path, const RasterObservation& raster);

/// Patch/subpatch decision map: fine subpatches white, coarse grey.
RasterObservation decision_map(const ActionPlan& plan, const GridLayout& grid, int cell_pixels = 8);

nlohmann::json read_json_file(const std::string& path);
/// Writes text; throws std::runtime_error when the file cannot be opened.
void write_text(const std::string& path, std::string_view text);

}  // namespace zoomcascade::io
