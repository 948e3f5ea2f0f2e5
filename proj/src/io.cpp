// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include "zoomcascade/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "zoomcascade/errors.hpp"

namespace zoomcascade::io {

using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LookupError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

json scene_to_json(const Scene& scene) {
  json objects = json::array();
  for (const auto& b : scene.ground_truth) {
    objects.push_back({{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}, {"class", b.class_id}});
  }
  return {{"id", scene.id}, {"width", scene.width}, {"height", scene.height}, {"objects", objects}};
}

Scene scene_from_json(const json& doc) {
  Scene s;
  try {
    s.id = doc.at("id").get<std::string>();
    s.width = doc.at("width").get<int>();
    s.height = doc.at("height").get<int>();
    for (const auto& o : doc.at("objects")) {
      BBox b;
      b.cx = o.at("cx").get<double>();
      b.cy = o.at("cy").get<double>();
      b.w = o.at("w").get<double>();
      b.h = o.at("h").get<double>();
      b.class_id = o.at("class").get<int>();
      s.ground_truth.push_back(b);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scene document: ") + e.what());
  }
  validate_scene(s);
  return s;
}

void write_scene(const std::string& path, const Scene& scene) {
  write_text(path, scene_to_json(scene).dump(1) + "\n");
}

Scene read_scene(const std::string& path) { return scene_from_json(read_json_file(path)); }

std::vector<Scene> read_scene_dir(const std::string& dir) {
  const auto manifest = read_json_file((std::filesystem::path(dir) / "manifest.json").string());
  std::vector<Scene> scenes;
  for (const auto& id : manifest.at("scenes")) {
    scenes.push_back(read_scene((std::filesystem::path(dir) / (id.get<std::string>() + ".json")).string()));
  }
  return scenes;
}

json model_to_json(const PolicyModel& model) {
  json weights = json::array();
  json biases = json::array();
  for (const auto& layer : model.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
    }
    weights.push_back(w);
    biases.push_back(to_std(layer.biases));
  }
  return {{"format_version", 1},
          {"layer_dims", model.layer_dims()},
          {"activation", "relu"},
          {"weights", weights},
          {"biases", biases},
          {"trained_for", model.trained_for}};
}

PolicyModel model_from_json(const json& doc) {
  try {
    if (doc.at("format_version").get<int>() != 1) throw ConfigError("unsupported model format_version");
    if (doc.at("activation").get<std::string>() != "relu") throw ConfigError("unsupported activation");
    PolicyModel m = PolicyModel::zeros(doc.at("layer_dims").get<std::vector<int>>());
    m.trained_for = doc.at("trained_for").get<std::string>();
    const auto& weights = doc.at("weights");
    const auto& biases = doc.at("biases");
    auto& layers = m.mutable_layers();
    if (weights.size() != layers.size() || biases.size() != layers.size()) {
      throw ConfigError("model layer count does not match layer_dims");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto w = weights[l].get<std::vector<double>>();
      const auto b = biases[l].get<std::vector<double>>();
      auto& L = layers[l];
      if (w.size() != static_cast<std::size_t>(L.weights.size()) ||
          b.size() != static_cast<std::size_t>(L.biases.size())) {
        throw ConfigError("model layer " + std::to_string(l) + " has the wrong parameter count");
      }
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < L.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < L.weights.cols(); ++c) L.weights(r, c) = w[k++];
      }
      for (std::size_t i = 0; i < b.size(); ++i) L.biases(static_cast<Eigen::Index>(i)) = b[i];
    }
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
}

void write_model(const std::string& path, const PolicyModel& model, const json& effective_config) {
  json doc = model_to_json(model);
  if (!effective_config.is_null()) doc["effective_config"] = effective_config;
  write_text(path, doc.dump() + "\n");
}

PolicyModel read_model(const std::string& path) { return model_from_json(read_json_file(path)); }

json report_to_json(const EvalReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"policy_name", r.policy_name},
          {"ap_percent", num(r.ap_percent)},
          {"ar_percent", num(r.ar_percent)},
          {"runtime_ms_mean", r.runtime_ms_mean},
          {"hr_ratio_percent", r.hr_ratio_percent},
          {"scenes_evaluated", r.scenes_evaluated},
          {"zoom_grid_stats", r.zoom_grid_stats}};
}

namespace {

json bins_to_json(const std::vector<ProfileBin>& bins) {
  json arr = json::array();
  for (const auto& b : bins) {
    arr.push_back({{"lower", b.lower},
                   {"upper", std::isfinite(b.upper) ? json(b.upper) : json(nullptr)},
                   {"patches", b.patches},
                   {"mean_zoom_probability",
                    b.mean_zoom_probability ? json(*b.mean_zoom_probability) : json(nullptr)}});
  }
  return arr;
}

}  // namespace

json profile_to_json(const ZoomProfile& p) {
  return {{"by_object_count", bins_to_json(p.by_object_count)},
          {"by_object_area", bins_to_json(p.by_object_area)}};
}

std::string profile_to_csv(const ZoomProfile& p) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "axis,lower,upper,patches,mean_zoom_probability\n";
  auto emit = [&](const char* axis, const std::vector<ProfileBin>& bins) {
    for (const auto& b : bins) {
      out << axis << ',' << b.lower << ',';
      if (std::isfinite(b.upper)) out << b.upper;
      else out << "inf";
      out << ',' << b.patches << ',';
      if (b.mean_zoom_probability) out << *b.mean_zoom_probability;
      out << '\n';
    }
  };
  emit("object_count", p.by_object_count);
  emit("object_area", p.by_object_area);
  return out.str();
}

std::string to_pgm(const RasterObservation& raster) {
  std::string out = "P5\n" + std::to_string(raster.width) + " " + std::to_string(raster.height) + "\n255\n";
  out.reserve(out.size() + raster.pixels.size());
  for (double v : raster.pixels) {
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)))));
  }
  return out;
}

void write_pgm(const std::string& path, const RasterObservation& raster) {
  write_text(path, to_pgm(raster));
}

RasterObservation decision_map(const ActionPlan& plan, const GridLayout& grid, int cell_pixels) {
  const int cells = grid.patches_per_side * grid.subpatches_per_side;
  const int side = cells * cell_pixels;
  RasterObservation img{side, side, std::vector<double>(static_cast<std::size_t>(side) * side, 0.0)};
  constexpr double kGrey = 128.0 / 255.0;
  for (int p = 0; p < grid.patch_count(); ++p) {
    const int pr = p / grid.patches_per_side, pc = p % grid.patches_per_side;
    for (int q = 0; q < grid.subpatch_count(); ++q) {
      const int r = pr * grid.subpatches_per_side + q / grid.subpatches_per_side;
      const int c = pc * grid.subpatches_per_side + q % grid.subpatches_per_side;
      const double v = plan.subpatch_fine(p, q) ? 1.0 : kGrey;
      for (int y = r * cell_pixels; y < (r + 1) * cell_pixels; ++y) {
        for (int x = c * cell_pixels; x < (c + 1) * cell_pixels; ++x) {
          img.pixels[static_cast<std::size_t>(y) * side + x] = v;
        }
      }
    }
  }
  return img;
}

}  // namespace zoomcascade::io
