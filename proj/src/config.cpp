// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include "zoomcascade/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "zoomcascade/errors.hpp"

namespace zoomcascade {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Drops a trailing `# comment` that is not inside a string.
std::string strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  }
  return true;
}

double parse_number(const std::string& text, const std::string& key) {
  double v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError("'" + key + "' is not a number: " + text);
  return v;
}

}  // namespace

FlatConfig FlatConfig::parse(std::string_view text, std::string_view origin) {
  FlatConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": " + why);
    };
    if (body.front() == '[' && body.back() == ']' && body.find('=') == std::string::npos) {
      section = trim(std::string_view(body).substr(1, body.size() - 2));
      if (!valid_key(section)) fail("bad section name");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    std::string key = trim(std::string_view(body).substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    if (!valid_key(key)) fail("bad key '" + key + "'");
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (value.empty()) fail("missing value for '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

FlatConfig FlatConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LookupError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void FlatConfig::set(const std::string& key, const std::string& raw_value, bool known_only) {
  if (!valid_key(key)) throw ConfigError("bad key '" + key + "'");
  if (known_only && !has(key)) throw ConfigError("unknown configuration key '" + key + "'");
  const std::string v = trim(raw_value);
  if (v.empty()) throw ConfigError("missing value for '" + key + "'");
  values_[key] = v;
}

void FlatConfig::overlay(const FlatConfig& other) {
  for (const auto& [k, v] : other.values_) set(k, v, true);
}

const std::string& FlatConfig::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing configuration key '" + key + "'");
  return it->second;
}

std::string FlatConfig::get_string(const std::string& key) const {
  const std::string& v = raw(key);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size()) ++i;
      out.push_back(v[i]);
    }
    return out;
  }
  return v;  // bare words are accepted as strings, e.g. from --set
}

double FlatConfig::get_double(const std::string& key) const { return parse_number(raw(key), key); }

std::int64_t FlatConfig::get_int(const std::string& key) const {
  const double v = get_double(key);
  if (v != static_cast<double>(static_cast<std::int64_t>(v))) {
    throw ConfigError("'" + key + "' must be an integer");
  }
  return static_cast<std::int64_t>(v);
}

bool FlatConfig::get_bool(const std::string& key) const {
  const std::string& v = raw(key);
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("'" + key + "' must be true or false");
}

std::vector<double> FlatConfig::get_doubles(const std::string& key) const {
  const std::string& v = raw(key);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
    throw ConfigError("'" + key + "' must be an array like [1, 2]");
  }
  std::vector<double> out;
  std::stringstream items(v.substr(1, v.size() - 2));
  std::string item;
  while (std::getline(items, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    out.push_back(parse_number(t, key));
  }
  return out;
}

nlohmann::json FlatConfig::to_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, v] : values_) {
    if (v.front() == '"') {
      out[k] = get_string(k);
    } else if (v.front() == '[') {
      out[k] = get_doubles(k);
    } else if (v == "true" || v == "false") {
      out[k] = v == "true";
    } else {
      const char* end = v.data() + v.size();
      std::int64_t i = 0;
      double d = 0;
      if (auto [p, ec] = std::from_chars(v.data(), end, i); ec == std::errc() && p == end) {
        out[k] = i;
      } else if (auto [q, ec2] = std::from_chars(v.data(), end, d); ec2 == std::errc() && q == end) {
        out[k] = d;
      } else {
        out[k] = v;
      }
    }
  }
  return out;
}

FlatConfig default_config() { return FlatConfig::parse(default_config_text(), "default.toml"); }

RunConfig RunConfig::from(const FlatConfig& c) {
  RunConfig r;
  r.seed = static_cast<std::uint64_t>(c.get_int("seed"));
  r.threads = static_cast<int>(c.get_int("threads"));
  r.scenes_dir = c.get_string("paths.scenes_dir");
  r.models_dir = c.get_string("paths.models_dir");
  r.report_dir = c.get_string("paths.report_dir");
  r.grid = build_grid(static_cast<int>(c.get_int("grid.scene_side")),
                      static_cast<int>(c.get_int("grid.patch_size")),
                      static_cast<int>(c.get_int("grid.subpatch_size")),
                      static_cast<int>(c.get_int("grid.subpatch_overlap")));

  r.raster.side = static_cast<int>(c.get_int("raster.side"));
  r.raster.intensities.clear();
  const auto intensities = c.get_doubles("raster.class_intensities");
  for (std::size_t k = 0; k < intensities.size(); ++k) {
    if (!(intensities[k] >= 0 && intensities[k] <= 1)) {
      throw ConfigError("raster.class_intensities must lie in [0,1]");
    }
    r.raster.intensities[static_cast<int>(k)] = intensities[k];
  }
  if (r.raster.side % r.grid.patches_per_side != 0) {
    throw ConfigError("raster.side must be divisible by the number of patches per side");
  }

  r.hyper.alpha = c.get_double("reward.alpha");
  r.hyper.beta = c.get_double("reward.beta");
  r.hyper.sigma = c.get_double("reward.sigma");
  r.hyper.lambda = c.get_double("reward.lambda");
  r.hyper.learning_rate = c.get_double("train.learning_rate");
  r.hyper.batch_size = static_cast<int>(c.get_int("train.batch_size"));
  r.hyper.seed = r.seed;
  r.variant = reward_variant_from_string(c.get_string("reward.variant"));
  r.cpnet_epochs = static_cast<int>(c.get_int("train.cpnet_epochs"));
  r.fpnet_epochs = static_cast<int>(c.get_int("train.fpnet_epochs"));
  r.hyper.epochs = r.cpnet_epochs;
  r.log_every = static_cast<int>(c.get_int("train.log_every"));
  r.checkpoint_every = static_cast<int>(c.get_int("train.checkpoint_every"));
  r.adam_beta1 = c.get_double("adam.beta1");
  r.adam_beta2 = c.get_double("adam.beta2");
  r.adam_eps = c.get_double("adam.eps");
  r.hyper.validate();

  r.detectors = DetectorPair::defaults();
  for (Tier tier : {Tier::coarse, Tier::fine}) {
    DetectorConfig& d = tier == Tier::coarse ? r.detectors.coarse : r.detectors.fine;
    const std::string p = "detector." + std::string(to_string(tier)) + ".";
    d.char_size = c.get_double(p + "char_size");
    d.steepness = c.get_double(p + "steepness");
    d.loc_noise = c.get_double(p + "loc_noise");
    d.fp_rate = c.get_double(p + "fp_rate");
    d.fp_size_min = c.get_double("detector.fp_size_min");
    d.fp_size_max = c.get_double("detector.fp_size_max");
    d.score_noise = c.get_double("detector.score_noise");
    d.fp_score_min = c.get_double("detector.fp_score_min");
    d.fp_score_max = c.get_double("detector.fp_score_max");
    d.fp_classes = static_cast<int>(intensities.size());
  }

  r.cost.t_coarse_ms = c.get_double("cost.t_coarse_ms");
  r.cost.t_fine_ms = c.get_double("cost.t_fine_ms");
  r.cost.t_cpnet_ms = c.get_double("cost.t_cpnet_ms");
  r.cost.t_fpnet_ms = c.get_double("cost.t_fpnet_ms");
  r.cost.validate();
  r.detectors.coarse.unit_cost_ms = r.cost.t_coarse_ms;
  r.detectors.fine.unit_cost_ms = r.cost.t_fine_ms;
  r.detectors.validate();

  r.metrics.iou_thresholds = c.get_doubles("metric.iou_thresholds");
  r.metrics.reward_iou = c.get_double("metric.reward_iou");
  r.metrics.validate();

  r.synth.seed = r.seed;
  r.synth.n_scenes = static_cast<int>(c.get_int("synth.n_scenes"));
  r.synth.scene_side = static_cast<int>(c.get_int("synth.scene_side"));
  r.synth.cluster_rate = c.get_double("synth.cluster_rate");
  const auto per_cluster = c.get_doubles("synth.objects_per_cluster");
  if (per_cluster.size() != 2) throw ConfigError("synth.objects_per_cluster must be [min, max]");
  r.synth.objects_per_cluster_min = static_cast<int>(per_cluster[0]);
  r.synth.objects_per_cluster_max = static_cast<int>(per_cluster[1]);
  r.synth.cluster_spread = c.get_double("synth.cluster_spread");
  const auto means = c.get_doubles("synth.class_log_mean");
  const auto stds = c.get_doubles("synth.class_log_std");
  if (means.size() != stds.size()) throw ConfigError("synth class_log_mean/class_log_std lengths differ");
  r.synth.class_sizes.clear();
  for (std::size_t k = 0; k < means.size(); ++k) r.synth.class_sizes.push_back({means[k], stds[k]});
  r.synth.class_mix = c.get_doubles("synth.class_mix");
  r.synth.homogeneous_clusters = c.get_bool("synth.homogeneous_clusters");
  r.synth.validate();
  if (r.synth.scene_side != r.grid.scene_side) {
    throw ConfigError("synth.scene_side must equal grid.scene_side");
  }
  if (r.synth.class_mix.size() > intensities.size()) {
    throw ConfigError("every synthesized class needs a raster intensity");
  }

  r.zoom_prob = c.get_double("eval.zoom_prob");
  r.entropy_threshold_coarse = c.get_double("eval.entropy_threshold_coarse");
  r.entropy_threshold_fine = c.get_double("eval.entropy_threshold_fine");
  return r;
}

TrainConfig RunConfig::train_config(Stage stage) const {
  TrainConfig t;
  t.hyper = hyper;
  t.hyper.epochs = stage == Stage::cpnet ? cpnet_epochs : fpnet_epochs;
  t.stage = stage;
  t.variant = variant;
  t.adam_beta1 = adam_beta1;
  t.adam_beta2 = adam_beta2;
  t.adam_eps = adam_eps;
  t.reward_iou = metrics.reward_iou;
  t.log_every = log_every;
  t.threads = threads;
  return t;
}

}  // namespace zoomcascade
