// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "zoomcascade/cascade.hpp"
#include "zoomcascade/detector.hpp"
#include "zoomcascade/metrics.hpp"
#include "zoomcascade/reward.hpp"
#include "zoomcascade/synth.hpp"
#include "zoomcascade/trainer.hpp"

namespace zoomcascade {

/**
 * TOML-style `key = value` file with flat dotted keys. Values are strings
 * ("..."), numbers, booleans or flat arrays of numbers. `[section]` headers
 * prefix the keys that follow them.
 */
class FlatConfig {
 public:
  static FlatConfig parse(std::string_view text, std::string_view origin = "<config>");
  static FlatConfig load(const std::string& path);

  /// Sets a raw value. With `known_only`, keys absent from *this are rejected.
  void set(const std::string& key, const std::string& raw_value, bool known_only = true);
  /// Overlays every entry of `other`; unknown keys are rejected.
  void overlay(const FlatConfig& other);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;

  /// Typed echo of every entry, sorted by key.
  nlohmann::json to_json() const;
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  const std::string& raw(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

/// Contents of configs/default.toml, compiled in.
std::string_view default_config_text();
FlatConfig default_config();

/// Typed view of a FlatConfig.
struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string scenes_dir, models_dir, report_dir;
  GridLayout grid;
  RasterConfig raster;
  Hyperparams hyper;
  RewardVariant variant = RewardVariant::combined;
  int cpnet_epochs = 0;
  int fpnet_epochs = 0;
  int log_every = 1;
  int checkpoint_every = 0;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  DetectorPair detectors;
  CostModel cost;
  MetricConfig metrics;
  SynthConfig synth;
  double zoom_prob = 0.5;
  double entropy_threshold_coarse = 0.3;
  double entropy_threshold_fine = 0.3;

  static RunConfig from(const FlatConfig& config);
  TrainConfig train_config(Stage stage) const;
};

}  // namespace zoomcascade
