// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>

#include "zoomcascade/config.hpp"
#include "zoomcascade/io.hpp"
#include "zoomcascade/synth.hpp"

using namespace zoomcascade;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("zoomcascade_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(FlatConfig, ParsesSectionsAndTypes) {
  const auto c = FlatConfig::parse(R"(
# comment
seed = 7
name = "abc"  # trailing
[train]
learning_rate = 1e-4
flag = true
sizes = [1, 2.5, 3]
)");
  EXPECT_EQ(c.get_int("seed"), 7);
  EXPECT_EQ(c.get_string("name"), "abc");
  EXPECT_DOUBLE_EQ(c.get_double("train.learning_rate"), 1e-4);
  EXPECT_TRUE(c.get_bool("train.flag"));
  EXPECT_EQ(c.get_doubles("train.sizes"), (std::vector<double>{1, 2.5, 3}));
  EXPECT_THROW(c.get_int("train.learning_rate"), ConfigError);
  EXPECT_THROW(c.get_bool("seed"), ConfigError);
  EXPECT_THROW(c.get_double("missing"), ConfigError);
}

TEST(FlatConfig, MalformedLinesNameTheLocation) {
  try {
    FlatConfig::parse("a = 1\nthis is not valid\n", "bad.toml");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.toml:2"), std::string::npos);
  }
}

TEST(FlatConfig, OverridesRejectUnknownKeys) {
  FlatConfig c = default_config();
  c.set("reward.alpha", "0.9");
  EXPECT_DOUBLE_EQ(c.get_double("reward.alpha"), 0.9);
  EXPECT_THROW(c.set("reward.alhpa", "0.9"), ConfigError);
  EXPECT_THROW(c.overlay(FlatConfig::parse("nope = 1")), ConfigError);
  c.overlay(FlatConfig::parse("[grid]\npatch_size = 600"));
  EXPECT_EQ(c.get_int("grid.patch_size"), 600);
  EXPECT_THROW(FlatConfig::load("/nonexistent/zc.toml"), LookupError);
}

TEST(FlatConfig, EchoIsTyped) {
  const auto j = default_config().to_json();
  EXPECT_TRUE(j.at("reward.alpha").is_number());
  EXPECT_TRUE(j.at("reward.variant").is_string());
  EXPECT_TRUE(j.at("synth.homogeneous_clusters").is_boolean());
  EXPECT_TRUE(j.at("raster.class_intensities").is_array());
}

TEST(RunConfig, DefaultsEqualPaperValues) {
  const RunConfig rc = RunConfig::from(default_config());
  EXPECT_DOUBLE_EQ(rc.hyper.alpha, 0.8);
  EXPECT_DOUBLE_EQ(rc.hyper.beta, 0.05);
  EXPECT_DOUBLE_EQ(rc.hyper.sigma, 0.25);
  EXPECT_DOUBLE_EQ(rc.hyper.lambda, 0.25);
  EXPECT_DOUBLE_EQ(rc.hyper.learning_rate, 1e-4);
  EXPECT_EQ(rc.grid.patch_count(), 16);
  EXPECT_EQ(rc.grid.subpatch_count(), 4);
  EXPECT_DOUBLE_EQ(rc.cost.t_coarse_ms, 10);
  EXPECT_DOUBLE_EQ(rc.cost.t_fine_ms, 50);
  EXPECT_FALSE(rc.synth.homogeneous_clusters);
  EXPECT_EQ(rc.train_config(Stage::fpnet).stage, Stage::fpnet);
}

TEST(RunConfig, InvalidValuesAreConfigErrors) {
  for (const auto& [key, value] : std::vector<std::pair<std::string, std::string>>{
           {"reward.alpha", "1.5"},
           {"reward.variant", "\"fancy\""},
           {"grid.subpatch_overlap", "50"},
           {"raster.side", "62"},
           {"synth.homogeneous_clusters", "maybe"}}) {
    FlatConfig c = default_config();
    c.set(key, value);
    EXPECT_THROW(RunConfig::from(c), ConfigError) << key;
  }
}

TEST(SceneIo, RoundTripsThroughFiles) {
  SynthConfig sc = RunConfig::from(default_config()).synth;
  sc.n_scenes = 3;
  const auto scenes = generate(sc);
  const auto dir = temp_dir("scenes");
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& s : scenes) {
    io::write_scene((dir / (s.id + ".json")).string(), s);
    ids.push_back(s.id);
  }
  io::write_text((dir / "manifest.json").string(), nlohmann::json{{"scenes", ids}}.dump());
  const auto back = io::read_scene_dir(dir.string());
  ASSERT_EQ(back.size(), scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    EXPECT_EQ(back[i].id, scenes[i].id);
    EXPECT_EQ(back[i].ground_truth, scenes[i].ground_truth);
  }
  EXPECT_THROW(io::scene_from_json(nlohmann::json{{"id", "x"}}), ConfigError);
  EXPECT_THROW(io::read_json_file((dir / "absent.json").string()), LookupError);
}

TEST(ModelIo, RoundTripIsExact) {
  PolicyModel m = PolicyModel::create({12, 7, 5, 3}, 4);
  m.trained_for = "cpnet";
  const auto dir = temp_dir("models");
  const auto path = (dir / "m.json").string();
  io::write_model(path, m, nlohmann::json{{"seed", 4}});
  const PolicyModel back = io::read_model(path);
  EXPECT_EQ(back.layer_dims(), m.layer_dims());
  EXPECT_EQ(back.trained_for, "cpnet");
  for (std::size_t l = 0; l < m.layers().size(); ++l) {
    EXPECT_EQ(back.layers()[l].weights, m.layers()[l].weights);
    EXPECT_EQ(back.layers()[l].biases, m.layers()[l].biases);
  }
  EXPECT_EQ(io::read_json_file(path).at("effective_config").at("seed"), 4);
  auto doc = io::model_to_json(m);
  doc["format_version"] = 2;
  EXPECT_THROW(io::model_from_json(doc), ConfigError);
}

TEST(Pgm, HeaderAndPixels) {
  const RasterObservation r{2, 1, {0.0, 1.0}};
  const std::string pgm = io::to_pgm(r);
  EXPECT_EQ(pgm, std::string("P5\n2 1\n255\n") + '\0' + '\xff');
}

TEST(DecisionMap, ShadesFineWhiteAndCoarseGrey) {
  const GridLayout g = default_grid();
  ActionPlan plan;
  plan.coarse = ActionVector::from_mask(1, 16);
  plan.fine.assign(16, ActionVector::from_mask(0b0001, 4));
  const auto img = io::decision_map(plan, g, 2);
  ASSERT_EQ(img.width, 16);
  EXPECT_EQ(img.pixels[0], 1.0);
  EXPECT_EQ(img.pixels[2], 128.0 / 255.0);
  int white = 0;
  for (double v : img.pixels) white += v == 1.0;
  EXPECT_EQ(white, 4);
}

TEST(ReportIo, UndefinedMetricsBecomeNull) {
  EvalReport r;
  r.policy_name = "sliding_lr";
  r.ap_percent = std::numeric_limits<double>::quiet_NaN();
  r.ar_percent = 12.5;
  const auto j = io::report_to_json(r);
  EXPECT_TRUE(j.at("ap_percent").is_null());
  EXPECT_EQ(j.at("ar_percent"), 12.5);
  EXPECT_EQ(j.at("policy_name"), "sliding_lr");
}
