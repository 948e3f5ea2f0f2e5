// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zoomcascade/cascade.hpp"
#include "zoomcascade/config.hpp"
#include "zoomcascade/errors.hpp"
#include "zoomcascade/io.hpp"
#include "zoomcascade/rng.hpp"
#include "zoomcascade/synth.hpp"
#include "zoomcascade/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace zoomcascade;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

// Defaults, then the config file, then --set, then dedicated flags.
FlatConfig effective_config(const GlobalOptions& g,
                            const std::vector<std::pair<std::string, std::string>>& flags) {
  FlatConfig c = default_config();
  bool file_sets_seed = false;
  if (!g.config_path.empty()) {
    const FlatConfig file = FlatConfig::load(g.config_path);
    file_sets_seed = file.has("seed");
    c.overlay(file);
  }
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) {
    c.set("seed", std::to_string(*g.seed));
  } else if (const char* env = std::getenv("ZOOMCASCADE_SEED"); env && !file_sets_seed) {
    c.set("seed", env);
  }
  if (g.threads) c.set("threads", std::to_string(*g.threads));
  for (const auto& [key, value] : flags) c.set(key, value);
  return c;
}

std::string fmt_double(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

void ensure_dir(const fs::path& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

void ensure_parent(const fs::path& file) { ensure_dir(file.parent_path()); }

std::string dump(const json& j) { return j.dump(1) + "\n"; }

int input_dim(const RunConfig& rc, Stage stage) {
  const int side = stage == Stage::cpnet ? rc.raster.side : rc.raster.side / rc.grid.patches_per_side;
  return side * side;
}

int output_dim(const RunConfig& rc, Stage stage) {
  return stage == Stage::cpnet ? rc.grid.patch_count() : rc.grid.subpatch_count();
}

// ---------------------------------------------------------------------------

int cmd_gen_scenes(const FlatConfig& cfg, const std::string& out_flag) {
  const RunConfig rc = RunConfig::from(cfg);
  const fs::path dir = out_flag.empty() ? fs::path(rc.scenes_dir) : fs::path(out_flag);
  ensure_dir(dir);
  const auto scenes = generate(rc.synth);
  json ids = json::array();
  for (const auto& s : scenes) {
    io::write_scene((dir / (s.id + ".json")).string(), s);
    ids.push_back(s.id);
  }
  const fs::path manifest = dir / "manifest.json";
  io::write_text(manifest.string(), dump({{"scenes", ids}, {"effective_config", cfg.to_json()}}));
  std::cout << manifest.string() << "\n";
  return kExitOk;
}

struct TrainPaths {
  std::string model, log, scenes;
};

int cmd_train(const FlatConfig& cfg, Stage stage, TrainPaths paths) {
  const RunConfig rc = RunConfig::from(cfg);
  const std::string name(to_string(stage));
  const fs::path models_dir(rc.models_dir);
  if (paths.model.empty()) paths.model = (models_dir / (name + ".json")).string();
  if (paths.log.empty()) paths.log = (models_dir / (name + ".log.jsonl")).string();
  if (paths.scenes.empty()) paths.scenes = rc.scenes_dir;

  const auto scenes = io::read_scene_dir(paths.scenes);
  const auto samples = build_samples(scenes, rc.grid, stage, rc.raster);
  const TrainConfig tc = rc.train_config(stage);

  // CPNet and FPNet are initialized and trained from independent streams.
  const std::uint64_t stage_key = hash_string(name);
  PolicyModel model = PolicyModel::create(default_layer_dims(input_dim(rc, stage), output_dim(rc, stage)),
                                          derive_key({rc.seed, stage_key, 1}));
  model.trained_for = name;

  ensure_parent(paths.model);
  ensure_parent(paths.log);
  std::ofstream log(paths.log, std::ios::binary | std::ios::trunc);
  if (!log) throw std::runtime_error("cannot open " + paths.log + " for writing");
  log << json{{"effective_config", cfg.to_json()}}.dump() << "\n";

  const json config_echo = cfg.to_json();
  PolicyModel last_good = model;
  const fs::path ckpt_path = fs::path(paths.model).replace_extension(".ckpt.json");
  auto on_epoch = [&](int epoch, const PolicyModel& m) {
    last_good = m;
    if (rc.checkpoint_every > 0 && (epoch + 1) % rc.checkpoint_every == 0) {
      io::write_model(ckpt_path.string(), m, config_echo);
    }
  };
  auto on_log = [&](const TrainLogRecord& r) { log << to_json_line(r) << "\n" << std::flush; };

  TrainResult result;
  try {
    result = train(model, samples, tc, rc.detectors, derive_key({rc.seed, stage_key, 2}), on_log, on_epoch);
  } catch (const TrainingDiverged& e) {
    log << to_json_line(e.record()) << "\n";
    const fs::path good = fs::path(paths.model).replace_extension(".last_good.json");
    io::write_model(good.string(), last_good, config_echo);
    std::cerr << "error: " << e.what() << "\nlast good checkpoint: " << good.string() << "\n";
    return kExitNumeric;
  }
  io::write_model(paths.model, model, config_echo);
  std::cout << "model: " << paths.model << "\n";
  std::cout << "steps: " << result.steps << "\n";
  if (result.log.empty()) {
    std::cout << "final mean reward: n/a\n";
  } else {
    std::cout << "final mean reward: " << fmt_double(result.log.back().mean_sampled_reward) << "\n";
  }
  return kExitOk;
}

struct EvalArgs {
  std::string policy, cpnet, fpnet, scenes, out;
};

int cmd_eval(const FlatConfig& cfg, EvalArgs a) {
  const RunConfig rc = RunConfig::from(cfg);
  PolicySpec spec;
  spec.kind = policy_kind_from_string(a.policy);
  spec.zoom_prob = rc.zoom_prob;
  spec.entropy_threshold_coarse = rc.entropy_threshold_coarse;
  spec.entropy_threshold_fine = rc.entropy_threshold_fine;
  const fs::path models_dir(rc.models_dir);
  if (a.cpnet.empty()) a.cpnet = (models_dir / "cpnet.json").string();
  if (a.fpnet.empty()) a.fpnet = (models_dir / "fpnet.json").string();
  json models = json::object();
  if (spec.kind == PolicyKind::cascade || spec.kind == PolicyKind::cpnet_only) {
    spec.cpnet = std::make_shared<const PolicyModel>(io::read_model(a.cpnet));
    models["cpnet"] = a.cpnet;
  }
  if (spec.kind == PolicyKind::cascade || spec.kind == PolicyKind::fpnet_only) {
    spec.fpnet = std::make_shared<const PolicyModel>(io::read_model(a.fpnet));
    models["fpnet"] = a.fpnet;
  }
  spec.validate(rc.grid);

  const auto dataset = io::read_scene_dir(a.scenes.empty() ? rc.scenes_dir : a.scenes);
  EvalOptions opt;
  opt.raster = rc.raster;
  opt.metrics = rc.metrics;
  opt.threads = rc.threads;
  const EvalReport rep = evaluate(spec, dataset, rc.grid, rc.detectors, rc.cost, opt, rc.seed);

  json doc = io::report_to_json(rep);
  doc["models"] = models;
  doc["effective_config"] = cfg.to_json();
  const fs::path out = a.out.empty() ? fs::path(rc.report_dir) / (rep.policy_name + ".json") : fs::path(a.out);
  ensure_parent(out);
  io::write_text(out.string(), dump(doc));

  char row[256];
  std::snprintf(row, sizeof row, "%s %.2f %.2f %.1f %.1f", rep.policy_name.c_str(), rep.ap_percent,
                rep.ar_percent, rep.runtime_ms_mean, rep.hr_ratio_percent);
  std::cout << row << "\n";
  return kExitOk;
}

struct DiagnoseArgs {
  std::string which;
  long samples = 100000;
  int cases = 20;
  double corrupt = 0.0;
};

int diagnose_grad(const RunConfig& rc, const DiagnoseArgs& a) {
  // Small random architectures exercise the same code paths as the full-size
  // networks at a fraction of the finite-difference cost.
  Stream rng(derive_key({rc.seed, hash_string("diagnose-grad")}));
  double worst = 0;
  std::size_t checked = 0;
  json cases = json::array();
  for (int k = 0; k < a.cases; ++k) {
    const int in = 2 + static_cast<int>(rng() % 9);
    const int out = 1 + static_cast<int>(rng() % 6);
    const std::vector<int> dims{in, 2 + static_cast<int>(rng() % 7), 2 + static_cast<int>(rng() % 5), out};
    const PolicyModel m = PolicyModel::create(dims, rng());
    std::vector<double> x(static_cast<std::size_t>(in));
    for (auto& v : x) v = rng.uniform();
    const auto action = ActionVector::from_mask(rng(), out);
    const double scale = 4.0 * rng.uniform() - 2.0;
    const double alpha = k % 2 == 0 ? 1.0 : rc.hyper.alpha;
    const auto r = grad_check(m, x, action, scale, alpha, a.corrupt);
    worst = std::max(worst, r.max_relative_error);
    checked += r.parameters_checked;
    cases.push_back({{"layer_dims", dims}, {"alpha", alpha}, {"max_relative_error", r.max_relative_error}});
  }
  constexpr double kBound = 1e-4;
  const bool pass = worst <= kBound;
  std::cout << json{{"diagnostic", "grad"},
                    {"cases", cases},
                    {"parameters_checked", checked},
                    {"max_relative_error", worst},
                    {"bound", kBound},
                    {"pass", pass}}
                   .dump()
            << "\n";
  return pass ? kExitOk : kExitCheckFailed;
}

int diagnose_mc(const RunConfig& rc, const DiagnoseArgs& a) {
  // A fresh FPNet on the busiest patch of one synthesized scene: P = 4, so
  // the exact expectation enumerates 16 actions.
  SynthConfig sc = rc.synth;
  const Scene scene = generate_scene(sc, 0);
  const auto samples = build_samples({scene}, rc.grid, Stage::fpnet, rc.raster);
  std::size_t busiest = 0, most = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::size_t n = 0;
    for (const auto& g : samples[i].tile_gt) n += g.size();
    if (n > most) most = n, busiest = i;
  }
  const PolicyModel m = PolicyModel::create(default_layer_dims(input_dim(rc, Stage::fpnet),
                                                               output_dim(rc, Stage::fpnet)),
                                            derive_key({rc.seed, hash_string("diagnose-mc")}));
  const auto r = mc_check(m, samples[busiest], rc.train_config(Stage::fpnet), rc.detectors, a.samples,
                          derive_key({rc.seed, hash_string("diagnose-mc"), 1}));
  const bool pass = r.abs_gap <= 3 * r.standard_error + 1e-12;
  std::cout << json{{"diagnostic", "mc"},
                    {"scene", scene.id},
                    {"patch", samples[busiest].patch},
                    {"samples", r.samples},
                    {"empirical_mean", r.empirical_mean},
                    {"exact_expectation", r.exact_expectation},
                    {"abs_gap", r.abs_gap},
                    {"standard_error", r.standard_error},
                    {"pass", pass}}
                   .dump()
            << "\n";
  return pass ? kExitOk : kExitCheckFailed;
}

int cmd_diagnose(const FlatConfig& cfg, const DiagnoseArgs& a) {
  const RunConfig rc = RunConfig::from(cfg);
  if (a.which == "grad") return diagnose_grad(rc, a);
  if (a.which == "mc") return diagnose_mc(rc, a);
  throw ArgumentError("unknown diagnostic '" + a.which + "' (expected grad or mc)");
}

struct VisualizeArgs {
  std::string scene, cpnet, fpnet, scenes, out;
};

int cmd_visualize(const FlatConfig& cfg, VisualizeArgs a) {
  const RunConfig rc = RunConfig::from(cfg);
  if (a.cpnet.empty()) a.cpnet = (fs::path(rc.models_dir) / "cpnet.json").string();
  const PolicyModel cpnet = io::read_model(a.cpnet);
  std::optional<PolicyModel> fpnet;
  if (!a.fpnet.empty()) fpnet = io::read_model(a.fpnet);
  if (cpnet.output_dim() != rc.grid.patch_count() ||
      (fpnet && fpnet->output_dim() != rc.grid.subpatch_count())) {
    throw ArgumentError("model outputs do not match the grid (P_c/P_f)");
  }

  const auto dataset = io::read_scene_dir(a.scenes.empty() ? rc.scenes_dir : a.scenes);
  const Scene* scene = nullptr;
  for (const auto& s : dataset) {
    if (s.id == a.scene) scene = &s;
  }
  if (!scene) throw LookupError("scene '" + a.scene + "' is not in the dataset");

  const SceneView view = make_scene_view(*scene, rc.grid, rc.raster);
  const auto probs = to_std(forward(cpnet, view.raster.view()).probs);
  ActionPlan plan;
  plan.coarse = greedy_actions(probs);
  for (int p = 0; p < rc.grid.patch_count(); ++p) {
    ActionVector f;
    if (fpnet) {
      f = greedy_actions(to_std(forward(*fpnet, crop_observation(view.raster, rc.grid, p).view()).probs));
    } else {
      f.bits.assign(static_cast<std::size_t>(rc.grid.subpatch_count()), 1);
    }
    plan.fine.push_back(f);
  }

  const fs::path dir = a.out.empty() ? fs::path(rc.report_dir) / "visualize" : fs::path(a.out);
  ensure_dir(dir);
  const std::string stem = scene->id;
  io::write_pgm((dir / (stem + ".scene.pgm")).string(), view.raster);
  io::write_pgm((dir / (stem + ".decisions.pgm")).string(), io::decision_map(plan, rc.grid));
  std::ostringstream csv;
  csv << "patch,zoom_probability,zoom\n";
  for (std::size_t p = 0; p < probs.size(); ++p) {
    csv << p << "," << probs[p] << "," << int(plan.coarse[static_cast<int>(p)]) << "\n";
  }
  io::write_text((dir / (stem + ".probs.csv")).string(), csv.str());

  const auto profile = zoom_probability_profile(cpnet, dataset, rc.grid, rc.raster,
                                                default_count_edges(), default_area_edges());
  io::write_text((dir / "profile.csv").string(), io::profile_to_csv(profile));
  json prof = io::profile_to_json(profile);
  const double rho = profile_spearman(profile.by_object_count);
  prof["spearman_object_count"] = std::isnan(rho) ? json(nullptr) : json(rho);
  io::write_text((dir / "profile.json").string(), dump(prof));

  io::write_text((dir / "visualize.json").string(),
                 dump({{"scene", scene->id},
                       {"cpnet", a.cpnet},
                       {"fpnet", fpnet ? json(a.fpnet) : json(nullptr)},
                       {"zoomed_patches", plan.coarse.ones()},
                       {"fine_subpatches", plan.fine_subpatches()},
                       {"effective_config", cfg.to_json()}}));
  std::cout << (dir / (stem + ".decisions.pgm")).string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zoomcascade: coarse-to-fine zoom policies for tiled detection"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config_path, "TOML-style config file")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Override a config key (key=value); repeatable");
  app.add_option("--seed", g.seed, "Global seed (falls back to ZOOMCASCADE_SEED)");
  app.add_option("--threads", g.threads, "Worker thread cap")->check(CLI::PositiveNumber);

  std::vector<std::pair<std::string, std::string>> flags;
  std::function<int()> action;

  auto* gen = app.add_subcommand("gen-scenes", "Generate a synthetic scene set");
  std::optional<int> count;
  std::string gen_out;
  gen->add_option("--count", count, "Number of scenes")->check(CLI::NonNegativeNumber);
  gen->add_option("--out", gen_out, "Output directory (default paths.scenes_dir)");
  gen->callback([&] {
    if (count) flags.emplace_back("synth.n_scenes", std::to_string(*count));
    action = [&] { return cmd_gen_scenes(effective_config(g, flags), gen_out); };
  });

  auto* tr = app.add_subcommand("train", "Train CPNet or FPNet");
  std::string stage_name;
  std::optional<int> epochs;
  TrainPaths tpaths;
  tr->add_option("--stage", stage_name, "cpnet or fpnet")->required();
  tr->add_option("--epochs", epochs, "Epochs for this stage")->check(CLI::NonNegativeNumber);
  tr->add_option("--scenes", tpaths.scenes, "Scene directory (default paths.scenes_dir)");
  tr->add_option("--out", tpaths.model, "Model file (default <models_dir>/<stage>.json)");
  tr->add_option("--log", tpaths.log, "JSON-lines log (default <models_dir>/<stage>.log.jsonl)");
  tr->callback([&] {
    const Stage stage = stage_from_string(stage_name);
    if (epochs) flags.emplace_back("train." + stage_name + "_epochs", std::to_string(*epochs));
    action = [&, stage] { return cmd_train(effective_config(g, flags), stage, tpaths); };
  });

  auto* ev = app.add_subcommand("eval", "Evaluate a policy and write an EvalReport");
  EvalArgs eargs;
  std::optional<double> zoom_prob;
  ev->add_option("--policy", eargs.policy,
                 "cascade|cpnet_only|fpnet_only|random|entropy|sliding_lr|sliding_hr")
      ->required();
  ev->add_option("--zoom-prob", zoom_prob, "Zoom probability of the random policy");
  ev->add_option("--cpnet", eargs.cpnet, "CPNet model (default <models_dir>/cpnet.json)");
  ev->add_option("--fpnet", eargs.fpnet, "FPNet model (default <models_dir>/fpnet.json)");
  ev->add_option("--scenes", eargs.scenes, "Scene directory (default paths.scenes_dir)");
  ev->add_option("--out", eargs.out, "Report file (default <report_dir>/<policy>.json)");
  ev->callback([&] {
    if (zoom_prob) flags.emplace_back("eval.zoom_prob", fmt_double(*zoom_prob));
    action = [&] { return cmd_eval(effective_config(g, flags), eargs); };
  });

  auto* dg = app.add_subcommand("diagnose", "Gradient or Monte-Carlo self-checks");
  DiagnoseArgs dargs;
  dg->add_option("which", dargs.which, "grad or mc")->required();
  dg->add_option("--samples", dargs.samples, "Monte-Carlo samples")->check(CLI::PositiveNumber);
  dg->add_option("--cases", dargs.cases, "Gradient-check cases")->check(CLI::PositiveNumber);
  dg->add_option("--corrupt-gradient", dargs.corrupt, "Test hook: perturb one analytic gradient entry")
      ->group("");
  dg->callback([&] { action = [&] { return cmd_diagnose(effective_config(g, flags), dargs); }; });

  auto* vz = app.add_subcommand("visualize", "Write decision-grid PGMs and zoom profiles");
  VisualizeArgs vargs;
  vz->add_option("--scene", vargs.scene, "Scene id")->required();
  vz->add_option("--cpnet", vargs.cpnet, "CPNet model (default <models_dir>/cpnet.json)");
  vz->add_option("--fpnet", vargs.fpnet, "FPNet model (optional)");
  vz->add_option("--scenes", vargs.scenes, "Scene directory (default paths.scenes_dir)");
  vz->add_option("--out", vargs.out, "Output directory (default <report_dir>/visualize)");
  vz->callback([&] { action = [&] { return cmd_visualize(effective_config(g, flags), vargs); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    return action();
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
