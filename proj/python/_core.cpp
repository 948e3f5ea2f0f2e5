// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zoomcascade/cascade.hpp"
#include "zoomcascade/config.hpp"
#include "zoomcascade/errors.hpp"
#include "zoomcascade/io.hpp"
#include "zoomcascade/metrics.hpp"
#include "zoomcascade/rng.hpp"
#include "zoomcascade/synth.hpp"
#include "zoomcascade/trainer.hpp"

namespace py = pybind11;
using namespace zoomcascade;

namespace {

ActionVector to_action(const std::vector<int>& bits) {
  ActionVector a;
  for (int b : bits) a.bits.push_back(b ? 1 : 0);
  return a;
}

std::vector<int> from_action(const ActionVector& a) { return {a.bits.begin(), a.bits.end()}; }

RunConfig run_config_from(const std::vector<std::pair<std::string, std::string>>& raw) {
  FlatConfig c = default_config();
  for (const auto& [k, v] : raw) c.set(k, v);
  return RunConfig::from(c);
}

py::dict log_to_dict(const TrainLogRecord& r) {
  py::dict d;
  d["epoch"] = r.epoch;
  d["step"] = r.step;
  d["mean_sampled_reward"] = r.mean_sampled_reward;
  d["mean_baseline_reward"] = r.mean_baseline_reward;
  d["mean_advantage"] = r.mean_advantage;
  d["mean_zoom_fraction"] = r.mean_zoom_fraction;
  d["gradient_norm"] = r.gradient_norm;
  return d;
}

std::pair<PolicyModel, py::list> train_policy(const RunConfig& rc, const std::vector<Scene>& scenes,
                                              const std::string& stage_name, std::optional<std::uint64_t> seed,
                                              std::optional<int> epochs) {
  const Stage stage = stage_from_string(stage_name);
  const std::uint64_t s = seed.value_or(rc.seed);
  const int side = stage == Stage::cpnet ? rc.raster.side : rc.raster.side / rc.grid.patches_per_side;
  const int outputs = stage == Stage::cpnet ? rc.grid.patch_count() : rc.grid.subpatch_count();
  PolicyModel model = PolicyModel::create(default_layer_dims(side * side, outputs),
                                          derive_key({s, hash_string(stage_name), 1}));
  model.trained_for = stage_name;
  TrainConfig tc = rc.train_config(stage);
  if (epochs) tc.hyper.epochs = *epochs;
  TrainResult result;
  {
    py::gil_scoped_release release;
    const auto samples = build_samples(scenes, rc.grid, stage, rc.raster);
    result = train(model, samples, tc, rc.detectors, derive_key({s, hash_string(stage_name), 2}));
  }
  py::list log;
  for (const auto& r : result.log) log.append(log_to_dict(r));
  return {std::move(model), log};
}

py::dict evaluate_policy(const RunConfig& rc, const std::vector<Scene>& scenes, const std::string& policy,
                         std::optional<PolicyModel> cpnet, std::optional<PolicyModel> fpnet,
                         std::optional<double> zoom_prob, std::optional<std::uint64_t> seed,
                         bool zero_overhead) {
  PolicySpec spec;
  spec.kind = policy_kind_from_string(policy);
  spec.zoom_prob = zoom_prob.value_or(rc.zoom_prob);
  spec.entropy_threshold_coarse = rc.entropy_threshold_coarse;
  spec.entropy_threshold_fine = rc.entropy_threshold_fine;
  if (cpnet) spec.cpnet = std::make_shared<const PolicyModel>(std::move(*cpnet));
  if (fpnet) spec.fpnet = std::make_shared<const PolicyModel>(std::move(*fpnet));
  EvalOptions opt;
  opt.raster = rc.raster;
  opt.metrics = rc.metrics;
  opt.threads = rc.threads;
  const CostModel cost = zero_overhead ? CostModel::zero_overhead() : rc.cost;
  EvalReport rep;
  {
    py::gil_scoped_release release;
    rep = evaluate(spec, scenes, rc.grid, rc.detectors, cost, opt, seed.value_or(rc.seed));
  }
  return py::module_::import("json").attr("loads")(io::report_to_json(rep).dump());
}

py::dict expected_rewards(const RunConfig& rc, const PolicyModel& cpnet, const std::vector<Scene>& scenes) {
  const auto samples = build_samples(scenes, rc.grid, Stage::cpnet, rc.raster);
  double learned = 0, oracle = 0;
  std::vector<double> ps{0, 0.25, 0.5, 0.75, 1}, random(ps.size(), 0.0);
  for (const auto& s : samples) {
    learned += greedy_expected_reward(cpnet, s, rc.hyper, rc.variant, rc.detectors);
    oracle += oracle_expected_reward(s, rc.hyper, rc.variant, rc.detectors);
    for (std::size_t k = 0; k < ps.size(); ++k) {
      random[k] += random_expected_reward(s, ps[k], rc.hyper, rc.variant, rc.detectors);
    }
  }
  const double n = static_cast<double>(samples.size());
  py::dict d, r;
  d["learned"] = learned / n;
  d["oracle"] = oracle / n;
  for (std::size_t k = 0; k < ps.size(); ++k) r[py::float_(ps[k])] = random[k] / n;
  d["random"] = r;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "zoomcascade core bindings";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<LookupError>(m, "LookupError", PyExc_LookupError);
  py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError", PyExc_ArithmeticError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<BBox>(m, "BBox")
      .def(py::init([](double cx, double cy, double w, double h, int class_id, std::optional<double> score) {
             return BBox{cx, cy, w, h, class_id, score};
           }),
           py::arg("cx"), py::arg("cy"), py::arg("w"), py::arg("h"), py::arg("class_id") = 0,
           py::arg("score") = py::none())
      .def_readwrite("cx", &BBox::cx)
      .def_readwrite("cy", &BBox::cy)
      .def_readwrite("w", &BBox::w)
      .def_readwrite("h", &BBox::h)
      .def_readwrite("class_id", &BBox::class_id)
      .def_readwrite("score", &BBox::score)
      .def("__eq__", [](const BBox& a, const BBox& b) { return a == b; })
      .def("__repr__", [](const BBox& b) {
        return "BBox(cx=" + std::to_string(b.cx) + ", cy=" + std::to_string(b.cy) + ", w=" + std::to_string(b.w) +
               ", h=" + std::to_string(b.h) + ", class_id=" + std::to_string(b.class_id) + ")";
      });

  py::class_<Scene>(m, "Scene")
      .def(py::init<>())
      .def_readwrite("id", &Scene::id)
      .def_readwrite("width", &Scene::width)
      .def_readwrite("height", &Scene::height)
      .def_readwrite("ground_truth", &Scene::ground_truth);

  py::class_<GridLayout>(m, "GridLayout")
      .def_readonly("scene_side", &GridLayout::scene_side)
      .def_readonly("patch_size", &GridLayout::patch_size)
      .def_readonly("subpatch_size", &GridLayout::subpatch_size)
      .def_readonly("subpatch_overlap", &GridLayout::subpatch_overlap)
      .def_property_readonly("patch_count", &GridLayout::patch_count)
      .def_property_readonly("subpatch_count", &GridLayout::subpatch_count)
      .def_property_readonly("total_subpatches", &GridLayout::total_subpatches);
  m.def("build_grid", &build_grid, py::arg("scene_side"), py::arg("patch_size"), py::arg("subpatch_size"),
        py::arg("subpatch_overlap"));
  m.def("default_grid", &default_grid);

  m.def("iou", &iou);
  m.def("recall", [](const std::vector<BBox>& gt, const std::vector<BBox>& det, double thr) {
    return recall(gt, det, thr);
  }, py::arg("gt"), py::arg("det"), py::arg("threshold") = 0.5);
  m.def("average_precision",
        [](const std::vector<std::vector<BBox>>& gt, const std::vector<std::vector<BBox>>& det,
           std::optional<std::vector<double>> thresholds) {
          MetricConfig cfg;
          if (thresholds) cfg.iou_thresholds = *thresholds;
          cfg.validate();
          const auto r = average_precision(gt, det, cfg);
          return std::make_pair(r.ap_percent, r.ar_percent);
        },
        py::arg("gt_by_scene"), py::arg("det_by_scene"), py::arg("iou_thresholds") = py::none(),
        "Returns (AP%, AR%) averaged over classes and IoU thresholds.");

  py::class_<DetectorConfig>(m, "DetectorConfig")
      .def_readwrite("char_size", &DetectorConfig::char_size)
      .def_readwrite("steepness", &DetectorConfig::steepness)
      .def_readwrite("loc_noise", &DetectorConfig::loc_noise)
      .def_readwrite("fp_rate", &DetectorConfig::fp_rate);
  py::class_<DetectorPair>(m, "DetectorPair")
      .def_static("defaults", &DetectorPair::defaults)
      .def_readwrite("coarse", &DetectorPair::coarse)
      .def_readwrite("fine", &DetectorPair::fine);
  m.def("detection_probability", &detection_probability);
  m.def("expected_recall", [](const DetectorConfig& c, const std::vector<BBox>& gt) {
    return expected_recall(c, gt);
  });

  py::enum_<RewardVariant>(m, "RewardVariant")
      .value("combined", RewardVariant::combined)
      .value("ablation", RewardVariant::ablation);
  py::class_<Hyperparams>(m, "Hyperparams")
      .def(py::init<>())
      .def_readwrite("alpha", &Hyperparams::alpha)
      .def_readwrite("beta", &Hyperparams::beta)
      .def_readwrite("sigma", &Hyperparams::sigma)
      .def_readwrite("lambda_", &Hyperparams::lambda)
      .def_readwrite("learning_rate", &Hyperparams::learning_rate)
      .def_readwrite("batch_size", &Hyperparams::batch_size)
      .def_readwrite("epochs", &Hyperparams::epochs);
  py::class_<PatchOutcome>(m, "PatchOutcome")
      .def(py::init([](double fine, double coarse, int n) { return PatchOutcome{fine, coarse, n}; }),
           py::arg("recall_fine"), py::arg("recall_coarse"), py::arg("n_objects"))
      .def_readwrite("recall_fine", &PatchOutcome::recall_fine)
      .def_readwrite("recall_coarse", &PatchOutcome::recall_coarse)
      .def_readwrite("n_objects", &PatchOutcome::n_objects);
  m.def("reward", [](const std::vector<PatchOutcome>& o, const std::vector<int>& a, const Hyperparams& h,
                     RewardVariant v) { return reward_for(v, o, to_action(a), h).total; },
        py::arg("outcomes"), py::arg("actions"), py::arg("hyper") = Hyperparams{},
        py::arg("variant") = RewardVariant::combined);
  m.def("oracle_policy", [](const std::vector<PatchOutcome>& o, const Hyperparams& h, RewardVariant v) {
    return from_action(oracle_policy(o, h, static_cast<int>(o.size()), v));
  }, py::arg("outcomes"), py::arg("hyper") = Hyperparams{}, py::arg("variant") = RewardVariant::combined);
  m.def("log_likelihood", [](const std::vector<double>& s, const std::vector<int>& a) {
    return log_likelihood(s, to_action(a));
  });

  py::class_<PolicyModel>(m, "PolicyModel")
      .def_static("create", &PolicyModel::create, py::arg("layer_dims"), py::arg("seed"))
      .def_static("zeros", &PolicyModel::zeros, py::arg("layer_dims"))
      .def_static("load", &io::read_model, py::arg("path"))
      .def("save", [](const PolicyModel& mdl, const std::string& path) { io::write_model(path, mdl); })
      .def_property_readonly("layer_dims", &PolicyModel::layer_dims)
      .def_property_readonly("parameter_count", &PolicyModel::parameter_count)
      .def_readwrite("trained_for", &PolicyModel::trained_for)
      .def("forward", [](const PolicyModel& mdl, const std::vector<double>& x, double alpha) {
        const auto c = forward(mdl, x, alpha);
        return std::make_pair(to_std(c.probs), to_std(c.policy_probs));
      }, py::arg("observation"), py::arg("alpha") = 1.0,
      "Returns (raw probabilities, temperature-scaled probabilities).");
  m.def("default_layer_dims", &default_layer_dims);

  py::class_<CostModel>(m, "CostModel")
      .def(py::init<>())
      .def_readwrite("t_coarse_ms", &CostModel::t_coarse_ms)
      .def_readwrite("t_fine_ms", &CostModel::t_fine_ms)
      .def_readwrite("t_cpnet_ms", &CostModel::t_cpnet_ms)
      .def_readwrite("t_fpnet_ms", &CostModel::t_fpnet_ms);

  py::class_<RunConfig>(m, "RunConfig")
      .def_readonly("seed", &RunConfig::seed)
      .def_readonly("grid", &RunConfig::grid)
      .def_readonly("hyper", &RunConfig::hyper)
      .def_readonly("detectors", &RunConfig::detectors)
      .def_readonly("cost", &RunConfig::cost)
      .def_readonly("cpnet_epochs", &RunConfig::cpnet_epochs)
      .def_readonly("fpnet_epochs", &RunConfig::fpnet_epochs)
      .def_property_readonly("raster_side", [](const RunConfig& r) { return r.raster.side; })
      .def_property_readonly("n_scenes", [](const RunConfig& r) { return r.synth.n_scenes; });
  m.def("_run_config", &run_config_from, py::arg("raw_pairs"));
  m.def("default_config_text", [] { return std::string(default_config_text()); });

  m.def("generate_scenes", [](const RunConfig& rc, std::optional<int> n, int first) {
    SynthConfig sc = rc.synth;
    std::vector<Scene> out;
    const int count = n.value_or(sc.n_scenes);
    py::gil_scoped_release release;
    for (int i = first; i < first + count; ++i) out.push_back(generate_scene(sc, i));
    return out;
  }, py::arg("config"), py::arg("n") = py::none(), py::arg("first") = 0);
  m.def("train_policy", &train_policy, py::arg("config"), py::arg("scenes"), py::arg("stage"),
        py::arg("seed") = py::none(), py::arg("epochs") = py::none(),
        "Trains a fresh CPNet or FPNet; returns (model, log records).");
  m.def("evaluate", &evaluate_policy, py::arg("config"), py::arg("scenes"), py::arg("policy"),
        py::arg("cpnet") = py::none(), py::arg("fpnet") = py::none(), py::arg("zoom_prob") = py::none(),
        py::arg("seed") = py::none(), py::arg("zero_overhead") = false);
  m.def("expected_rewards", &expected_rewards, py::arg("config"), py::arg("cpnet"), py::arg("scenes"),
        "Mean expected reward of the greedy CPNet, the oracle and random policies.");

  m.def("grad_check", [](const PolicyModel& mdl, const std::vector<double>& x, const std::vector<int>& a,
                         double scale, double alpha) {
    const auto r = grad_check(mdl, x, to_action(a), scale, alpha);
    py::dict d;
    d["max_relative_error"] = r.max_relative_error;
    d["max_abs_error"] = r.max_abs_error;
    d["parameters_checked"] = r.parameters_checked;
    return d;
  }, py::arg("model"), py::arg("observation"), py::arg("actions"), py::arg("scale") = 1.0,
     py::arg("alpha") = 1.0);
  m.def("mc_check", [](const std::vector<double>& probs, const std::vector<PatchOutcome>& o,
                       const Hyperparams& h, RewardVariant v, long n, std::uint64_t seed) {
    const auto r = mc_check(probs, o, h, v, n, seed);
    py::dict d;
    d["empirical_mean"] = r.empirical_mean;
    d["exact_expectation"] = r.exact_expectation;
    d["abs_gap"] = r.abs_gap;
    d["standard_error"] = r.standard_error;
    d["samples"] = r.samples;
    return d;
  }, py::arg("probs"), py::arg("outcomes"), py::arg("hyper") = Hyperparams{},
     py::arg("variant") = RewardVariant::combined, py::arg("n_samples") = 100000, py::arg("seed") = 1);
}
