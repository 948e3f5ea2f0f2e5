# Copyright 2026 The zoomcascade Authors.
# SPDX-License-Identifier: Apache-2.0
import math

import pytest

import zoomcascade as zc


def test_default_config_matches_paper_values():
    cfg = zc.load_config()
    assert cfg.hyper.alpha == pytest.approx(0.8)
    assert cfg.hyper.lambda_ == pytest.approx(0.25)
    assert cfg.grid.patch_count == 16
    assert cfg.grid.subpatch_count == 4


def test_overrides_and_validation():
    cfg = zc.load_config({"reward.beta": 0.1, "synth.n_scenes": 3, "synth.homogeneous_clusters": True})
    assert cfg.hyper.beta == pytest.approx(0.1)
    assert cfg.n_scenes == 3
    with pytest.raises(ValueError):
        zc.load_config({"reward.alpha": 2.0})
    with pytest.raises(ValueError):
        zc.load_config({"reward.unknown": 1})


def test_iou_and_recall_unit_cases():
    a = zc.BBox(5, 5, 4, 4)
    b = zc.BBox(50, 50, 4, 4)
    assert zc.iou(a, a) == 1.0
    assert zc.iou(a, b) == 0.0
    hit = zc.BBox(5, 5, 4, 4, score=0.9)
    assert zc.recall([a, b], [hit], 0.5) == 0.5


def test_average_precision_perfect_detections():
    gt = [[zc.BBox(10, 10, 5, 5), zc.BBox(30, 30, 5, 5, class_id=1)]]
    det = [[zc.BBox(10, 10, 5, 5, score=0.9), zc.BBox(30, 30, 5, 5, class_id=1, score=0.8)]]
    ap, ar = zc.average_precision(gt, det)
    assert ap == pytest.approx(100.0)
    assert ar == pytest.approx(100.0)


def test_reward_and_oracle():
    outcomes = [zc.PatchOutcome(1.0, 0.25, 3), zc.PatchOutcome(0.5, 0.5, 2)]
    h = zc.Hyperparams()
    best = max(
        zc.reward(outcomes, [x, y], h) for x in (0, 1) for y in (0, 1)
    )
    assert zc.reward(outcomes, zc.oracle_policy(outcomes, h), h) == pytest.approx(best)
    assert zc.oracle_policy(outcomes, h) == [1, 0]


def test_likelihood_normalizes():
    s = [0.2, 0.7, 0.5]
    total = sum(
        math.exp(zc.log_likelihood(s, [(m >> i) & 1 for i in range(3)])) for m in range(8)
    )
    assert total == pytest.approx(1.0, abs=1e-12)


def test_policy_forward_and_gradient_check(tmp_path):
    model = zc.PolicyModel.create([6, 5, 4, 3], 7)
    raw, scaled = model.forward([0.1] * 6, alpha=0.8)
    assert len(raw) == 3
    assert all(0.1 <= p <= 0.9 for p in scaled)
    report = zc.grad_check(model, [0.3] * 6, [1, 0, 1], scale=1.5, alpha=0.8)
    assert report["max_relative_error"] <= 1e-4
    path = str(tmp_path / "m.json")
    model.save(path)
    assert zc.PolicyModel.load(path).forward([0.1] * 6)[0] == raw
    assert zc.PolicyModel.zeros([4, 3, 2, 2]).forward([1.0] * 4)[0] == [0.5, 0.5]


def test_mc_check_within_three_standard_errors():
    outcomes = [zc.PatchOutcome(0.9, 0.2, 3), zc.PatchOutcome(0.7, 0.6, 5)]
    r = zc.mc_check([0.4, 0.6], outcomes, n_samples=20000, seed=3)
    assert r["abs_gap"] <= 3 * r["standard_error"]


def test_generate_train_and_evaluate_end_to_end():
    cfg = zc.load_config({"train.batch_size": 8})
    scenes = zc.generate_scenes(cfg, n=6)
    assert [s.id for s in scenes] == [s.id for s in zc.generate_scenes(cfg, n=6)]
    assert len(scenes) == 6
    cpnet, log = zc.train_policy(cfg, scenes, "cpnet", epochs=1)
    fpnet, _ = zc.train_policy(cfg, scenes, "fpnet", epochs=1)
    assert len(log) == 1
    assert set(log[0]) >= {"mean_sampled_reward", "mean_advantage", "gradient_norm"}
    hr = zc.evaluate(cfg, scenes, "sliding_hr", zero_overhead=True)
    assert hr["runtime_ms_mean"] == 3200.0
    assert hr["hr_ratio_percent"] == 100.0
    ours = zc.evaluate(cfg, scenes, "cascade", cpnet=cpnet, fpnet=fpnet)
    again = zc.evaluate(cfg, scenes, "cascade", cpnet=cpnet, fpnet=fpnet)
    assert ours == again
    assert 0.0 <= ours["hr_ratio_percent"] <= 100.0
    rewards = zc.expected_rewards(cfg, cpnet, scenes)
    assert rewards["oracle"] >= max(rewards["random"].values()) - 1e-9
    with pytest.raises(ValueError):
        zc.evaluate(cfg, scenes, "cascade")
