# Copyright 2026 The zoomcascade Authors.
# SPDX-License-Identifier: Apache-2.0
"""Coarse-to-fine zoom policies for tiled object detection."""

from ._core import (
    ArgumentError,
    BBox,
    ConfigError,
    CostModel,
    DetectorConfig,
    DetectorPair,
    GridLayout,
    Hyperparams,
    LookupError,
    NumericError,
    PatchOutcome,
    PolicyModel,
    RewardVariant,
    RunConfig,
    Scene,
    UndefinedMetricError,
    average_precision,
    build_grid,
    default_config_text,
    default_grid,
    default_layer_dims,
    detection_probability,
    evaluate,
    expected_recall,
    expected_rewards,
    generate_scenes,
    grad_check,
    iou,
    log_likelihood,
    mc_check,
    oracle_policy,
    recall,
    reward,
    train_policy,
)
from ._core import _run_config

__all__ = [name for name in dir() if not name.startswith("_")] + ["load_config"]


def _raw(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(repr(float(v)) for v in value) + "]"
    return repr(value)


def load_config(overrides=None):
    """Default run configuration with dotted-key overrides, e.g. {"reward.beta": 0.1}."""
    pairs = [(key, _raw(value)) for key, value in (overrides or {}).items()]
    return _run_config(pairs)
