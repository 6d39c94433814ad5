# SPDX-License-Identifier: Apache-2.0
# Copyright Contributors to the isptune project.
"""Automatic per-block ISP tuning on synthetic references.

Images are float64 numpy arrays in [0, 1]: (C, H, W) for colour, (H, W) for
single planes and Bayer mosaics, (N, H, W) for bursts. Configurations,
tunings and ladders are plain dicts with the same layout as the CLI's JSON.
"""

import json

from . import _core
from ._core import (
    IsptuneError,
    abc_optimize,
    bayer_subsample,
    calibrate_noise_model,
    local_optimize,
    mad_8bit,
    ms_ssim,
    rgb_to_yuv,
    sad,
    sharpening_reference,
    simulate_capture,
    ssim,
    temporal_fusion,
    two_stage,
    yuv_to_rgb,
)

__all__ = [
    "IsptuneError",
    "abc_optimize",
    "bayer_subsample",
    "calibrate_noise_model",
    "default_config",
    "default_scene_spec",
    "evaluate",
    "hand_proxy_tuning",
    "local_optimize",
    "mad_8bit",
    "ms_ssim",
    "passthrough_tuning",
    "repeatability",
    "rgb_to_yuv",
    "run_pipeline",
    "sad",
    "sharpening_reference",
    "simulate_capture",
    "smoothness",
    "ssim",
    "synthesize_scene",
    "temporal_fusion",
    "tune_ladder",
    "tune_pipeline",
    "two_stage",
    "yuv_to_rgb",
]


def default_config():
    return json.loads(_core.default_config())


def default_scene_spec(width=128, height=128):
    return json.loads(_core.default_scene_spec(width, height))


def synthesize_scene(spec=None, seed=0):
    """Returns (rgb, flat_mask)."""
    return _core.synthesize_scene(json.dumps(spec) if spec else "", seed)


def hand_proxy_tuning():
    return json.loads(_core.hand_proxy_tuning())


def passthrough_tuning():
    return json.loads(_core.passthrough_tuning())


def run_pipeline(mosaic, tuning, a, b, gain=1.0, pattern="RGGB"):
    """Returns every block tap plus the final "rgb"."""
    return _core.run_pipeline(mosaic, json.dumps(tuning), a, b, gain, pattern)


def tune_pipeline(config, gain_index):
    return json.loads(_core.tune_pipeline(json.dumps(config), gain_index))


def tune_ladder(config):
    return json.loads(_core.tune_ladder(json.dumps(config)))


def smoothness(ladder):
    """Adjacent-gain parameter jumps as CSV text."""
    return _core.transition_smoothness_csv(json.dumps(ladder))


def repeatability(config, runs=10):
    return _core.repeatability_csv(json.dumps(config), runs)


def evaluate(config, gain_index, tuning):
    return _core.evaluation_csv(json.dumps(config), gain_index, json.dumps(tuning))
