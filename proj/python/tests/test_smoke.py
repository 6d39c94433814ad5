# SPDX-License-Identifier: Apache-2.0
# Copyright Contributors to the isptune project.

import math

import numpy as np
import pytest

import isptune


def test_metrics_on_identical_images():
    rng = np.random.default_rng(1)
    x = rng.random((3, 32, 32))
    assert isptune.sad(x, x) == 0.0
    assert isptune.ssim(x, x) == pytest.approx(1.0, abs=1e-9)
    assert isptune.ms_ssim(x, x) == pytest.approx(1.0, abs=1e-9)
    y = rng.random((3, 32, 32))
    assert isptune.mad_8bit(x, y) == pytest.approx(255.0 * np.abs(x - y).mean(), rel=1e-12)


def test_colour_round_trip():
    rgb = np.random.default_rng(2).random((3, 8, 8))
    assert np.allclose(isptune.yuv_to_rgb(isptune.rgb_to_yuv(rgb)), rgb, atol=1e-12)


def test_scene_capture_fusion():
    rgb, mask = isptune.synthesize_scene(isptune.default_scene_spec(64, 64), seed=3)
    assert rgb.shape == (3, 64, 64)
    assert mask.shape == (64, 64)
    burst = isptune.simulate_capture(rgb, 2e-4, 2e-6, gain=8.0, n_frames=10, seed=4)
    assert burst.shape == (10, 64, 64)
    fused = isptune.temporal_fusion(burst)
    assert np.allclose(fused, burst.mean(axis=0), atol=1e-12)
    clean = isptune.bayer_subsample(rgb)
    assert np.abs(fused - clean).std() < np.abs(burst[0] - clean).std()


def test_sharpening_reference_identity_at_zero_alpha():
    y = np.random.default_rng(5).random((24, 24))
    mask = np.zeros((24, 24))
    mask[:6, :6] = 1.0
    assert np.array_equal(isptune.sharpening_reference(y, mask, alpha=0.0), y)


def test_pipeline_passthrough_taps():
    rgb, _ = isptune.synthesize_scene(isptune.default_scene_spec(32, 32))
    mosaic = isptune.bayer_subsample(rgb)
    taps = isptune.run_pipeline(mosaic, isptune.passthrough_tuning(), 0.0, 0.0)
    assert np.array_equal(taps["BayerNR"], mosaic)
    assert taps["rgb"].shape == (3, 32, 32)
    hand = isptune.hand_proxy_tuning()
    assert hand["BayerNR"]["k_r"] == 3.0


def test_optimizers_with_python_objective():
    sphere = lambda x: sum((v - 0.3) ** 2 for v in x)
    r = isptune.two_stage(sphere, 2, population=10, total_evals=600, seed=1)
    assert r["best_f"] < 1e-4
    assert r["evals_used"] <= 600
    trace = [f for _, f in r["trace"]]
    assert all(b <= a for a, b in zip(trace, trace[1:]))
    local = isptune.local_optimize(sphere, [0.9, 0.9], max_evals=500, local_method="nelder_mead")
    assert math.isclose(local["best"][0], 0.3, abs_tol=1e-3)


def test_small_ladder_and_reports():
    cfg = isptune.default_config()
    cfg.update(scene_width=40, scene_height=40, burst_size=3, gains=[1.0, 2.0], blocks=["BayerNR"])
    cfg.pop("gain_labels", None)
    cfg["optim"] = {"all": {"abc": {"population": 6, "max_evals": 60}, "local": {"max_evals": 60}, "total_evals": 60}}
    ladder = isptune.tune_ladder(cfg)
    assert len(ladder["gains"]) == 2
    assert isptune.tune_ladder(cfg) == ladder
    assert isptune.smoothness(ladder).startswith("param,")
    assert isptune.evaluate(cfg, 1, ladder["gains"][1]["tuning"]).startswith("block,tuning,MAD,SSIM,MS-SSIM")


def test_errors_are_translated():
    cfg = isptune.default_config()
    cfg["gains"] = [4.0, 2.0]
    with pytest.raises(isptune.IsptuneError):
        isptune.tune_ladder(cfg)
