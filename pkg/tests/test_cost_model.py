"""Cost arithmetic oracles: hand division, exact linearity, preset round trips."""

import math
import random

import pytest

from wrap_forge.cost_model import (
    PRESETS,
    ThroughputPreset,
    breakeven_report,
    generation_gpu_hours,
    get_preset,
    load_presets,
    save_presets,
    training_gpu_hours,
)


def test_generation_hand_values():
    # 85e9 / 3e6 = 85000/3 = 28333.33...
    assert generation_gpu_hours(85e9, 3e6) == pytest.approx(85000 / 3, rel=1e-12)
    assert generation_gpu_hours(0, 3e6) == 0.0
    assert generation_gpu_hours(3e6, 3e6) == 1.0


def test_training_hand_values():
    # 300e9 tokens / 0.5e6 tok/s = 600000 s = 500/3 h; x64 gpus = 32000/3
    assert training_gpu_hours(300e9, 0.5e6, 64) == pytest.approx(32000 / 3, rel=1e-12)
    assert training_gpu_hours(0, 0.5e6, 64) == 0.0
    # 1.8e9 / 0.5e6 = 3600 s = 1 h wall clock on 64 gpus
    assert training_gpu_hours(1.8e9, 0.5e6, 64) == 64.0


def test_input_validation():
    with pytest.raises(ValueError):
        generation_gpu_hours(-1, 3e6)
    with pytest.raises(ValueError):
        generation_gpu_hours(10, 0)
    with pytest.raises(ValueError):
        training_gpu_hours(10, -1, 4)
    with pytest.raises(ValueError):
        training_gpu_hours(10, 1e6, 0)


def test_linearity_is_exact():
    rng = random.Random(20240818)
    for _ in range(200):
        tokens = rng.uniform(1, 1e12)
        rate = rng.uniform(1e3, 1e7)
        assert generation_gpu_hours(2 * tokens, rate) == 2 * generation_gpu_hours(tokens, rate)
        gpus = rng.randint(1, 512)
        cluster = rng.uniform(1e3, 1e7)
        assert training_gpu_hours(2 * tokens, cluster, gpus) == 2 * training_gpu_hours(
            tokens, cluster, gpus
        )


def test_reference_preset_report():
    report = breakeven_report(85e9, 300e9, get_preset("paper-mistral7b"))
    assert report.generation_hours == pytest.approx(28333.333333333332, rel=1e-12)
    assert report.training_hours == pytest.approx(10666.666666666666, rel=1e-12)
    assert report.ratio == pytest.approx(85 / 32, rel=1e-12)  # 2.65625
    payload = report.to_json_dict()
    assert payload["reported_generation_gpu_hours"] == 25000.0
    assert payload["generation_vs_reported_pct"] == pytest.approx(
        (85000 / 3 - 25000) / 25000 * 100, rel=1e-12
    )
    assert payload["reported_training_gpu_hours"] == [6000.0, 6144.0]
    text = report.to_text()
    assert "25,000" in text
    assert "6,144" in text
    assert "one-time" in text


def test_ratio_edge_cases():
    preset = get_preset("paper-mistral7b")
    assert breakeven_report(0, 300e9, preset).ratio == 0.0
    assert breakeven_report(0, 0, preset).ratio == 0.0
    assert math.isinf(breakeven_report(10, 0, preset).ratio)


def test_contrived_equality_gives_ratio_one():
    # generation rate 3.6e6 tok/gpu-h equals 1000 tok/s on 1 gpu
    preset = ThroughputPreset(
        name="flat",
        generation_tokens_per_gpu_hour=3.6e6,
        training_tokens_per_second=1000.0,
        training_gpus=1,
    )
    report = breakeven_report(5e9, 5e9, preset)
    assert report.generation_hours == report.training_hours
    assert report.ratio == 1.0


def test_preset_validation():
    with pytest.raises(ValueError):
        ThroughputPreset("x", 0, 1, 1)
    with pytest.raises(ValueError):
        ThroughputPreset("x", 1, -2, 1)
    with pytest.raises(ValueError):
        ThroughputPreset("x", 1, 1, 0)
    with pytest.raises(ValueError, match="unknown preset"):
        get_preset("nope")


def test_presets_round_trip_through_config(tmp_path):
    path = tmp_path / "presets.ini"
    extra = {
        "tiny": ThroughputPreset(
            name="tiny",
            generation_tokens_per_gpu_hour=1234.5,
            training_tokens_per_second=6.75,
            training_gpus=2,
        ),
    }
    save_presets(path, {**PRESETS, **extra})
    loaded = load_presets(path)
    assert loaded == {**PRESETS, **extra}


def test_load_presets_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_presets(tmp_path / "missing.ini")
    bad = tmp_path / "bad.ini"
    bad.write_text("[other]\nx = 1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="unexpected section"):
        load_presets(bad)
    empty = tmp_path / "empty.ini"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(ValueError, match="no presets"):
        load_presets(empty)
