"""Generation-vs-training GPU-hour arithmetic with reference presets.

Costs are linear: generating T tokens at R tokens per GPU-hour costs T/R
GPU-hours, and training T tokens on a cluster that sustains S tokens per
second across G GPUs costs (T/S)/3600*G GPU-hours. The bundled
``paper-mistral7b`` preset carries the published throughput figures it was
derived from; the published *cost* round figures do not match the
arithmetic on those throughputs, so reports print both rather than forcing
agreement (the reported training figure additionally admits two readings,
a flat "about 6k" and 256 cluster-days / 64 GPUs * 24 h = 6144).
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class ThroughputPreset:
    name: str
    generation_tokens_per_gpu_hour: float
    training_tokens_per_second: float
    training_gpus: int
    reported_generation_gpu_hours: Optional[float] = None
    reported_training_gpu_hours: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("preset name must be non-empty")
        if self.generation_tokens_per_gpu_hour <= 0:
            raise ValueError("generation rate must be positive")
        if self.training_tokens_per_second <= 0:
            raise ValueError("training rate must be positive")
        if self.training_gpus < 1:
            raise ValueError("training_gpus must be >= 1")


PRESETS: dict[str, ThroughputPreset] = {
    "paper-mistral7b": ThroughputPreset(
        name="paper-mistral7b",
        generation_tokens_per_gpu_hour=3e6,
        training_tokens_per_second=0.5e6,
        training_gpus=64,
        reported_generation_gpu_hours=25_000.0,
        reported_training_gpu_hours=(6_000.0, 6_144.0),
    ),
}


def get_preset(name: str) -> ThroughputPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None


def generation_gpu_hours(tokens: float, rate: float) -> float:
    """GPU-hours to generate ``tokens`` at ``rate`` tokens per GPU-hour."""
    if tokens < 0:
        raise ValueError("tokens must be >= 0")
    if rate <= 0:
        raise ValueError("rate must be positive")
    return tokens / rate


def training_gpu_hours(tokens: float, cluster_rate: float, gpus: int) -> float:
    """GPU-hours to train on ``tokens`` at ``cluster_rate`` tokens/s over ``gpus``."""
    if tokens < 0:
        raise ValueError("tokens must be >= 0")
    if cluster_rate <= 0:
        raise ValueError("cluster_rate must be positive")
    if gpus < 1:
        raise ValueError("gpus must be >= 1")
    return tokens / cluster_rate / SECONDS_PER_HOUR * gpus


@dataclass(frozen=True)
class BreakevenReport:
    preset: ThroughputPreset
    gen_tokens: float
    train_tokens: float
    generation_hours: float
    training_hours: float
    ratio: float  # generation cost over training cost
    note: str = (
        "generation is a one-time cost: a rephrased corpus is reusable "
        "across training runs, so the overhead amortizes"
    )

    def to_json_dict(self) -> dict:
        payload = {
            "preset": self.preset.name,
            "gen_tokens": self.gen_tokens,
            "train_tokens": self.train_tokens,
            "generation_gpu_hours": self.generation_hours,
            "training_gpu_hours": self.training_hours,
            "generation_over_training_ratio": self.ratio,
            "note": self.note,
        }
        reported = self.preset.reported_generation_gpu_hours
        if reported is not None:
            payload["reported_generation_gpu_hours"] = reported
            payload["generation_vs_reported_pct"] = (
                (self.generation_hours - reported) / reported * 100.0
            )
        if self.preset.reported_training_gpu_hours:
            payload["reported_training_gpu_hours"] = list(
                self.preset.reported_training_gpu_hours
            )
        return payload

    def to_text(self) -> str:
        lines = [
            f"preset: {self.preset.name}",
            f"generation: {self.gen_tokens:.6g} tokens -> {self.generation_hours:,.1f} gpu-hours",
            f"training:   {self.train_tokens:.6g} tokens -> {self.training_hours:,.1f} gpu-hours",
            f"ratio (generation / training): {self.ratio:.6g}",
        ]
        reported = self.preset.reported_generation_gpu_hours
        if reported is not None:
            pct = (self.generation_hours - reported) / reported * 100.0
            lines.append(
                f"reference generation figure: {reported:,.0f} gpu-hours "
                f"(computed value differs by {pct:+.1f}%)"
            )
        if self.preset.reported_training_gpu_hours:
            readings = ", ".join(f"{v:,.0f}" for v in self.preset.reported_training_gpu_hours)
            lines.append(f"reference training figures: {readings} gpu-hours")
        lines.append(f"note: {self.note}")
        return "\n".join(lines) + "\n"


def breakeven_report(
    gen_tokens: float,
    train_tokens: float,
    preset: ThroughputPreset,
) -> BreakevenReport:
    gen_hours = generation_gpu_hours(gen_tokens, preset.generation_tokens_per_gpu_hour)
    train_hours = training_gpu_hours(
        train_tokens, preset.training_tokens_per_second, preset.training_gpus
    )
    if train_hours > 0:
        ratio = gen_hours / train_hours
    else:
        ratio = 0.0 if gen_hours == 0 else math.inf
    return BreakevenReport(
        preset=preset,
        gen_tokens=gen_tokens,
        train_tokens=train_tokens,
        generation_hours=gen_hours,
        training_hours=train_hours,
        ratio=ratio,
    )


def save_presets(path: Union[str, Path], presets: dict[str, ThroughputPreset]) -> None:
    parser = configparser.ConfigParser()
    for name, preset in presets.items():
        section = f"preset.{name}"
        parser[section] = {
            "generation_tokens_per_gpu_hour": repr(preset.generation_tokens_per_gpu_hour),
            "training_tokens_per_second": repr(preset.training_tokens_per_second),
            "training_gpus": str(preset.training_gpus),
        }
        if preset.reported_generation_gpu_hours is not None:
            parser[section]["reported_generation_gpu_hours"] = repr(
                preset.reported_generation_gpu_hours
            )
        if preset.reported_training_gpu_hours:
            parser[section]["reported_training_gpu_hours"] = " ".join(
                repr(v) for v in preset.reported_training_gpu_hours
            )
    with open(path, "w", encoding="utf-8") as handle:
        parser.write(handle)


def load_presets(path: Union[str, Path]) -> dict[str, ThroughputPreset]:
    parser = configparser.ConfigParser()
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise FileNotFoundError(path)
    presets: dict[str, ThroughputPreset] = {}
    for section in parser.sections():
        if not section.startswith("preset."):
            raise ValueError(f"{path}: unexpected section [{section}]")
        name = section[len("preset."):]
        block = parser[section]
        reported_train = tuple(
            float(v) for v in block.get("reported_training_gpu_hours", "").split()
        )
        reported_gen = block.get("reported_generation_gpu_hours")
        presets[name] = ThroughputPreset(
            name=name,
            generation_tokens_per_gpu_hour=float(block["generation_tokens_per_gpu_hour"]),
            training_tokens_per_second=float(block["training_tokens_per_second"]),
            training_gpus=int(block["training_gpus"]),
            reported_generation_gpu_hours=(
                float(reported_gen) if reported_gen is not None else None
            ),
            reported_training_gpu_hours=reported_train,
        )
    if not presets:
        raise ValueError(f"{path}: no presets found")
    return presets
