"""Outlier trimming and Gaussian KDE summaries for metric distributions.

Values more than ``outlier_sigma`` population standard deviations from the
mean are removed in a single pass, moments are recomputed on the kept
values, and a Gaussian KDE (Silverman bandwidth) is evaluated on a fixed
grid. Identical-value inputs degrade to a flagged point mass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

GRID_POINTS = 256
GRID_PAD_BANDWIDTHS = 3.0


@dataclass(frozen=True)
class DistributionSummary:
    n_raw: int
    n_kept: int
    mean: float
    std: float
    bandwidth: float
    kde_grid: tuple[tuple[float, float], ...]
    point_mass: bool

    def kde_integral(self) -> float:
        if not self.kde_grid:
            return 0.0
        xs = np.array([x for x, _ in self.kde_grid])
        ys = np.array([y for _, y in self.kde_grid])
        return float(np.trapezoid(ys, xs))


def silverman_bandwidth(values: np.ndarray) -> float:
    """0.9 * min(std, IQR/1.34) * n^(-1/5), falling back to std when IQR is 0."""
    n = len(values)
    std = float(np.std(values))
    q75, q25 = np.percentile(values, [75, 25])
    iqr = float(q75 - q25)
    base = min(std, iqr / 1.34) if iqr > 0 else std
    return 0.9 * base * n ** (-0.2)


def summarize_distribution(
    values: Sequence[float],
    outlier_sigma: float = 2.0,
    grid_points: int = GRID_POINTS,
) -> DistributionSummary:
    """Trim outliers, recompute moments, and fit a KDE on the kept values."""
    if len(values) < 2:
        raise ValueError("need at least two values to summarize")
    raw = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(raw)):
        raise ValueError("values must be finite")

    mean0 = float(raw.mean())
    std0 = float(raw.std())
    if std0 == 0.0:
        # all identical: nothing to trim, flagged point mass
        return DistributionSummary(
            n_raw=len(raw),
            n_kept=len(raw),
            mean=mean0,
            std=0.0,
            bandwidth=0.0,
            kde_grid=(),
            point_mass=True,
        )

    kept = raw[np.abs(raw - mean0) < outlier_sigma * std0]
    mean = float(kept.mean())
    std = float(kept.std())
    if std == 0.0:
        return DistributionSummary(
            n_raw=len(raw),
            n_kept=len(kept),
            mean=mean,
            std=0.0,
            bandwidth=0.0,
            kde_grid=(),
            point_mass=True,
        )

    h = silverman_bandwidth(kept)
    xs = np.linspace(
        float(kept.min()) - GRID_PAD_BANDWIDTHS * h,
        float(kept.max()) + GRID_PAD_BANDWIDTHS * h,
        grid_points,
    )
    # mean of N(x; v, h) over kept values, evaluated on the grid
    z = (xs[:, None] - kept[None, :]) / h
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (len(kept) * h * np.sqrt(2 * np.pi))
    grid = tuple((float(x), float(d)) for x, d in zip(xs, dens))
    return DistributionSummary(
        n_raw=len(raw),
        n_kept=int(len(kept)),
        mean=mean,
        std=std,
        bandwidth=float(h),
        kde_grid=grid,
        point_mass=False,
    )
