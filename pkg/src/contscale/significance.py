"""Segment-shuffle surrogates and the Gaussian p-value of a fitted slope."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddedSeries
from .errors import InputSizeError
from .scaling import (
    EpsilonGrid,
    NeighborhoodSpec,
    PointGeometry,
    ScalingCurve,
    curve_from_geometry,
    estimate_slope,
)

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class SurrogateConfig:
    n_segments: int = 25
    n_replicates: int = 20
    master_seed: int = 0

    def __post_init__(self):
        if self.n_segments < 1:
            raise ValueError("n_segments must be >= 1")
        if self.n_replicates < 1:
            raise ValueError("n_replicates must be >= 1")


@dataclass(frozen=True, eq=False)
class PValueResult:
    original_slope: float
    surrogate_slopes: np.ndarray
    mean: float
    std: float
    p_value: float
    curve: ScalingCurve | None = None  # curve of the original pair


def replicate_rng(master_seed: int, replicate: int, stream: int) -> np.random.Generator:
    """Independent generator for one series (``stream``) of one replicate."""
    return np.random.default_rng(np.random.SeedSequence([master_seed & _SEED_MASK, replicate, stream]))


def segment_permutation(n_points: int, n_segments: int, rng) -> np.ndarray:
    """Index order that concatenates randomly permuted consecutive blocks.

    Blocks have length ``ceil(n_points / n_segments)``; the last one takes
    whatever remains.
    """
    if n_segments < 1:
        raise ValueError("n_segments must be >= 1")
    if n_segments > n_points:
        raise InputSizeError(f"cannot cut {n_points} points into {n_segments} segments")
    rng = np.random.default_rng(rng)
    length = -(-n_points // n_segments)
    starts = np.arange(0, n_points, length)
    order = rng.permutation(starts.size)
    idx = np.arange(n_points)
    return np.concatenate([idx[s : s + length] for s in starts[order]])


def segment_shuffle(emb: EmbeddedSeries, n_segments: int, seed) -> EmbeddedSeries:
    """Surrogate with blocks of consecutive delay vectors in random order."""
    perm = segment_permutation(len(emb), n_segments, seed)
    return emb.with_points(emb.points[perm])


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def gaussian_p_value(slope: float, all_slopes) -> tuple[float, float, float]:
    """Upper-tail p-value of ``slope`` against the mean and population
    standard deviation of ``all_slopes`` (which includes ``slope``).

    Returns ``(p, mean, std)``; a zero spread gives ``p = 0.5``.
    """
    values = np.asarray(all_slopes, dtype=np.float64)
    mean = float(values.mean())
    std = float(values.std())
    # equal slopes can still leave a rounding-level std behind
    if std == 0.0 or values.min() == values.max():
        return 0.5, mean, 0.0
    z = (slope - mean) / std
    # 1 - Phi(z) without cancellation in the upper tail
    return normal_cdf(-z), mean, std


def surrogate_p_value(
    emb_u: EmbeddedSeries,
    emb_v: EmbeddedSeries,
    grid: EpsilonGrid,
    spec: NeighborhoodSpec = NeighborhoodSpec(),
    cfg: SurrogateConfig = SurrogateConfig(),
    geometry: tuple[PointGeometry, PointGeometry] | None = None,
) -> PValueResult:
    """Slope of "v drives u" and its significance against shuffled surrogates.

    Each replicate shuffles u and v with independent permutations drawn
    from streams keyed by ``(master_seed, replicate, series)``.
    ``geometry`` lets callers reuse distance matrices already computed for
    ``emb_u`` and ``emb_v``.
    """
    geom_u, geom_v = geometry if geometry is not None else (PointGeometry(emb_u), PointGeometry(emb_v))
    n = len(geom_u)
    if cfg.n_segments > n:
        raise InputSizeError(f"cannot cut {n} points into {cfg.n_segments} segments")
    curve0 = curve_from_geometry(geom_u, geom_v, grid, spec)
    original = estimate_slope(curve0).slope
    surrogates = np.empty(cfg.n_replicates)
    for q in range(1, cfg.n_replicates + 1):
        perm_u = segment_permutation(n, cfg.n_segments, replicate_rng(cfg.master_seed, q, 0))
        perm_v = segment_permutation(n, cfg.n_segments, replicate_rng(cfg.master_seed, q, 1))
        curve = curve_from_geometry(geom_u, geom_v, grid, spec, perm_u, perm_v)
        surrogates[q - 1] = estimate_slope(curve).slope
    p, mean, std = gaussian_p_value(original, np.concatenate([[original], surrogates]))
    surrogates.setflags(write=False)
    return PValueResult(original, surrogates, mean, std, p, curve0)
