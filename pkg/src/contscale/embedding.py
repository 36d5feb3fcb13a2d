"""Scalar series containers and delay-coordinate reconstruction.

Lag selection uses the first local minimum of the delayed mutual
information; dimension selection uses the false-nearest-neighbour test of
Kennel, Brown & Abarbanel (1992).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import InputSizeError

logger = logging.getLogger(__name__)

FNN_THRESHOLD = 0.01


@dataclass(frozen=True, eq=False)
class ScalarSeries:
    """One observed scalar time series.

    ``sample_interval`` is 1.0 for maps and the sampling period for flows.
    """

    values: np.ndarray
    label: str = "x"
    sample_interval: float = 1.0

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError(f"series {self.label!r}: expected 1-D values, got shape {values.shape}")
        if values.size < 2:
            raise InputSizeError(f"series {self.label!r}: need at least 2 samples, got {values.size}")
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise ValueError(
                f"series {self.label!r}: non-finite sample at index {int(bad[0])} "
                f"({bad.size} in total)"
            )
        if not self.sample_interval > 0:
            raise ValueError(f"series {self.label!r}: sample_interval must be positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class EmbeddingParams:
    dimension: int
    lag: int

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError(f"embedding dimension must be a positive integer, got {self.dimension}")
        if int(self.lag) != self.lag or self.lag < 1:
            raise ValueError(f"embedding lag must be a positive integer, got {self.lag}")
        object.__setattr__(self, "dimension", int(self.dimension))
        object.__setattr__(self, "lag", int(self.lag))

    @property
    def window(self) -> int:
        """Span in samples covered by one delay vector, minus one."""
        return (self.dimension - 1) * self.lag


@dataclass(frozen=True, eq=False)
class EmbeddedSeries:
    """Delay vectors ``points[t] = (z_t, z_{t+lag}, ..., z_{t+(d-1)lag})``."""

    points: np.ndarray
    params: EmbeddingParams
    source_length: int
    label: str = "x"

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != self.params.dimension:
            raise ValueError(
                f"points must have shape (T0, {self.params.dimension}), got {pts.shape}"
            )
        if pts.shape[0] < 2:
            raise InputSizeError(f"embedded series {self.label!r} has fewer than 2 points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    def truncate(self, n_points: int) -> EmbeddedSeries:
        """First ``n_points`` delay vectors (used to align two embeddings)."""
        if not 2 <= n_points <= len(self):
            raise InputSizeError(f"cannot truncate {len(self)} points to {n_points}")
        return EmbeddedSeries(self.points[:n_points], self.params, self.source_length, self.label)

    def with_points(self, points: np.ndarray) -> EmbeddedSeries:
        return EmbeddedSeries(points, self.params, self.source_length, self.label)


def _as_values(series) -> np.ndarray:
    if isinstance(series, ScalarSeries):
        return series.values
    return ScalarSeries(series).values


def delay_embed(series, params: EmbeddingParams) -> EmbeddedSeries:
    """Delay-coordinate embedding of a scalar series."""
    values = _as_values(series)
    label = getattr(series, "label", "x")
    n = values.size
    n_points = n - params.window
    if n_points < 2:
        raise InputSizeError(
            f"series {label!r} of length {n} too short for d={params.dimension}, "
            f"lag={params.lag} (needs at least {params.window + 2} samples)"
        )
    idx = np.arange(n_points)[:, None] + params.lag * np.arange(params.dimension)[None, :]
    return EmbeddedSeries(values[idx], params, n, label)


# --------------------------------------------------------------------------
# lag selection


class LagSelection(NamedTuple):
    lag: int
    fallback: bool
    mutual_information: np.ndarray  # index l holds I(z_t; z_{t+l}), l = 0..max_lag+1


def default_bins(n: int) -> int:
    return max(2, int(np.floor(np.sqrt(n / 5.0))))


def quantile_codes(values: np.ndarray, bins: int) -> np.ndarray:
    """Equal-count bin labels derived from ranks (ties broken by position)."""
    n = values.size
    ranks = np.empty(n, dtype=np.int64)
    ranks[np.argsort(values, kind="stable")] = np.arange(n)
    return ranks * bins // n


def delayed_mutual_information(values, max_lag: int, bins: int | None = None) -> np.ndarray:
    """Plug-in mutual information (nats) between ``z_t`` and ``z_{t+l}``
    for ``l = 0..max_lag`` using equal-count binning of the whole series."""
    values = _as_values(values)
    n = values.size
    if bins is None:
        bins = default_bins(n)
    codes = quantile_codes(values, bins)
    out = np.empty(max_lag + 1)
    for lag in range(max_lag + 1):
        a = codes[: n - lag]
        b = codes[lag:]
        joint = np.bincount(a * bins + b, minlength=bins * bins).astype(np.float64)
        joint /= joint.sum()
        pa = joint.reshape(bins, bins).sum(axis=1)
        pb = joint.reshape(bins, bins).sum(axis=0)
        outer = np.outer(pa, pb).ravel()
        nz = joint > 0
        out[lag] = float(np.sum(joint[nz] * np.log(joint[nz] / outer[nz])))
    return out


def select_lag_mutual_information(series, max_lag: int = 20, bins: int | None = None) -> LagSelection:
    """Smallest lag in ``[1, max_lag]`` at which the delayed mutual
    information has a strict local minimum.

    When the profile has no local minimum in range, the lag of the global
    minimum is returned with ``fallback=True``.
    """
    values = _as_values(series)
    n = values.size
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    if bins is not None and bins < 2:
        raise ValueError("bins must be >= 2")
    if not max_lag < n / 2:
        raise InputSizeError(f"max_lag={max_lag} requires more than {2 * max_lag} samples, got {n}")
    mi = delayed_mutual_information(values, max_lag + 1, bins)
    for lag in range(1, max_lag + 1):
        if mi[lag] < mi[lag - 1] and mi[lag] < mi[lag + 1]:
            return LagSelection(lag, False, mi)
    lag = 1 + int(np.argmin(mi[1 : max_lag + 1]))
    logger.warning("no local minimum of mutual information up to lag %d; using global minimum %d", max_lag, lag)
    return LagSelection(lag, True, mi)


# --------------------------------------------------------------------------
# dimension selection


class DimensionSelection(NamedTuple):
    dimension: int
    fallback: bool
    fnn_fraction: np.ndarray  # index k holds the fraction for dimension k+1


def false_nearest_fraction(values, dimension: int, lag: int, rtol: float = 10.0, atol: float = 2.0) -> float:
    """Fraction of nearest neighbours in ``dimension`` that are false
    when the embedding is extended by one coordinate."""
    values = _as_values(values)
    n = values.size
    n_points = n - dimension * lag
    if n_points < 3:
        raise InputSizeError(
            f"length {n} too short for a false-neighbour test at d={dimension}, lag={lag}"
        )
    spread = float(np.std(values))
    if spread == 0.0:
        return 0.0
    idx = np.arange(n_points)[:, None] + lag * np.arange(dimension)[None, :]
    pts = values[idx]
    nxt = values[np.arange(n_points) + dimension * lag]
    tree = cKDTree(pts)
    k = min(3, n_points)
    dist, nbr = tree.query(pts, k=k)
    own = np.arange(n_points)[:, None]
    # first neighbour that is not the query point itself
    pick = np.argmax(nbr != own, axis=1)
    rows = np.arange(n_points)
    r_d = dist[rows, pick]
    j = nbr[rows, pick]
    extra = np.abs(nxt - nxt[j])
    r_next = np.sqrt(r_d**2 + extra**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        crit1 = np.where(r_d > 0, extra / r_d > rtol, extra > 0)
    crit2 = r_next / spread > atol
    return float(np.mean(crit1 | crit2))


def select_dimension_fnn(
    series, lag: int = 1, max_dim: int = 10, rtol: float = 10.0, atol: float = 2.0
) -> DimensionSelection:
    """Smallest dimension whose false-nearest-neighbour fraction is below 1%."""
    if max_dim < 2:
        raise ValueError("max_dim must be >= 2")
    if lag < 1:
        raise ValueError("lag must be >= 1")
    values = _as_values(series)
    if values.size - max_dim * lag < 3:
        raise InputSizeError(
            f"length {values.size} too short for max_dim={max_dim} at lag={lag}"
        )
    fractions = []
    for d in range(1, max_dim + 1):
        frac = false_nearest_fraction(values, d, lag, rtol, atol)
        fractions.append(frac)
        if frac < FNN_THRESHOLD:
            return DimensionSelection(d, False, np.array(fractions))
    logger.warning("false-neighbour fraction never fell below %.0f%% up to d=%d", 100 * FNN_THRESHOLD, max_dim)
    return DimensionSelection(max_dim, True, np.array(fractions))


def auto_embed(series: ScalarSeries, max_lag: int = 20, max_dim: int = 10) -> EmbeddedSeries:
    """Embed with lag and dimension both chosen from the data."""
    lag = select_lag_mutual_information(series, max_lag=min(max_lag, (len(series) - 1) // 2)).lag
    dim = select_dimension_fnn(series, lag=lag, max_dim=max_dim).dimension
    return delay_embed(series, EmbeddingParams(dim, lag))
