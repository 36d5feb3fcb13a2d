"""Continuity-scaling curve between two embedded series and its slope.

For the direction "v drives u", effect-side neighbourhoods of radius eps
are formed around ``u(t+1)``; the cause-side radius delta is the mean
distance from ``v(t)`` to the partners ``v(tau-1)`` of those neighbours.
The slope of <delta> against ln(eps) is the causal index.

Indices are 0-based: ``t`` runs over ``0..T0-2`` and neighbours ``tau``
over ``1..T0-1`` so that ``tau - 1`` always exists.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .embedding import EmbeddedSeries
from .errors import DegenerateDataError, DegenerateGeometryError, InputSizeError

DEFAULT_SHRINK = 0.001
DEFAULT_N_EPS = 33


@dataclass(frozen=True, eq=False)
class EpsilonGrid:
    """Geometric radii from ``shrink_factor * D`` up to the diameter ``D``."""

    values: np.ndarray
    shrink_factor: float

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("grid needs at least two radii")
        if np.any(values <= 0) or np.any(np.diff(values) <= 0):
            raise ValueError("grid radii must be positive and strictly increasing")
        if values.size > 120:
            raise ValueError("at most 120 grid radii are supported")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def count(self) -> int:
        return self.values.size

    @property
    def log_values(self) -> np.ndarray:
        return np.log(self.values)

    def scaled(self, factor: float) -> EpsilonGrid:
        return EpsilonGrid(self.values * factor, self.shrink_factor)


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Neighbour selection rules.

    ``theiler_window`` excludes neighbours with ``|t + 1 - tau| <= E``;
    ``None`` means one embedding window of the effect series,
    ``(d_u - 1) * lag_u + 1``. ``dd_condition`` additionally requires the
    predecessors to be close: ``dist(u(t), u(tau - 1)) < eps``.
    """

    theiler_window: int | None = None
    dd_condition: bool = False

    def __post_init__(self):
        if self.theiler_window is not None and self.theiler_window < 0:
            raise ValueError("theiler_window must be >= 0")

    def window_for(self, emb_u: EmbeddedSeries) -> int:
        if self.theiler_window is not None:
            return int(self.theiler_window)
        return emb_u.params.window + 1


@dataclass(frozen=True, eq=False)
class ScalingCurve:
    grid: EpsilonGrid
    deltas: np.ndarray
    populated: np.ndarray  # time indices with a non-empty neighbourhood, per radius
    n_used: int  # time indices entering the average

    @property
    def log_eps(self) -> np.ndarray:
        return self.grid.log_values


@dataclass(frozen=True, eq=False)
class SlopeEstimate:
    slope: float
    intercept: float
    fit_indices: np.ndarray  # sorted 0-based grid indices used in the fit
    residual_rms: float

    def in_fit(self, n_eps: int) -> np.ndarray:
        mask = np.zeros(n_eps, dtype=bool)
        mask[self.fit_indices] = True
        return mask


def diameter(emb: EmbeddedSeries) -> float:
    """Largest Euclidean distance between any two points."""
    if len(emb) < 2:
        raise InputSizeError("diameter needs at least two points")
    return float(_kernels.diameter(emb.points))


def build_epsilon_grid(diameter: float, shrink: float = DEFAULT_SHRINK, n_eps: int = DEFAULT_N_EPS) -> EpsilonGrid:
    """``n_eps`` radii equally spaced in log between ``shrink * diameter`` and ``diameter``."""
    if not 0 < shrink < 1:
        raise ValueError(f"shrink factor must lie in (0, 1), got {shrink}")
    if n_eps < 2:
        raise ValueError(f"need at least 2 radii, got {n_eps}")
    if not np.isfinite(diameter) or diameter < 0:
        raise ValueError(f"invalid diameter {diameter}")
    if diameter == 0:
        raise DegenerateGeometryError("diameter is zero (constant series?)")
    # geomspace pins both endpoints exactly
    return EpsilonGrid(np.geomspace(shrink * diameter, diameter, n_eps), shrink)


def _row_distances(points: np.ndarray, i: int) -> np.ndarray:
    diff_sq = np.zeros(points.shape[0])
    for k in range(points.shape[1]):
        diff = points[:, k] - points[i, k]
        diff_sq = diff_sq + diff * diff
    return np.sqrt(diff_sq)


def neighbor_index_set(emb_u: EmbeddedSeries, t: int, eps: float, spec: NeighborhoodSpec = NeighborhoodSpec()) -> np.ndarray:
    """Sorted neighbour indices ``tau`` of ``u(t + 1)`` within radius ``eps``."""
    n = len(emb_u)
    if not 0 <= t <= n - 2:
        raise IndexError(f"t={t} outside 0..{n - 2}")
    if not eps > 0:
        raise ValueError("eps must be positive")
    window = spec.window_for(emb_u)
    taus = np.arange(1, n)
    ok = np.abs(t + 1 - taus) > window
    ok &= _row_distances(emb_u.points, t + 1)[1:] < eps
    if spec.dd_condition:
        ok &= _row_distances(emb_u.points, t)[:-1] < eps
    return taus[ok]


class PointGeometry:
    """Pairwise distances of one embedded series, with radius lookups cached per grid.

    Holds an ``(T0, T0)`` float64 matrix; reuse one instance for every
    curve and surrogate computed on the same series.
    """

    def __init__(self, emb: EmbeddedSeries):
        self.emb = emb
        self.dist = _kernels.pairwise_distances(emb.points)
        self._bins: dict[bytes, np.ndarray] = {}

    def __len__(self):
        return len(self.emb)

    @property
    def diameter(self) -> float:
        return float(self.dist.max())

    def grid(self, shrink: float = DEFAULT_SHRINK, n_eps: int = DEFAULT_N_EPS) -> EpsilonGrid:
        return build_epsilon_grid(self.diameter, shrink, n_eps)

    def bins(self, grid: EpsilonGrid) -> np.ndarray:
        key = grid.values.tobytes()
        if key not in self._bins:
            self._bins[key] = _kernels.bin_matrix(self.dist, grid.values)
        return self._bins[key]


def curve_from_geometry(
    geom_u: PointGeometry,
    geom_v: PointGeometry,
    grid: EpsilonGrid,
    spec: NeighborhoodSpec = NeighborhoodSpec(),
    perm_u: np.ndarray | None = None,
    perm_v: np.ndarray | None = None,
) -> ScalingCurve:
    """Scaling curve for (optionally reordered) points of two cached geometries.

    Point ``i`` of the reordered u series is original point ``perm_u[i]``.
    """
    n = len(geom_u)
    if len(geom_v) != n:
        raise InputSizeError(f"series lengths differ ({n} vs {len(geom_v)}); truncate to a common T0 first")
    if n < 2:
        raise InputSizeError("need at least two points")
    ident = None
    if perm_u is None or perm_v is None:
        ident = np.arange(n, dtype=np.int64)
    perm_u = ident if perm_u is None else np.ascontiguousarray(perm_u, dtype=np.int64)
    perm_v = ident if perm_v is None else np.ascontiguousarray(perm_v, dtype=np.int64)
    mean, populated, used = _kernels.profile(
        geom_u.bins(grid), geom_v.dist, perm_u, perm_v,
        grid.count, spec.window_for(geom_u.emb), spec.dd_condition,
    )
    if used == 0:
        raise DegenerateDataError(
            "no time index has any neighbour even at the largest radius "
            "(series too short for the Theiler window?)"
        )
    mean.setflags(write=False)
    populated.setflags(write=False)
    return ScalingCurve(grid, mean, populated, int(used))


def delta_profile(
    emb_u: EmbeddedSeries,
    emb_v: EmbeddedSeries,
    grid: EpsilonGrid,
    spec: NeighborhoodSpec = NeighborhoodSpec(),
) -> ScalingCurve:
    """Mean cause-side radius <delta> at each effect-side radius of ``grid``.

    ``emb_u`` is the effect series (eps side), ``emb_v`` the candidate cause
    (delta side). At radii where a time index has no neighbours its delta
    is taken from the next larger radius; indices without neighbours even
    at the largest radius are left out of the average entirely.
    """
    if len(emb_u) != len(emb_v):
        raise InputSizeError(
            f"series lengths differ ({len(emb_u)} vs {len(emb_v)}); truncate to a common T0 first"
        )
    return curve_from_geometry(PointGeometry(emb_u), PointGeometry(emb_v), grid, spec)


def fit_scaling_slope(log_eps, deltas) -> SlopeEstimate:
    """Least-squares slope over the steepest part of a scaling curve.

    Successive slopes between neighbouring radii are ranked (ties go to the
    smaller radius); the ``(n + 1) // 2`` steepest segments contribute both
    end points to the fit set.
    """
    log_eps = np.asarray(log_eps, dtype=np.float64)
    deltas = np.asarray(deltas, dtype=np.float64)
    if log_eps.shape != deltas.shape or log_eps.ndim != 1:
        raise ValueError("log_eps and deltas must be 1-D arrays of equal length")
    n = log_eps.size
    if n < 3:
        raise ValueError("need at least 3 curve points to fit a slope")
    order = np.argsort(log_eps, kind="stable")
    x = log_eps[order]
    y = deltas[order]
    steps = np.diff(y) / np.diff(x)
    chosen = np.argsort(-steps, kind="stable")[: (n + 1) // 2]
    fit = np.unique(np.concatenate([chosen, chosen + 1]))
    xs = x[fit]
    ys = y[fit]
    xc = xs - xs.mean()
    yc = ys - ys.mean()
    sxx = float(np.dot(xc, xc))
    slope = float(np.dot(xc, yc)) / sxx if sxx > 0 else 0.0
    intercept = float(ys.mean() - slope * xs.mean())
    resid = ys - (slope * xs + intercept)
    rms = float(np.sqrt(np.mean(resid * resid)))
    return SlopeEstimate(slope, intercept, np.sort(order[fit]), rms)


def estimate_slope(curve: ScalingCurve) -> SlopeEstimate:
    return fit_scaling_slope(curve.log_eps, curve.deltas)
