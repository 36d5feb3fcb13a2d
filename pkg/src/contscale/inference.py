"""Pairwise detection, all-pairs networks and ROC evaluation."""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .embedding import EmbeddedSeries, EmbeddingParams, ScalarSeries, auto_embed, delay_embed
from .errors import ContScaleError, InputSizeError, UndefinedROCError
from .scaling import (
    DEFAULT_N_EPS,
    DEFAULT_SHRINK,
    NeighborhoodSpec,
    PointGeometry,
    ScalingCurve,
    SlopeEstimate,
    estimate_slope,
)
from .significance import PValueResult, SurrogateConfig, surrogate_p_value

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DetectionConfig:
    """Everything that determines a detection run besides the data.

    ``embedding`` applies to every series; ``embedding_overrides`` maps
    labels to their own parameters. Series covered by neither are embedded
    with automatically selected lag and dimension.
    """

    embedding: EmbeddingParams | None = None
    embedding_overrides: Mapping[str, EmbeddingParams] = field(default_factory=dict)
    shrink: float = DEFAULT_SHRINK
    n_eps: int = DEFAULT_N_EPS
    neighborhood: NeighborhoodSpec = NeighborhoodSpec()
    surrogates: SurrogateConfig = SurrogateConfig()
    alpha: float = 0.05
    max_lag: int = 20
    max_dim: int = 10

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 < self.shrink < 1:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink}")
        if self.n_eps < 3:
            raise ValueError("n_eps must be >= 3 to fit a slope")

    @property
    def master_seed(self) -> int:
        return self.surrogates.master_seed

    def with_seed(self, seed: int) -> DetectionConfig:
        return replace(self, surrogates=replace(self.surrogates, master_seed=seed))

    def params_for(self, label: str) -> EmbeddingParams | None:
        return self.embedding_overrides.get(label, self.embedding)

    def to_dict(self) -> dict:
        def emb(p):
            return None if p is None else {"dimension": p.dimension, "lag": p.lag}

        return {
            "embedding": emb(self.embedding),
            "embedding_overrides": {k: emb(v) for k, v in sorted(self.embedding_overrides.items())},
            "eps_shrink": self.shrink,
            "eps_count": self.n_eps,
            "theiler": self.neighborhood.theiler_window,
            "dd": self.neighborhood.dd_condition,
            "segments": self.surrogates.n_segments,
            "replicates": self.surrogates.n_replicates,
            "seed": self.surrogates.master_seed,
            "alpha": self.alpha,
            "max_lag": self.max_lag,
            "max_dim": self.max_dim,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> DetectionConfig:
        def emb(p):
            return None if p is None else EmbeddingParams(p["dimension"], p["lag"])

        return cls(
            embedding=emb(d.get("embedding")),
            embedding_overrides={k: emb(v) for k, v in (d.get("embedding_overrides") or {}).items()},
            shrink=d.get("eps_shrink", DEFAULT_SHRINK),
            n_eps=d.get("eps_count", DEFAULT_N_EPS),
            neighborhood=NeighborhoodSpec(d.get("theiler"), bool(d.get("dd", False))),
            surrogates=SurrogateConfig(d.get("segments", 25), d.get("replicates", 20), d.get("seed", 0)),
            alpha=d.get("alpha", 0.05),
            max_lag=d.get("max_lag", 20),
            max_dim=d.get("max_dim", 10),
        )


@dataclass(frozen=True, eq=False)
class CausalityResult:
    """Evidence that ``cause`` drives ``effect``."""

    cause: str
    effect: str
    slope: float
    p_value: float
    significant: bool
    curve: ScalingCurve
    fit: SlopeEstimate
    test: PValueResult

    @property
    def direction(self) -> tuple[str, str]:
        return (self.cause, self.effect)


def _label_key(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")


def direction_seed(master_seed: int, cause: str, effect: str) -> int:
    """Surrogate seed for one direction, independent of argument order."""
    lo, hi = sorted((cause, effect))
    flag = 0 if cause == lo else 1
    ss = np.random.SeedSequence([master_seed & ((1 << 64) - 1), _label_key(lo), _label_key(hi), flag])
    return int(ss.generate_state(1, np.uint64)[0])


def embed_series(series: ScalarSeries, cfg: DetectionConfig) -> EmbeddedSeries:
    params = cfg.params_for(series.label)
    try:
        if params is None:
            return auto_embed(series, cfg.max_lag, cfg.max_dim)
        return delay_embed(series, params)
    except ContScaleError as exc:
        raise type(exc)(f"[{series.label}] {exc}") from exc


def _direction(cause, effect, geom_cause, geom_effect, cfg) -> CausalityResult:
    grid = geom_effect.grid(cfg.shrink, cfg.n_eps)
    scfg = replace(cfg.surrogates, master_seed=direction_seed(cfg.master_seed, cause, effect))
    test = surrogate_p_value(
        geom_effect.emb, geom_cause.emb, grid, cfg.neighborhood, scfg, (geom_effect, geom_cause)
    )
    fit = estimate_slope(test.curve)
    return CausalityResult(
        cause, effect, test.original_slope, test.p_value, test.p_value < cfg.alpha, test.curve, fit, test
    )


def detect_pair(a: ScalarSeries, b: ScalarSeries, cfg: DetectionConfig = DetectionConfig()):
    """Both directional results ``(a -> b, b -> a)`` for two series.

    For ``a -> b`` the effect ``b`` supplies the radius grid and ``a`` the
    cause-side distances.
    """
    if a.label == b.label:
        raise ValueError(f"series labels must differ (both {a.label!r})")
    emb_a = embed_series(a, cfg)
    emb_b = embed_series(b, cfg)
    n = min(len(emb_a), len(emb_b))
    emb_a = emb_a.truncate(n)
    emb_b = emb_b.truncate(n)
    geom_a = PointGeometry(emb_a)
    geom_b = PointGeometry(emb_b)
    results = []
    for cause, effect, gc, ge in ((a.label, b.label, geom_a, geom_b), (b.label, a.label, geom_b, geom_a)):
        try:
            results.append(_direction(cause, effect, gc, ge, cfg))
        except ContScaleError as exc:
            raise type(exc)(f"[{cause} -> {effect}] {exc}") from exc
    return results[0], results[1]


@dataclass(frozen=True, eq=False)
class CausalNetwork:
    labels: tuple[str, ...]
    results: dict[tuple[str, str], CausalityResult]
    errors: dict[tuple[str, str], str]

    def __post_init__(self):
        n = len(self.labels)
        covered = set(self.results) | set(self.errors)
        if len(covered) != n * (n - 1):
            raise ValueError("network must cover every ordered pair exactly once")

    def scores(self) -> dict[tuple[str, str], float]:
        """Slope per ordered pair; failed pairs score ``-inf``."""
        out = {k: -np.inf for k in self.errors}
        out.update({k: r.slope for k, r in self.results.items()})
        return out

    def matrix(self, attr: str = "slope") -> np.ndarray:
        """``m[i, j]`` for the direction ``labels[i] -> labels[j]`` (NaN on the diagonal and failures)."""
        n = len(self.labels)
        m = np.full((n, n), np.nan)
        for i, ci in enumerate(self.labels):
            for j, cj in enumerate(self.labels):
                r = self.results.get((ci, cj))
                if r is not None:
                    m[i, j] = getattr(r, attr)
        return m


def infer_network(table: Sequence[ScalarSeries], cfg: DetectionConfig = DetectionConfig()) -> CausalNetwork:
    """Pairwise detection over every unordered pair of series."""
    if len(table) < 2:
        raise InputSizeError("need at least two series")
    labels = [s.label for s in table]
    if len(set(labels)) != len(labels):
        raise ValueError(f"series labels must be unique: {labels}")
    lengths = {len(s) for s in table}
    if len(lengths) != 1:
        raise InputSizeError(f"series must have equal lengths, got {sorted(lengths)}")
    by_label = {s.label: s for s in table}
    results: dict = {}
    errors: dict = {}
    for la, lb in combinations(sorted(labels), 2):
        try:
            r_ab, r_ba = detect_pair(by_label[la], by_label[lb], cfg)
        except ContScaleError as exc:
            logger.warning("pair %s/%s failed: %s", la, lb, exc)
            errors[(la, lb)] = errors[(lb, la)] = str(exc)
            continue
        results[(la, lb)] = r_ab
        results[(lb, la)] = r_ba
    return CausalNetwork(tuple(labels), results, errors)


@dataclass(frozen=True, eq=False)
class RocCurve:
    thresholds: np.ndarray  # descending distinct scores; point k uses score >= thresholds[k-1]
    fpr: np.ndarray
    tpr: np.ndarray
    auroc: float


def roc_auroc(scores: Mapping[tuple[str, str], float], truth) -> RocCurve:
    """ROC of ranking ordered pairs by score against a set of true edges.

    Tied scores produce diagonal segments, so the area equals the
    Mann-Whitney probability that a true edge outscores a false one
    (ties counting one half).
    """
    truth = set(truth)
    unknown = truth - set(scores)
    if unknown:
        raise ValueError(f"truth edges without a score: {sorted(unknown)}")
    keys = list(scores)
    is_true = np.array([k in truth for k in keys])
    n_pos = int(is_true.sum())
    n_neg = len(keys) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedROCError("ROC needs at least one true and one false pair")
    vals = np.array([scores[k] for k in keys], dtype=np.float64)
    if np.any(np.isnan(vals)):
        raise ValueError("scores contain NaN")
    thresholds = np.unique(vals)[::-1]
    tp = np.array([np.sum(is_true & (vals >= th)) for th in thresholds])
    fp = np.array([np.sum(~is_true & (vals >= th)) for th in thresholds])
    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    auroc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(thresholds, fpr, tpr, auroc)
