"""Benchmark systems: coupled logistic maps and a pair of coupled Lorenz flows."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .embedding import ScalarSeries
from .errors import DivergenceError


# --------------------------------------------------------------------------
# logistic networks


@dataclass(frozen=True, eq=False)
class LogisticNetworkSpec:
    """``x_{i,t+1} = x_{i,t} (r_i - r_i x_{i,t} - sum_j coupling[i, j] x_{j,t})``.

    ``coupling[i, j]`` is the influence of node ``j`` on node ``i``.
    """

    rates: np.ndarray
    coupling: np.ndarray
    length: int = 5000
    transient: int = 1000
    initial: np.ndarray | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        rates = np.array(self.rates, dtype=np.float64).ravel()
        n = rates.size
        coupling = np.array(self.coupling, dtype=np.float64)
        if coupling.shape != (n, n):
            raise ValueError(f"coupling must be {n}x{n}, got {coupling.shape}")
        if self.length < 2:
            raise ValueError("length must be >= 2")
        if self.transient < 0:
            raise ValueError("transient must be >= 0")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "coupling", coupling)
        if self.initial is not None:
            initial = np.array(self.initial, dtype=np.float64).ravel()
            if initial.size != n or np.any((initial <= 0) | (initial >= 1)):
                raise ValueError("initial state must have one value in (0, 1) per node")
            object.__setattr__(self, "initial", initial)
        labels = self.labels or tuple(f"x{i + 1}" for i in range(n))
        if len(labels) != n:
            raise ValueError("need one label per node")
        object.__setattr__(self, "labels", tuple(labels))

    @property
    def n_nodes(self) -> int:
        return self.rates.size

    def true_edges(self) -> set[tuple[str, str]]:
        """Ordered pairs (cause, effect) with non-zero coupling."""
        n = self.n_nodes
        return {
            (self.labels[j], self.labels[i])
            for i in range(n)
            for j in range(n)
            if i != j and self.coupling[i, j] != 0
        }


def logistic_pair_spec(mu12=0.0, mu21=0.0, length=5000, transient=1000, initial=None) -> LogisticNetworkSpec:
    """Two species with rates 3.8 and 3.7; ``mu21`` couples x1 into x2's equation."""
    coupling = np.array([[0.0, mu12], [mu21, 0.0]])
    return LogisticNetworkSpec([3.8, 3.7], coupling, length, transient, initial)


def ring_spec(n=5, strength=0.2, rate=3.8, length=5000, transient=1000, initial=None) -> LogisticNetworkSpec:
    """Directed ring x_i -> x_{i+1 mod n}."""
    coupling = np.zeros((n, n))
    for i in range(n):
        coupling[(i + 1) % n, i] = strength
    return LogisticNetworkSpec(np.full(n, rate), coupling, length, transient, initial)


def tree_spec(strength=0.2, rate=3.8, length=5000, transient=1000, initial=None) -> LogisticNetworkSpec:
    """Five nodes, x_j -> x_{j+1} and x_j -> x_{j+3} for j = 1, 2."""
    coupling = np.zeros((5, 5))
    for j in (0, 1):
        coupling[j + 1, j] = strength
        coupling[j + 3, j] = strength
    return LogisticNetworkSpec(np.full(5, rate), coupling, length, transient, initial)


@njit(cache=True)
def _iterate_logistic(rates, coupling, x0, n_steps, out):
    # out[k] holds the state after k steps; returns (step, node) of the first
    # excursion outside [0, 1], or (-1, -1)
    n = x0.size
    x = x0.copy()
    out[0, :] = x
    nxt = np.empty(n)
    for k in range(1, n_steps + 1):
        for i in range(n):
            drive = 0.0
            for j in range(n):
                drive += coupling[i, j] * x[j]
            nxt[i] = x[i] * (rates[i] - rates[i] * x[i] - drive)
        for i in range(n):
            if not (0.0 <= nxt[i] <= 1.0):
                return k, i
        x[:] = nxt
        out[k, :] = x
    return -1, -1


def generate_logistic_network(spec: LogisticNetworkSpec, seed: int | None = None) -> list[ScalarSeries]:
    """Iterate the network, drop the transient and return one series per node.

    With no explicit initial state, initial values are drawn uniformly from
    (0.1, 0.9) using ``seed``.
    """
    if spec.initial is not None:
        x0 = spec.initial
    else:
        x0 = np.random.default_rng(seed).uniform(0.1, 0.9, spec.n_nodes)
    n_steps = spec.transient + spec.length - 1
    out = np.empty((n_steps + 1, spec.n_nodes))
    step, node = _iterate_logistic(spec.rates, spec.coupling, x0, n_steps, out)
    if step >= 0:
        raise DivergenceError(
            f"logistic network left [0, 1] at step {step} (node {spec.labels[node]})"
        )
    data = out[spec.transient :]
    return [ScalarSeries(data[:, i].copy(), label) for i, label in enumerate(spec.labels)]


# --------------------------------------------------------------------------
# coupled Lorenz pair


def _multiple(value: float, dt: float, name: str) -> int:
    ratio = value / dt
    k = int(round(ratio))
    if abs(ratio - k) > 1e-9 * max(1.0, abs(ratio)):
        raise ValueError(f"{name}={value} is not an integer multiple of dt={dt}")
    return k


@dataclass(frozen=True, eq=False)
class LorenzPairSpec:
    """Two Lorenz systems coupled through their x equations:

    ``x_i' = sigma_i (y_i - x_i) + mu_ij x_j``, ``y_i' = x_i (rho_i - z_i) - y_i``,
    ``z_i' = x_i y_i - beta_i z_i``.

    ``mu21`` is the drive from subsystem 1 into subsystem 2.
    """

    sigma: tuple[float, float] = (10.0, 10.0)
    rho: tuple[float, float] = (28.0, 28.0)
    beta: tuple[float, float] = (8.0 / 3.0, 8.0 / 3.0)
    mu12: float = 0.0
    mu21: float = 0.0
    dt: float = 1e-3
    omega: float = 0.05
    shift: float = 0.0
    n_samples: int = 10_000
    transient: float = 100.0
    initial: tuple[float, ...] = (1.0, 1.0, 1.0, -1.0, -1.0, 1.0)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.omega < self.dt:
            raise ValueError("sampling interval must be >= dt")
        _multiple(self.omega, self.dt, "omega")
        _multiple(self.shift, self.dt, "shift")
        _multiple(self.transient, self.dt, "transient")
        if len(self.initial) != 6:
            raise ValueError("initial state needs 6 values")
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")

    def params(self) -> np.ndarray:
        return np.array([*self.sigma, *self.rho, *self.beta, self.mu12, self.mu21], dtype=np.float64)


def random_lorenz_initial(seed) -> tuple[float, ...]:
    """Seeded initial state near the attractor region."""
    rng = np.random.default_rng(seed)
    xy = rng.uniform(-10.0, 10.0, size=(2, 2))
    z = rng.uniform(15.0, 35.0, size=2)
    return (xy[0, 0], xy[0, 1], z[0], xy[1, 0], xy[1, 1], z[1])


@njit(cache=True)
def _lorenz_rhs(s, p, out):
    # p = (sigma1, sigma2, rho1, rho2, beta1, beta2, mu12, mu21)
    x1, y1, z1, x2, y2, z2 = s[0], s[1], s[2], s[3], s[4], s[5]
    out[0] = p[0] * (y1 - x1) + p[6] * x2
    out[1] = x1 * (p[2] - z1) - y1
    out[2] = x1 * y1 - p[4] * z1
    out[3] = p[1] * (y2 - x2) + p[7] * x1
    out[4] = x2 * (p[3] - z2) - y2
    out[5] = x2 * y2 - p[5] * z2


@njit(cache=True)
def _rk4_step(s, p, dt, k1, k2, k3, k4, tmp):
    half = 0.5 * dt
    _lorenz_rhs(s, p, k1)
    for i in range(6):
        tmp[i] = s[i] + half * k1[i]
    _lorenz_rhs(tmp, p, k2)
    for i in range(6):
        tmp[i] = s[i] + half * k2[i]
    _lorenz_rhs(tmp, p, k3)
    for i in range(6):
        tmp[i] = s[i] + dt * k3[i]
    _lorenz_rhs(tmp, p, k4)
    for i in range(6):
        s[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True)
def _integrate(s0, p, dt, n_skip, n_samples, stride, out):
    # returns the step index at which the state became non-finite, else -1
    s = s0.copy()
    k1 = np.empty(6)
    k2 = np.empty(6)
    k3 = np.empty(6)
    k4 = np.empty(6)
    tmp = np.empty(6)
    step = 0
    for _ in range(n_skip):
        _rk4_step(s, p, dt, k1, k2, k3, k4, tmp)
        step += 1
        if not np.all(np.isfinite(s)):
            return step
    for n in range(n_samples):
        if n > 0:
            for _ in range(stride):
                _rk4_step(s, p, dt, k1, k2, k3, k4, tmp)
                step += 1
            if not np.all(np.isfinite(s)):
                return step
        out[n, :] = s
    return -1


def integrate_rk4(state, spec: LorenzPairSpec, n_steps: int, dt: float | None = None) -> np.ndarray:
    """Advance a 6-D state by ``n_steps`` classical RK4 steps and return it."""
    dt = spec.dt if dt is None else dt
    out = np.empty((1, 6))
    bad = _integrate(np.asarray(state, dtype=np.float64), spec.params(), dt, n_steps, 1, 1, out)
    if bad >= 0:
        raise DivergenceError(f"Lorenz state became non-finite at t={bad * dt:g}")
    return out[0]


def lorenz_trajectory(spec: LorenzPairSpec) -> np.ndarray:
    """Full 6-D sampled states, shape ``(n_samples, 6)``."""
    n_skip = _multiple(spec.transient, spec.dt, "transient") + _multiple(spec.shift, spec.dt, "shift")
    stride = _multiple(spec.omega, spec.dt, "omega")
    out = np.empty((spec.n_samples, 6))
    bad = _integrate(np.asarray(spec.initial, dtype=np.float64), spec.params(), spec.dt,
                     n_skip, spec.n_samples, stride, out)
    if bad >= 0:
        raise DivergenceError(f"Lorenz state became non-finite at t={bad * spec.dt:g}")
    return out


def generate_coupled_lorenz(spec: LorenzPairSpec) -> tuple[ScalarSeries, ScalarSeries]:
    """Sampled ``y1`` and ``y2`` observables of the coupled pair."""
    traj = lorenz_trajectory(spec)
    return (
        ScalarSeries(traj[:, 1].copy(), "y1", spec.omega),
        ScalarSeries(traj[:, 4].copy(), "y2", spec.omega),
    )
