"""Synthetic sensor trajectories and recurrent events.

Sensor paths are draws from a stationary Gaussian process with a Matern
covariance on a regular per-day grid.  Events are generated by discrete
Bernoulli thinning: the hazard is interpreted per grid step (a day split
into ``n`` steps), so an intercept of ``log(5/n)`` produces about five
events per day.  All randomness flows through explicit seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import kv

__all__ = [
    "MaternParams",
    "SensorPath",
    "TrueBeta",
    "EventSet",
    "day_grid",
    "matern_cov",
    "matern_cov_matrix",
    "GPSampler",
    "sample_gp",
    "true_beta_eval",
    "hazard_eval",
    "hazard_profile",
    "generate_events",
    "bernoulli_events",
]

# jitter escalation for Cholesky of near-singular covariances, scaled by trace/n
_JITTER_SCALES = (1e-12, 1e-10, 1e-8, 1e-6)


class IllConditionedCovariance(np.linalg.LinAlgError):
    """Covariance could not be factorized even after jitter escalation."""


@dataclass(frozen=True)
class MaternParams:
    """Matern covariance parameters: smoothness ``nu``, marginal variance
    ``sigma2`` and length-scale ``rho`` (in grid time units)."""

    nu: float
    sigma2: float
    rho: float

    def __post_init__(self):
        if not (self.nu > 0 and self.sigma2 > 0 and self.rho > 0):
            raise ValueError("MaternParams requires nu > 0, sigma2 > 0, rho > 0")


@dataclass
class SensorPath:
    """Dense per-subject covariate trajectory on a regular grid.

    ``values`` has one row per stream aligned to ``grid``; masked entries are
    carried as NaN and flagged in ``missing_mask``.
    """

    grid: np.ndarray
    values: np.ndarray
    missing_mask: np.ndarray
    streams: tuple = ("x",)
    subject_id: int = 0

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        self.missing_mask = np.atleast_2d(np.asarray(self.missing_mask, dtype=bool))
        if self.grid.ndim != 1 or self.grid.size < 2:
            raise ValueError("grid must be 1-D with at least two points")
        diffs = np.diff(self.grid)
        if np.any(diffs <= 0):
            raise ValueError("grid must be strictly increasing")
        dt = diffs[0]
        if np.max(np.abs(diffs - dt)) > 1e-12 * max(abs(dt), 1.0):
            raise ValueError("grid spacing must be constant to relative 1e-12")
        if self.values.shape[1] != self.grid.size:
            raise ValueError("values length must match grid length")
        if self.missing_mask.shape != self.values.shape:
            raise ValueError("missing_mask shape must match values shape")

    @property
    def dt(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def n_streams(self) -> int:
        return self.values.shape[0]

    def stream(self, idx: int = 0) -> np.ndarray:
        return self.values[idx]


@dataclass(frozen=True)
class TrueBeta:
    """True effect curve on the lag window [0, delta].

    kind ``exp_decay``: b0 + exp(-b1 * s); kind ``sine``:
    b1 * sin(2*pi*s/delta - pi/2).  Zero for s > delta.
    """

    kind: str
    params: tuple
    delta: float

    def __post_init__(self):
        if self.kind not in ("exp_decay", "sine"):
            raise ValueError(f"unknown beta kind: {self.kind!r}")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if len(self.params) != 2:
            raise ValueError("params must be (b0, b1)")

    def __call__(self, s):
        return true_beta_eval(self, s)


@dataclass
class EventSet:
    """Ordered event times with the censoring time for one subject."""

    times: np.ndarray
    tau: float
    subject_id: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.size and np.any(np.diff(self.times) <= 0):
            raise ValueError("event times must be strictly increasing")
        if self.times.size and (self.times[0] <= 0 or self.times[-1] > self.tau):
            raise ValueError("event times must lie in (0, tau]")

    def __len__(self) -> int:
        return self.times.size


def day_grid(n_steps: int = 1000) -> np.ndarray:
    """Regular grid of ``n_steps`` observation times on the unit day [0, 1)."""
    return np.arange(n_steps) / n_steps


def matern_cov(t1, t2, p: MaternParams):
    """Matern covariance between times ``t1`` and ``t2``.

    Supports scalars or broadcastable arrays; the zero-distance limit is
    ``p.sigma2`` exactly.
    """
    d = np.abs(np.asarray(t1, dtype=float) - np.asarray(t2, dtype=float))
    scaled = math.sqrt(2.0 * p.nu) * d / p.rho
    coef = p.sigma2 * 2.0 ** (1.0 - p.nu) / gamma_fn(p.nu)
    with np.errstate(invalid="ignore"):
        val = coef * scaled**p.nu * kv(p.nu, scaled)
    out = np.where(scaled > 0, val, p.sigma2)
    return float(out) if out.ndim == 0 else out


def matern_cov_matrix(grid: np.ndarray, p: MaternParams) -> np.ndarray:
    """Covariance matrix of the process on ``grid``."""
    g = np.asarray(grid, dtype=float)
    return matern_cov(g[:, None], g[None, :], p)


class GPSampler:
    """Caches the Cholesky factor of a Matern covariance for repeated draws."""

    def __init__(self, grid: np.ndarray, params: MaternParams):
        self.grid = np.asarray(grid, dtype=float)
        self.params = params
        self._factor = _chol_with_jitter(matern_cov_matrix(self.grid, params))

    def draw(self, rng: np.random.Generator, n_streams: int = 1) -> SensorPath:
        z = rng.standard_normal((n_streams, self.grid.size))
        values = z @ self._factor.T
        mask = np.zeros_like(values, dtype=bool)
        streams = tuple(f"x{i}" for i in range(n_streams)) if n_streams > 1 else ("x",)
        return SensorPath(self.grid, values, mask, streams=streams)


def _chol_with_jitter(cov: np.ndarray) -> np.ndarray:
    n = cov.shape[0]
    base = np.trace(cov) / n
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    for scale in _JITTER_SCALES:
        try:
            return np.linalg.cholesky(cov + scale * base * np.eye(n))
        except np.linalg.LinAlgError:
            continue
    raise IllConditionedCovariance(
        f"covariance not factorizable after jitter up to {_JITTER_SCALES[-1]:g}*trace/n"
    )


def sample_gp(grid: np.ndarray, p: MaternParams, seed) -> SensorPath:
    """Draw a mean-zero Gaussian path with Matern covariance on ``grid``.

    Deterministic given ``seed`` (an int or a ``numpy.random.Generator``).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return GPSampler(grid, p).draw(rng)


def true_beta_eval(beta: TrueBeta, s):
    """Evaluate the true effect curve; zero beyond the window length."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("lag s must be nonnegative")
    b0, b1 = beta.params
    if beta.kind == "sine":
        inside = b1 * np.sin(2.0 * np.pi * s / beta.delta - np.pi / 2.0)
    else:
        inside = b0 + np.exp(-b1 * s)
    out = np.where(s <= beta.delta, inside, 0.0)
    return float(out) if out.ndim == 0 else out


def _lag_grid(delta: float, m: int) -> np.ndarray:
    return np.linspace(0.0, delta, m)


def _window_matrix(path: SensorPath, anchors: np.ndarray, s_grid: np.ndarray,
                   window_mode: str = "restrict", stream: int = 0) -> np.ndarray:
    """Sensor values at lags ``s_grid`` before each anchor, nearest-grid reads.

    In ``zero_pad`` mode lags reaching before the path start read as 0.
    """
    dt = path.dt
    t0 = path.grid[0]
    rel = (np.asarray(anchors, dtype=float)[:, None] - s_grid[None, :] - t0) / dt
    idx = np.floor(rel + 0.5).astype(np.int64)
    n = path.grid.size
    if window_mode == "zero_pad":
        valid = (idx >= 0) & (idx < n)
        vals = np.zeros(idx.shape)
        vals[valid] = path.values[stream][idx[valid]]
        return vals
    if np.any(idx < 0) or np.any(idx >= n):
        raise ValueError("anchor window extends outside the path support")
    return path.values[stream][idx]


def hazard_eval(path: SensorPath, beta: TrueBeta, theta0: float, t: float,
                m: int = 64, window_mode: str = "restrict") -> float:
    """Per-grid-step event rate exp(theta0 + integral of X(t-s) beta(s) ds).

    The lag integral uses trapezoid quadrature on ``m`` points over
    [0, beta.delta] with nearest-grid sensor reads.
    """
    return float(hazard_profile(path, beta, theta0, np.array([t]), m=m,
                                window_mode=window_mode)[0])


def hazard_profile(path: SensorPath, beta: TrueBeta, theta0: float,
                   anchors: np.ndarray, m: int = 64,
                   window_mode: str = "restrict") -> np.ndarray:
    """Vectorized ``hazard_eval`` over an array of anchor times."""
    s_grid = _lag_grid(beta.delta, m)
    X = _window_matrix(path, anchors, s_grid, window_mode=window_mode)
    integral = np.trapezoid(X * true_beta_eval(beta, s_grid)[None, :], s_grid, axis=1)
    with np.errstate(over="ignore"):
        return np.exp(theta0 + integral)


def bernoulli_events(grid: np.ndarray, probs: np.ndarray, rng: np.random.Generator,
                     tau: float, subject_id: int = 0) -> EventSet:
    """Draw one event per grid step with the given per-step probabilities.

    Event times are placed at step midpoints so they stay distinct from any
    grid-aligned candidate times drawn later.
    """
    grid = np.asarray(grid, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if probs.size and np.max(probs) > 1.0:
        raise ValueError(
            f"per-step hazard {np.max(probs):.3g} exceeds 1; "
            "discretization too coarse for this rate"
        )
    hits = rng.random(probs.size) < probs
    dt = grid[1] - grid[0] if grid.size > 1 else 0.0
    times = grid[hits] + dt / 2.0
    return EventSet(times=times, tau=tau, subject_id=subject_id)


def generate_events(path: SensorPath, beta: TrueBeta, theta0: float, seed,
                    m: int = 64, window_mode: str = "restrict") -> EventSet:
    """Simulate recurrent events by per-step Bernoulli thinning of the hazard.

    In ``restrict`` mode the subject is only at risk once a full lag window
    fits in the day (t >= delta); ``zero_pad`` treats pre-study sensor values
    as zero and puts the whole day at risk.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    dt = path.dt
    mids = path.grid + dt / 2.0
    if window_mode == "restrict":
        at_risk = mids >= beta.delta
    else:
        at_risk = np.ones_like(mids, dtype=bool)
    anchors = mids[at_risk]
    if anchors.size == 0:
        return EventSet(times=np.empty(0), tau=float(path.grid[-1] + dt),
                        subject_id=path.subject_id)
    probs = hazard_profile(path, beta, theta0, anchors, m=m, window_mode=window_mode)
    tau = float(path.grid[-1] + dt)
    grid_at_risk = path.grid[at_risk]
    return bernoulli_events(grid_at_risk, probs, rng, tau, subject_id=path.subject_id)
