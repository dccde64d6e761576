"""Poisson subsampling of non-event times, thinning, and design-unbiased
estimators of the cumulative-hazard derivative.

Intensities are expressed per study-time unit.  Sampling intensities are
recorded at draw time so downstream thinning or serialization cannot
desynchronize the design from the data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "SamplingDesign",
    "SampleSet",
    "draw_samples",
    "thin",
    "weight",
    "ht_estimator",
    "wp_estimator",
]

# sampled times closer than this to an event time are re-drawn
_COINCIDENCE_TOL = 1e-12


@dataclass(frozen=True)
class SamplingDesign:
    """Sampling-intensity specification.

    ``constant_rate`` draws a homogeneous Poisson process with intensity
    ``rate_or_c``; ``proportional_to_hazard`` uses pi(t) = c * h(t) with
    c = ``rate_or_c`` and a supplied pilot hazard.  ``bounds`` are the
    admissible intensity bounds (L, U) the realized pi must respect.
    """

    kind: str
    rate_or_c: float
    bounds: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("constant_rate", "proportional_to_hazard"):
            raise ValueError(f"unknown design kind: {self.kind!r}")
        if not self.rate_or_c > 0:
            raise ValueError("rate_or_c must be positive")
        if self.bounds is not None:
            lo, hi = self.bounds
            if not (0 < lo <= hi < np.inf):
                raise ValueError("bounds must satisfy 0 < L <= U < inf")


@dataclass
class SampleSet:
    """Sampled non-event times with their sampling intensity."""

    times: np.ndarray
    pi_values: np.ndarray
    subject_id: int = 0
    pi_fn: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.pi_values = np.asarray(self.pi_values, dtype=float)
        if self.times.size and np.any(np.diff(self.times) <= 0):
            raise ValueError("sampled times must be strictly increasing")
        if self.times.shape != self.pi_values.shape:
            raise ValueError("pi_values must align with times")
        if np.any(self.pi_values <= 0):
            raise ValueError("sampling intensities must be positive")

    def __len__(self) -> int:
        return self.times.size


def _homogeneous_times(rate: float, start: float, end: float,
                       rng: np.random.Generator) -> np.ndarray:
    """Exponential inter-arrival times at ``rate`` on (start, end], vectorized
    with block extension for the rare short draw."""
    length = end - start
    if length <= 0 or rate <= 0:
        return np.empty(0)
    block = int(np.ceil(rate * length + 10.0 * np.sqrt(rate * length) + 10.0))
    gaps = rng.exponential(1.0 / rate, size=block)
    times = start + np.cumsum(gaps)
    while times.size == 0 or times[-1] <= end:
        more = start if times.size == 0 else times[-1]
        extra = more + np.cumsum(rng.exponential(1.0 / rate, size=block))
        times = np.concatenate([times, extra])
    return times[times <= end]


def draw_samples(design: SamplingDesign, tau: float,
                 hazard: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 seed=None, start: float = 0.0,
                 avoid: Optional[np.ndarray] = None,
                 subject_id: int = 0) -> SampleSet:
    """Draw non-event sampling times on (start, tau] under ``design``.

    The proportional design thins a homogeneous candidate process at the
    upper bound U, which requires ``hazard`` (per study-time unit) and
    errors out if c * h(t) exceeds U at a candidate time.  Candidate times
    within 1e-12 of an ``avoid`` time (event times) are re-drawn.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if design.kind == "constant_rate":
        rate = design.rate_or_c
        if design.bounds is not None and not (design.bounds[0] <= rate <= design.bounds[1]):
            raise ValueError("constant rate outside design bounds")
        times = _homogeneous_times(rate, start, tau, rng)
        pi = np.full(times.shape, rate)
        pi_fn = _ConstantPi(rate)
    else:
        if hazard is None:
            raise ValueError("proportional design requires a pilot hazard")
        if design.bounds is None:
            raise ValueError("proportional design requires intensity bounds")
        lo, hi = design.bounds
        c = design.rate_or_c
        cand = _homogeneous_times(hi, start, tau, rng)
        pi_cand = c * np.asarray(hazard(cand), dtype=float)
        if pi_cand.size and np.max(pi_cand) > hi * (1 + 1e-12):
            raise ValueError(
                f"realized intensity {np.max(pi_cand):.4g} exceeds upper bound {hi:.4g}"
            )
        keep = rng.random(cand.size) * hi < pi_cand
        times = cand[keep]
        pi = pi_cand[keep]
        if pi.size and np.min(pi) < lo * (1 - 1e-12):
            raise ValueError("realized intensity fell below lower bound")
        pi_fn = _ProportionalPi(c, hazard)
    if avoid is not None and times.size:
        times, pi = _redraw_coincident(times, pi, np.asarray(avoid, dtype=float),
                                       pi_fn, start, tau, rng)
    return SampleSet(times=times, pi_values=pi, subject_id=subject_id, pi_fn=pi_fn)


class _ConstantPi:
    def __init__(self, rate: float):
        self.rate = rate

    def __call__(self, t):
        return np.full(np.shape(t), self.rate)


class _ProportionalPi:
    def __init__(self, c: float, hazard):
        self.c = c
        self.hazard = hazard

    def __call__(self, t):
        return self.c * np.asarray(self.hazard(t), dtype=float)


class _ScaledPi:
    def __init__(self, keep_prob: float, inner):
        self.keep_prob = keep_prob
        self.inner = inner

    def __call__(self, t):
        return self.keep_prob * self.inner(t)


def _redraw_coincident(times, pi, avoid, pi_fn, start, tau, rng):
    """Replace sampled times that collide with event times (measure-zero,
    made explicit) by fresh uniform draws."""
    for _ in range(100):
        bad = np.any(np.abs(times[:, None] - avoid[None, :]) < _COINCIDENCE_TOL, axis=1)
        if not np.any(bad):
            break
        fresh = rng.uniform(start, tau, size=int(bad.sum()))
        times = np.sort(np.concatenate([times[~bad], fresh]))
        pi = np.asarray(pi_fn(times), dtype=float)
    return times, pi


def thin(s: SampleSet, keep_prob: float, seed) -> SampleSet:
    """Independently retain each sampled time with probability ``keep_prob``.

    The result is a Poisson process with intensity scaled by ``keep_prob``,
    and the stored intensities are rescaled to match.  Calling with the same
    seed on the same base set yields nested subsets across keep levels.
    """
    if not (0 < keep_prob <= 1):
        raise ValueError("keep_prob must lie in (0, 1]")
    if keep_prob == 1.0:
        return SampleSet(times=s.times.copy(), pi_values=s.pi_values.copy(),
                         subject_id=s.subject_id, pi_fn=s.pi_fn)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    keep = rng.random(len(s)) < keep_prob
    pi_fn = _ScaledPi(keep_prob, s.pi_fn) if s.pi_fn is not None else None
    return SampleSet(times=s.times[keep], pi_values=keep_prob * s.pi_values[keep],
                     subject_id=s.subject_id, pi_fn=pi_fn)


def weight(pi, h):
    """Superposition weight pi / (pi + h), in (0, 1]."""
    pi = np.asarray(pi, dtype=float)
    h = np.asarray(h, dtype=float)
    if np.any(pi <= 0):
        raise ValueError("pi must be positive")
    if np.any(h < 0):
        raise ValueError("h must be nonnegative")
    out = pi / (pi + h)
    return float(out) if out.ndim == 0 else out


def ht_estimator(samples: SampleSet, dh: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Inverse-intensity-weighted sum of ``dh`` over the sampled times.

    ``dh`` maps a time array of shape (n,) to gradients of shape (n, p).
    """
    grads = np.atleast_2d(np.asarray(dh(samples.times), dtype=float))
    if samples.times.size == 0:
        return np.zeros(grads.shape[1] if grads.ndim == 2 else 0)
    return (grads / samples.pi_values[:, None]).sum(axis=0)


def wp_estimator(samples: SampleSet, events, dh, h,
                 pi: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> np.ndarray:
    """Superposition estimator: sum of dh(u) / (pi(u) + h(u)) over sampled
    and event times.

    Event-time intensities come from ``pi`` or, when omitted, from the
    sample set's recorded design.  ``h`` maps times to hazard values.
    """
    ev_times = np.asarray(events.times, dtype=float)
    if ev_times.size:
        pi_fn = pi if pi is not None else samples.pi_fn
        if pi_fn is None:
            raise ValueError("event times present: need pi callable or a sample "
                             "set with a recorded design")
        ev_pi = np.asarray(pi_fn(ev_times), dtype=float)
    else:
        ev_pi = np.empty(0)
    times = np.concatenate([samples.times, ev_times])
    pis = np.concatenate([samples.pi_values, ev_pi])
    if times.size == 0:
        grads = np.atleast_2d(np.asarray(dh(times), dtype=float))
        return np.zeros(grads.shape[1])
    hs = np.asarray(h(times), dtype=float)
    grads = np.atleast_2d(np.asarray(dh(times), dtype=float))
    return (grads / (pis + hs)[:, None]).sum(axis=0)
