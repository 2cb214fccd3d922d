"""Univariate Hawkes processes with exponential excitation.

The conditional intensity is

    lambda(t) = mu + alpha * sum_{t_i < t} exp(-beta (t - t_i))

with background rate mu > 0, jump size alpha >= 0 and decay beta > 0.  The
process is stationary iff alpha < beta; the ratio alpha / beta is the
expected number of direct offspring per event.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import _loglik_one, _loglik_total, _sim_pair

BETA_SEARCH_BOUNDS = (1e-6, 1e4)
BETA_SEARCH_TOL = 1e-6


@dataclass(frozen=True)
class HawkesParams:
    """Parameter triple of one process; validated at construction."""

    mu: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise ValueError(f"mu must be finite and > 0, got {self.mu}")
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be finite and > 0, got {self.beta}")

    @property
    def branching_ratio(self) -> float:
        return self.alpha / self.beta

    def is_stationary(self) -> bool:
        return self.alpha < self.beta


@dataclass(frozen=True)
class EventTimes:
    """Strictly increasing event times on the window [0, horizon]."""

    times: np.ndarray
    horizon: float

    def __post_init__(self):
        times = np.ascontiguousarray(self.times, dtype=np.float64)
        object.__setattr__(self, "times", times)
        if times.ndim != 1:
            raise ValueError("times must be a 1-d array")
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be finite and > 0, got {self.horizon}")
        if times.size:
            if not np.all(np.isfinite(times)):
                raise ValueError("event times must be finite")
            if times[0] < 0 or times[-1] > self.horizon:
                raise ValueError("event times must lie in [0, horizon]")
            if np.any(np.diff(times) <= 0):
                raise ValueError("event times must be strictly increasing")

    def __len__(self) -> int:
        return int(self.times.size)


def intensity_at(params: HawkesParams, events: EventTimes, t: float) -> float:
    """Conditional intensity at time t given the strictly earlier events.

    An event exactly at t does not contribute (the kernel is left-open), so
    the intensity evaluated at an event time is the pre-jump value.
    """
    if not 0 <= t <= events.horizon:
        raise ValueError(f"t={t} outside the observation window [0, {events.horizon}]")
    past = events.times[: np.searchsorted(events.times, t, side="left")]
    with np.errstate(under="ignore"):
        excite = float(np.exp(-params.beta * (t - past)).sum())
    return params.mu + params.alpha * excite


def simulate(params: HawkesParams, horizon: float, rng: np.random.Generator) -> EventTimes:
    """Draw one realization on [0, horizon] by Ogata thinning.

    Exact for any parameter values, stationary or not.  The only use of rng
    is a single integer draw that seeds the internal stream, so a given
    Generator state always yields the same realization.
    """
    if not (np.isfinite(horizon) and horizon > 0):
        raise ValueError(f"horizon must be finite and > 0, got {horizon}")
    seed = np.uint64(rng.integers(0, np.iinfo(np.int64).max, dtype=np.int64))
    times = _sim_pair(seed, 0, 1, params.mu, params.alpha, params.beta, float(horizon))
    return EventTimes(times=times, horizon=float(horizon))


def log_likelihood(params: HawkesParams, events: EventTimes) -> float:
    """Exact log-likelihood of events under params, O(len(events)).

    Uses the recursion w(q) = exp(-beta (t_q - t_{q-1})) (1 + w(q-1)) for the
    accumulated excitation, equivalent to the quadratic double sum.
    """
    return float(
        _loglik_one(events.times, params.mu, params.alpha, params.beta, events.horizon)
    )


def _as_time_arrays(sequences) -> list[np.ndarray]:
    out = []
    for seq in sequences:
        times = seq.times if isinstance(seq, EventTimes) else seq
        out.append(np.ascontiguousarray(times, dtype=np.float64))
    return out


def profiled_log_likelihood(
    beta: float,
    m: float,
    mu: float,
    sequences,
    horizon: float,
    n_zero_pairs: int = 0,
) -> float:
    """Joint log-likelihood of independent sequences with alpha = beta * m.

    This is the objective of the decay line search: mu and m are held at
    their moment estimates and only beta varies.  sequences is an iterable of
    EventTimes or plain time arrays all sharing the same window [0, horizon];
    n_zero_pairs adds that many empty sequences (each contributes
    -mu * horizon) without materializing them.
    """
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    arrays = _as_time_arrays(sequences)
    flat = np.concatenate(arrays) if arrays else np.empty(0, dtype=np.float64)
    offsets = np.zeros(len(arrays) + 1, dtype=np.int64)
    if arrays:
        np.cumsum([a.size for a in arrays], out=offsets[1:])
    return float(
        _loglik_total(
            flat, offsets, mu, beta * m, beta, float(horizon), int(n_zero_pairs)
        )
    )


def golden_section_maximize(f, lo: float, hi: float, tol: float) -> float:
    """Locate the maximizer of a unimodal f on [lo, hi] to absolute tol."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = f(x1)
    return 0.5 * (a + b)
