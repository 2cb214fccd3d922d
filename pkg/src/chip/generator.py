"""Sampling event networks from the CHIP model.

Under CHIP (Community Hawkes Independent Pairs), each node draws a community
label from Categorical(pi) and every ordered node pair (i, j), i != j, then
generates events from its own Hawkes process with block parameters
(mu, alpha, beta)[c_i, c_j], independently of all other pairs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._kernels import _sim_network
from .network import CommunityAssignment, EventLog


@dataclass(frozen=True)
class ChipModelSpec:
    """Full CHIP parameterization: k x k block matrices plus label weights."""

    n: int
    k: int
    pi: np.ndarray
    mu: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    horizon: float

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ValueError(f"need n >= 1 and k >= 1, got n={self.n}, k={self.k}")
        pi = np.ascontiguousarray(self.pi, dtype=np.float64)
        if pi.shape != (self.k,) or np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise ValueError("pi must be a length-k nonnegative vector summing to 1")
        mats = {}
        for name in ("mu", "alpha", "beta"):
            mat = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if mat.shape != (self.k, self.k) or not np.all(np.isfinite(mat)):
                raise ValueError(f"{name} must be a finite (k, k) matrix")
            mats[name] = mat
        if np.any(mats["mu"] <= 0):
            raise ValueError("mu must be > 0 elementwise")
        if np.any(mats["alpha"] < 0):
            raise ValueError("alpha must be >= 0 elementwise")
        if np.any(mats["beta"] <= 0):
            raise ValueError("beta must be > 0 elementwise")
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be finite and > 0, got {self.horizon}")
        object.__setattr__(self, "pi", pi)
        for name, mat in mats.items():
            object.__setattr__(self, name, mat)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "horizon", float(self.horizon))

    def branching_ratios(self) -> np.ndarray:
        return self.alpha / self.beta


@dataclass(frozen=True)
class SimplifiedSpec:
    """Two-value parameterization: one diagonal and one off-diagonal level.

    Every block matrix is mu_off (etc.) everywhere except mu_diag on the
    diagonal, and the label distribution is uniform.  This is the shape used
    throughout the simulation studies.
    """

    n: int
    k: int
    mu_diag: float
    mu_off: float
    alpha_diag: float
    alpha_off: float
    beta_diag: float
    beta_off: float
    horizon: float


def expand_simplified(spec: SimplifiedSpec) -> ChipModelSpec:
    """Materialize the k x k matrices of a two-value parameterization."""
    k = spec.k

    def two_level(diag, off):
        return np.full((k, k), off) + (diag - off) * np.eye(k)

    return ChipModelSpec(
        n=spec.n,
        k=k,
        pi=np.full(k, 1.0 / k),
        mu=two_level(spec.mu_diag, spec.mu_off),
        alpha=two_level(spec.alpha_diag, spec.alpha_off),
        beta=two_level(spec.beta_diag, spec.beta_off),
        horizon=spec.horizon,
    )


def sample_communities(spec: ChipModelSpec, rng: np.random.Generator) -> CommunityAssignment:
    """Draw node labels iid from Categorical(spec.pi)."""
    labels = rng.choice(spec.k, size=spec.n, p=spec.pi)
    return CommunityAssignment(labels=labels.astype(np.int64), k=spec.k)


def balanced_assignment(n: int, k: int) -> CommunityAssignment:
    """Deterministic round-robin labels with block sizes differing by <= 1."""
    return CommunityAssignment(labels=np.arange(n, dtype=np.int64) % k, k=k)


def _expected_event_count(spec: ChipModelSpec, assignment: CommunityAssignment) -> float:
    """Rough expected total count used only to size simulation buffers."""
    sizes = assignment.block_sizes().astype(np.float64)
    pair_counts = np.outer(sizes, sizes) - np.diag(sizes)
    m = np.minimum(spec.branching_ratios(), 0.9)
    nu = spec.mu * spec.horizon / (1.0 - m)
    return float(np.sum(pair_counts * nu))


def sample_network(
    spec: ChipModelSpec, assignment: CommunityAssignment, seed: int
) -> EventLog:
    """Simulate all ordered pairs of a CHIP network with fixed labels.

    The events of pair (i, j) are a pure function of (seed, i, j) and the
    pair's block parameters, so a fixed seed reproduces the log exactly and
    individual pairs are mutually independent.  Nonstationary block pairs
    (alpha >= beta) are simulated as-is after a warning.
    """
    if assignment.n != spec.n:
        raise ValueError(f"assignment covers {assignment.n} nodes, spec has {spec.n}")
    if assignment.k != spec.k:
        raise ValueError(f"assignment has k={assignment.k}, spec has k={spec.k}")
    if np.any(spec.alpha >= spec.beta):
        warnings.warn(
            "some block pairs are nonstationary (alpha >= beta); "
            "event counts may be extreme",
            UserWarning,
            stacklevel=2,
        )
    cap_hint = int(1.3 * _expected_event_count(spec, assignment)) + 1024
    senders, receivers, times = _sim_network(
        assignment.labels,
        spec.mu,
        spec.alpha,
        spec.beta,
        spec.horizon,
        np.uint64(seed),
        cap_hint,
    )
    return EventLog(
        senders=senders,
        receivers=receivers,
        times=times,
        n=spec.n,
        horizon=spec.horizon,
    )
