"""Closed-form misclustering bounds for two-level CHIP models.

All quantities refer to the simplified parameterization with one diagonal
and one off-diagonal level: block pair rates mu_1 (within) and mu_2
(between), ratios m_1 and m_2, balanced blocks of size n / k.  The bounds
are rates up to absolute constants: they order regimes and scale correctly
in (n, T, k) but are not sharp numerical guarantees.

Per-unit-time stationary moments are nu_i = mu_i / (1 - m_i) for the mean
and sigma_i^2 = mu_i / (1 - m_i)^3 for the variance; over a window T the
count moments are nu_i T and sigma_i^2 T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import CommunityAssignment

TAYLOR_SPARSITY_THRESHOLD = 0.05


def asymptotic_moments(mu, m, horizon: float = 1.0):
    """Stationary count mean and variance over a window of length horizon."""
    mu = np.asarray(mu, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 0) or np.any(m >= 1):
        raise ValueError("m must lie in [0, 1)")
    nu = mu * horizon / (1.0 - m)
    sigma2 = mu * horizon / (1.0 - m) ** 3
    return nu, sigma2


@dataclass(frozen=True)
class SimplifiedRates:
    """Inputs of the two-level theory: sizes, rates, ratios and the window."""

    n: int
    k: int
    mu_diag: float
    mu_off: float
    m_diag: float
    m_off: float
    horizon: float

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ValueError(f"need n >= 1 and k >= 1, got n={self.n}, k={self.k}")
        if self.mu_diag <= 0 or self.mu_off <= 0:
            raise ValueError("rates must be > 0")
        for m in (self.m_diag, self.m_off):
            if not 0 <= m < 1:
                raise ValueError(f"m must lie in [0, 1), got {m}")
        if self.horizon <= 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")

    @property
    def nu_diag(self) -> float:
        return self.mu_diag / (1.0 - self.m_diag)

    @property
    def nu_off(self) -> float:
        return self.mu_off / (1.0 - self.m_off)

    @property
    def sigma2_diag(self) -> float:
        return self.mu_diag / (1.0 - self.m_diag) ** 3


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound: the selected value plus both closed forms.

    regime is "taylor" when the sparse first-order form was selected
    (mu_diag * T at or below the sparsity threshold), "exact" otherwise, and
    "rate" for bounds with a single form.  infinite marks a vanishing
    denominator (no separation between the two levels): the bound is vacuous
    and value is inf.
    """

    value: float
    exact: float
    taylor: float
    regime: str
    infinite: bool


def binary_misclustering_bound(rates: SimplifiedRates) -> BoundReport:
    """Misclustering rate bound when clustering the binarized matrix.

    Only the zero/nonzero pattern matters, so the bound depends on the
    background rates alone: a pair is silent with probability exp(-mu T).
    Equal rates leave nothing to separate and the bound is infinite.
    """
    n, k, t = rates.n, rates.k, rates.horizon
    p_gap = np.exp(-rates.mu_off * t) - np.exp(-rates.mu_diag * t)
    mu_gap = rates.mu_diag - rates.mu_off
    if p_gap == 0.0 or mu_gap == 0.0:
        return BoundReport(
            value=np.inf, exact=np.inf, taylor=np.inf, regime="exact", infinite=True
        )
    exact = (k * k / n) * (1.0 - np.exp(-rates.mu_diag * t)) / p_gap**2
    taylor = (k * k / (n * t)) * rates.mu_diag / mu_gap**2
    sparse = rates.mu_diag * t <= TAYLOR_SPARSITY_THRESHOLD
    return BoundReport(
        value=taylor if sparse else exact,
        exact=exact,
        taylor=taylor,
        regime="taylor" if sparse else "exact",
        infinite=False,
    )


def weighted_misclustering_bound(rates: SimplifiedRates) -> BoundReport:
    """Misclustering rate bound when clustering the count matrix.

    Counts separate blocks through the stationary means nu_1 and nu_2, with
    the count variance sigma_1^2 as the noise scale; differences in the
    ratio m alone still move nu, so the bound stays finite when only the
    excitation differs.
    """
    n, k, t = rates.n, rates.k, rates.horizon
    nu_gap = rates.nu_diag - rates.nu_off
    if nu_gap == 0.0:
        return BoundReport(
            value=np.inf, exact=np.inf, taylor=np.inf, regime="rate", infinite=True
        )
    value = (k * k / (n * t)) * rates.sigma2_diag / nu_gap**2
    return BoundReport(
        value=value, exact=value, taylor=value, regime="rate", infinite=False
    )


def noise_constants(mu, m, block_sizes, horizon: float):
    """Spectral noise scales (s, s1) of the count matrix.

    s bounds the row-wise count standard deviation,
    sqrt(T) max_a sqrt(sum_b |b| mu_ab / (1 - m_ab)^3), and s1 the largest
    single-pair standard deviation sqrt(T) max_ab sqrt(mu_ab / (1 - m_ab)^3).
    """
    mu = np.asarray(mu, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    sizes = np.asarray(block_sizes, dtype=np.float64)
    _, sigma2 = asymptotic_moments(mu, m, 1.0)
    row_var = (sigma2 * sizes[None, :]).sum(axis=1)
    s = float(np.sqrt(horizon) * np.sqrt(row_var.max()))
    s1 = float(np.sqrt(horizon) * np.sqrt(sigma2.max()))
    return s, s1


def _two_level(k: int, diag: float, off: float) -> np.ndarray:
    return np.full((k, k), off) + (diag - off) * np.eye(k)


def population_matrices(rates: SimplifiedRates, assignment: CommunityAssignment | None = None):
    """Expected count and adjacency matrices of the two-level model.

    Entry (i, j) is nu_{c_i c_j} T for counts and 1 - exp(-mu_{c_i c_j} T)
    for the adjacency (a pair is active unless its background process stays
    silent).  The diagonal is kept so the matrices have the exact rank-k
    block structure the spectral theory refers to; observed matrices have
    structural zeros there instead.
    """
    if assignment is None:
        if rates.n % rates.k != 0:
            raise ValueError(
                f"balanced blocks need k | n, got n={rates.n}, k={rates.k}"
            )
        labels = np.repeat(np.arange(rates.k), rates.n // rates.k)
        assignment = CommunityAssignment(labels=labels, k=rates.k)
    labels = assignment.labels
    nu = _two_level(rates.k, rates.nu_diag, rates.nu_off)
    mu = _two_level(rates.k, rates.mu_diag, rates.mu_off)
    expected_counts = nu[np.ix_(labels, labels)] * rates.horizon
    expected_adjacency = 1.0 - np.exp(-mu[np.ix_(labels, labels)] * rates.horizon)
    return expected_counts, expected_adjacency


@dataclass(frozen=True)
class PopulationEigen:
    """k-th largest eigenvalues of the expected matrices, balanced blocks."""

    counts: float
    adjacency: float


def population_eigen(rates: SimplifiedRates) -> PopulationEigen:
    """Closed-form smallest informative eigenvalue of E[N] and E[A].

    For exactly balanced blocks both expected matrices are block-constant
    with k nonzero eigenvalues; the smallest of these is (n / k) times the
    gap between the diagonal and off-diagonal entry values.
    """
    n, k, t = rates.n, rates.k, rates.horizon
    counts = (n / k) * (rates.nu_diag - rates.nu_off) * t
    adjacency = (n / k) * (
        np.exp(-rates.mu_off * t) - np.exp(-rates.mu_diag * t)
    )
    return PopulationEigen(counts=float(counts), adjacency=float(adjacency))
