"""Block parameter estimation for CHIP models.

Given community labels, the count mean and variance over the node pairs of
each block pair identify mu and the ratio m = alpha / beta in closed form:

    m_hat  = 1 - sqrt(mean / var)
    mu_hat = sqrt(mean^3 / var) / T

since a stationary pair has E N = mu T / (1 - m) and Var N = mu T / (1 - m)^3
as T grows.  The decay beta is then recovered by a line search on the
likelihood with mu and m pinned, and alpha_hat = beta_hat * m_hat.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.stats import norm

from ._kernels import _loglik_total
from .hawkes import BETA_SEARCH_BOUNDS, BETA_SEARCH_TOL, golden_section_maximize
from .network import CommunityAssignment, EventLog, build_matrices
from .spectral import spectral_cluster_directed

M_CLAMP_MAX = 1.0 - 1e-6
MU_FLOOR = 1e-10


@dataclass(frozen=True)
class BlockPairStats:
    """Count statistics per ordered block pair.

    pair_counts is the number of ordered node pairs in each block pair, self
    pairs excluded; pairs without events count as zeros in mean and var
    (ddof 1).  Entries with fewer than two node pairs have nan variance.
    """

    pair_counts: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    event_counts: np.ndarray


@dataclass(frozen=True)
class MomentEstimates:
    """Closed-form (m, mu) per block pair with degeneracy flags.

    clamped marks entries where m_hat hit the [0, 1 - 1e-6] bounds.
    poisson_fallback marks entries with unusable variance (no pairs, no
    events, or zero variance) where m_hat = 0 and mu_hat = mean / T, floored
    at MU_FLOOR so downstream likelihoods stay finite.
    """

    m: np.ndarray
    mu: np.ndarray
    clamped: np.ndarray
    poisson_fallback: np.ndarray


@dataclass(frozen=True)
class GroupedEvents:
    """Per-pair event times grouped by ordered block pair.

    For block pair (a, b), times[a, b] holds the concatenated times of its
    pairs that have events (pairs ordered by sender * n + receiver) and
    offsets[a, b] the CSR boundaries.  pair_counts includes event-free pairs.
    """

    k: int
    horizon: float
    times: dict
    offsets: dict
    pair_counts: np.ndarray


@dataclass(frozen=True)
class BetaEstimates:
    """Line-search decay estimates; alpha = beta * m.

    unidentified marks block pairs where the likelihood does not depend on
    beta (no events, or m_hat = 0 hence alpha = 0); beta is nan there.
    """

    beta: np.ndarray
    alpha: np.ndarray
    unidentified: np.ndarray


def block_pair_stats(counts, assignment: CommunityAssignment) -> BlockPairStats:
    """Mean and unbiased variance of pair counts for every ordered block pair.

    counts is the directed n x n count matrix (sparse or dense).  Sums are
    aggregated through the membership matrix, so node pairs with zero events
    enter via the pair totals without being materialized.
    """
    member = assignment.membership_matrix()
    counts = sparse.csr_matrix(counts).astype(np.float64)
    squares = counts.multiply(counts)
    sum_ab = np.asarray((member.T @ counts @ member).todense(), dtype=np.float64)
    sumsq_ab = np.asarray((member.T @ squares @ member).todense(), dtype=np.float64)
    sizes = assignment.block_sizes().astype(np.float64)
    pair_counts = np.outer(sizes, sizes) - np.diag(sizes)
    with np.errstate(divide="ignore", invalid="ignore"):
        mean = np.where(pair_counts > 0, sum_ab / pair_counts, np.nan)
        var = np.where(
            pair_counts > 1,
            (sumsq_ab - pair_counts * mean**2) / (pair_counts - 1.0),
            np.nan,
        )
    var = np.where(pair_counts > 1, np.maximum(var, 0.0), var)  # guard rounding
    return BlockPairStats(
        pair_counts=pair_counts.astype(np.int64),
        mean=mean,
        var=var,
        event_counts=np.asarray(np.rint(sum_ab), dtype=np.int64),
    )


def moment_estimates(stats: BlockPairStats, horizon: float) -> MomentEstimates:
    """Invert the count moments into (m_hat, mu_hat) per block pair."""
    if horizon <= 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    mean, var = stats.mean, stats.var
    usable = np.isfinite(mean) & np.isfinite(var) & (mean > 0) & (var > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw_m = 1.0 - np.sqrt(mean / var)
        raw_mu = np.sqrt(mean**3 / var) / horizon
    m = np.where(usable, np.clip(raw_m, 0.0, M_CLAMP_MAX), 0.0)
    fallback_mu = np.where(np.isfinite(mean), mean, 0.0) / horizon
    mu = np.where(usable, raw_mu, fallback_mu)
    mu = np.maximum(mu, MU_FLOOR)
    clamped = usable & (raw_m != m)
    return MomentEstimates(
        m=m, mu=mu, clamped=clamped, poisson_fallback=~usable
    )


def group_by_block_pair(log: EventLog, assignment: CommunityAssignment) -> GroupedEvents:
    """Split an event log into per-pair sequences keyed by block pair."""
    if assignment.n != log.n:
        raise ValueError(f"assignment covers {assignment.n} nodes, log has {log.n}")
    k = assignment.k
    labels = assignment.labels
    block_key = labels[log.senders] * k + labels[log.receivers]
    pair_key = log.senders * np.int64(log.n) + log.receivers
    order = np.lexsort((log.times, pair_key, block_key))
    bk = block_key[order]
    pk = pair_key[order]
    ts = log.times[order]
    seg = np.searchsorted(bk, np.arange(k * k + 1))
    times, offsets = {}, {}
    for a in range(k):
        for b in range(k):
            lo, hi = seg[a * k + b], seg[a * k + b + 1]
            chunk_t = np.ascontiguousarray(ts[lo:hi])
            chunk_p = pk[lo:hi]
            cuts = np.flatnonzero(chunk_p[1:] != chunk_p[:-1]) + 1
            off = np.empty(cuts.size + 2, dtype=np.int64)
            off[0] = 0
            off[1:-1] = cuts
            off[-1] = chunk_t.size
            if chunk_t.size == 0:
                off = np.zeros(1, dtype=np.int64)
            times[(a, b)] = chunk_t
            offsets[(a, b)] = off
    sizes = assignment.block_sizes()
    pair_counts = (np.outer(sizes, sizes) - np.diag(sizes)).astype(np.int64)
    return GroupedEvents(
        k=k, horizon=log.horizon, times=times, offsets=offsets, pair_counts=pair_counts
    )


def fit_beta(
    grouped: GroupedEvents,
    m_hat: np.ndarray,
    mu_hat: np.ndarray,
    bounds: tuple = BETA_SEARCH_BOUNDS,
    tol: float = BETA_SEARCH_TOL,
) -> BetaEstimates:
    """Golden-section search of the profiled likelihood in beta per block pair.

    With alpha = beta * m_hat and mu = mu_hat fixed, the joint likelihood of
    the block pair's sequences is scanned over bounds to absolute tolerance
    tol.  Block pairs whose likelihood is flat in beta (no events or zero
    m_hat) are flagged unidentified with beta = nan and alpha = 0.
    """
    k = grouped.k
    lo, hi = bounds
    if not (0 < lo < hi):
        raise ValueError(f"need 0 < lo < hi, got bounds {bounds}")
    beta = np.full((k, k), np.nan)
    alpha = np.zeros((k, k))
    unidentified = np.zeros((k, k), dtype=bool)
    for a in range(k):
        for b in range(k):
            times = grouped.times[(a, b)]
            offsets = grouped.offsets[(a, b)]
            n_zero = int(grouped.pair_counts[a, b]) - (offsets.size - 1)
            if times.size == 0 or m_hat[a, b] <= 0:
                unidentified[a, b] = True
                continue
            m_ab = float(m_hat[a, b])
            mu_ab = float(mu_hat[a, b])

            def objective(value, _t=times, _o=offsets, _m=m_ab, _mu=mu_ab, _z=n_zero):
                return _loglik_total(
                    _t, _o, _mu, value * _m, value, grouped.horizon, _z
                )

            beta[a, b] = golden_section_maximize(objective, lo, hi, tol)
            alpha[a, b] = beta[a, b] * m_ab
    return BetaEstimates(beta=beta, alpha=alpha, unidentified=unidentified)


def estimate_pi(assignment: CommunityAssignment) -> np.ndarray:
    """Label proportions as the mixing weight estimate."""
    return assignment.block_sizes() / assignment.n


@dataclass(frozen=True)
class IntervalTable:
    """Simultaneous confidence intervals; arrays aligned with rows."""

    rows: list
    theta: float


def m_confidence_intervals(
    stats: BlockPairStats, m_hat: np.ndarray, theta: float = 0.05
):
    """Simultaneous normal intervals for every m_ab at joint level 1 - theta.

    The asymptotic variance of m_hat is 1 / (4 nu n_ab), estimated by
    plugging the observed mean for nu; Bonferroni splits theta over the k^2
    entries.  Returns (half_width, z) with nan half-width where the mean or
    pair count is zero.
    """
    k = m_hat.shape[0]
    z = float(norm.ppf(1.0 - theta / (2.0 * k * k)))
    n_ab = stats.pair_counts.astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        half = z * np.sqrt(1.0 / (4.0 * n_ab * stats.mean))
    half = np.where((n_ab > 0) & (stats.mean > 0), half, np.nan)
    return half, z


def mu_difference_intervals(
    stats: BlockPairStats, mu_hat: np.ndarray, horizon: float, theta: float = 0.05
) -> IntervalTable:
    """Simultaneous intervals for diagonal vs off-diagonal mu contrasts.

    For every ordered block pair (a, b), a != b, the two contrasts
    mu[a, a] - mu[a, b] and mu[a, a] - mu[b, a] are covered, 2 k (k - 1)
    intervals in total, using the asymptotic variance (9/4) nu / n_ab of
    mu_hat T with the observed mean plugged in for nu.
    """
    k = mu_hat.shape[0]
    if k < 2:
        return IntervalTable(rows=[], theta=theta)
    z = float(norm.ppf(1.0 - theta / (4.0 * k * (k - 1))))
    n_ab = stats.pair_counts.astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        var_term = 2.25 * stats.mean / n_ab
    rows = []
    for a in range(k):
        for b in range(k):
            if a == b:
                continue
            for other in ((a, b), (b, a)):
                diff = mu_hat[a, a] - mu_hat[other]
                half = (
                    z / horizon * np.sqrt(var_term[a, a] + var_term[other])
                )
                rows.append(
                    {
                        "diagonal": (a, a),
                        "off_diagonal": other,
                        "difference": float(diff),
                        "half_width": float(half),
                        "significant": bool(abs(diff) > half),
                    }
                )
    return IntervalTable(rows=rows, theta=theta)


@dataclass(frozen=True)
class ChipFit:
    """Full estimation output for one event log and one k."""

    assignment: CommunityAssignment
    stats: BlockPairStats
    pi: np.ndarray
    mu: np.ndarray
    m: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    flags: dict = field(default_factory=dict)

    def params_dict(self) -> dict:
        def listed(x):
            return np.where(np.isfinite(x), x, None).tolist() if x.dtype.kind == "f" else x.tolist()

        return {
            "k": self.assignment.k,
            "n": self.assignment.n,
            "pi": self.pi.tolist(),
            "mu": listed(self.mu),
            "m": listed(self.m),
            "alpha": listed(self.alpha),
            "beta": listed(self.beta),
            "flags": {name: mask.tolist() for name, mask in self.flags.items()},
        }


def fit_chip(
    log: EventLog,
    k: int,
    seed: int = 0,
    matrix: str = "weighted",
    beta_bounds: tuple = BETA_SEARCH_BOUNDS,
    isolated_to_largest: bool = False,
    assignment: CommunityAssignment | None = None,
) -> ChipFit:
    """Estimate communities and all block parameters from one event log.

    Clusters the directed count matrix (matrix="weighted") or its
    binarization (matrix="binary"), then runs the moment estimators and the
    beta line search per block pair.  A precomputed assignment skips the
    clustering step.  With isolated_to_largest, nodes that appear in no
    event are reassigned to the largest detected block before parameter
    estimation, which stabilizes evaluation on held-out data.
    """
    if matrix not in ("weighted", "binary"):
        raise ValueError(f"matrix must be 'weighted' or 'binary', got {matrix!r}")
    counts, adjacency = build_matrices(log, mode="directed")
    if assignment is None:
        target = counts if matrix == "weighted" else adjacency
        assignment = spectral_cluster_directed(target, k, seed=seed)
    elif assignment.n != log.n or assignment.k != k:
        raise ValueError(
            f"assignment covers {assignment.n} nodes in {assignment.k} blocks, "
            f"expected {log.n} nodes in {k}"
        )
    if isolated_to_largest and len(log):
        degree = np.bincount(log.senders, minlength=log.n) + np.bincount(
            log.receivers, minlength=log.n
        )
        isolated = degree == 0
        if isolated.any():
            active_sizes = np.bincount(assignment.labels[~isolated], minlength=k)
            labels = assignment.labels.copy()
            labels[isolated] = int(np.argmax(active_sizes))
            assignment = CommunityAssignment(labels=labels, k=k)
    stats = block_pair_stats(counts, assignment)
    moments = moment_estimates(stats, log.horizon)
    grouped = group_by_block_pair(log, assignment)
    decay = fit_beta(grouped, moments.m, moments.mu, bounds=beta_bounds)
    return ChipFit(
        assignment=assignment,
        stats=stats,
        pi=estimate_pi(assignment),
        mu=moments.mu,
        m=moments.m,
        alpha=decay.alpha,
        beta=decay.beta,
        flags={
            "m_clamped": moments.clamped,
            "poisson_fallback": moments.poisson_fallback,
            "beta_unidentified": decay.unidentified,
        },
    )
