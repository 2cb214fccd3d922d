"""Held-out likelihood evaluation.

The protocol fits on the chronological head of an event log and scores the
tail: with T_train the last training timestamp and T the last timestamp
overall, the test score is

    (loglik(all events on [0, T]) - loglik(train events on [0, T_train])) / l_test

which is the average log-density of a held-out event given the training
history.  The Poisson baseline replaces each block pair's process with a
constant rate fitted on the same split and labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import _loglik_pairs
from .estimation import MU_FLOOR, block_pair_stats, fit_chip, group_by_block_pair
from .network import CommunityAssignment, EventLog, build_matrices

POISSON_RATE_FLOOR = 1e-12


@dataclass(frozen=True)
class SplitLog:
    """Chronological train/test split of one event log.

    train ends at its last event (horizon T_train); full carries every event
    with horizon T equal to the overall last timestamp; test holds the
    held-out tail for counting, with the same horizon T.
    """

    train: EventLog
    test: EventLog
    full: EventLog


def split_by_count(
    log: EventLog,
    test_count: int | None = None,
    test_fraction: float | None = None,
) -> SplitLog:
    """Split chronologically so the last test_count events are held out.

    Exactly one of test_count and test_fraction must be given; a fraction f
    puts floor(l * (1 - f)) events in train.  Both sides must be nonempty.
    """
    if (test_count is None) == (test_fraction is None):
        raise ValueError("give exactly one of test_count and test_fraction")
    total = len(log)
    if test_fraction is not None:
        if not 0 < test_fraction < 1:
            raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
        test_count = total - int(np.floor(total * (1.0 - test_fraction)))
    test_count = int(test_count)
    if not 1 <= test_count <= total - 1:
        raise ValueError(
            f"test_count must leave both sides nonempty, got {test_count} of {total}"
        )
    cut = total - test_count
    t_train = float(log.times[cut - 1])
    t_full = float(log.times[-1])
    train = EventLog(
        senders=log.senders[:cut],
        receivers=log.receivers[:cut],
        times=log.times[:cut],
        n=log.n,
        horizon=t_train,
    )
    test = EventLog(
        senders=log.senders[cut:],
        receivers=log.receivers[cut:],
        times=log.times[cut:],
        n=log.n,
        horizon=t_full,
    )
    full = EventLog(
        senders=log.senders,
        receivers=log.receivers,
        times=log.times,
        n=log.n,
        horizon=t_full,
    )
    return SplitLog(train=train, test=test, full=full)


def full_log_likelihood(
    mu: np.ndarray,
    alpha: np.ndarray,
    beta: np.ndarray,
    assignment: CommunityAssignment,
    log: EventLog,
) -> float:
    """Joint log-likelihood of every ordered pair process in the log.

    Pairs without events contribute their -mu T term analytically.  mu is
    floored at MU_FLOOR; block pairs with alpha = 0 may carry nan beta (the
    decay is unidentified there) and are evaluated with a dummy decay since
    the likelihood does not depend on it.
    """
    grouped = group_by_block_pair(log, assignment)
    k = grouped.k
    total = 0.0
    for a in range(k):
        for b in range(k):
            mu_ab = max(float(mu[a, b]), MU_FLOOR)
            alpha_ab = float(alpha[a, b])
            beta_ab = float(beta[a, b])
            if not np.isfinite(beta_ab) or beta_ab <= 0:
                if alpha_ab != 0.0:
                    raise ValueError(
                        f"block pair ({a}, {b}) has alpha != 0 but invalid beta {beta_ab}"
                    )
                beta_ab = 1.0
            times = grouped.times[(a, b)]
            offsets = grouped.offsets[(a, b)]
            n_zero = int(grouped.pair_counts[a, b]) - (offsets.size - 1)
            per_pair = _loglik_pairs(times, offsets, mu_ab, alpha_ab, beta_ab, log.horizon)
            total += float(np.sum(per_pair)) + n_zero * (-mu_ab * log.horizon)
    return total


@dataclass(frozen=True)
class EvalReport:
    """Result of one held-out evaluation run."""

    model: str
    k: int
    test_loglik_per_event: float
    loglik_full: float
    loglik_train: float
    n_train_events: int
    n_test_events: int
    n_nodes: int
    seed: int
    train_horizon: float
    full_horizon: float

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "k": self.k,
            "test_loglik_per_event": self.test_loglik_per_event,
            "loglik_full": self.loglik_full,
            "loglik_train": self.loglik_train,
            "n_train_events": self.n_train_events,
            "n_test_events": self.n_test_events,
            "n_nodes": self.n_nodes,
            "seed": self.seed,
            "train_horizon": self.train_horizon,
            "full_horizon": self.full_horizon,
        }


def _eval_assignment(train: EventLog, k: int, seed: int, matrix: str):
    """Cluster the training log the same way for every model.

    Nodes without any training event are reassigned to the largest detected
    block, matching the treatment of previously unseen nodes.
    """
    fit = fit_chip(train, k, seed=seed, matrix=matrix, isolated_to_largest=True)
    return fit


def mean_test_loglik_per_event(
    split: SplitLog,
    k: int,
    seed: int = 0,
    model: str = "chip",
    matrix: str = "weighted",
) -> EvalReport:
    """Fit on the training window and score the held-out tail per event.

    model "chip" fits the full block Hawkes parameterization; "poisson" fits
    one constant rate per block pair (the block pair's training mean count
    over T_train, floored at POISSON_RATE_FLOOR).  Both share the same
    spectral clustering of the training counts.
    """
    if model not in ("chip", "poisson"):
        raise ValueError(f"model must be 'chip' or 'poisson', got {model!r}")
    fit = _eval_assignment(split.train, k, seed, matrix)
    assignment = fit.assignment
    t_train = split.train.horizon
    t_full = split.full.horizon
    if model == "chip":
        ll_full = full_log_likelihood(fit.mu, fit.alpha, fit.beta, assignment, split.full)
        ll_train = full_log_likelihood(fit.mu, fit.alpha, fit.beta, assignment, split.train)
    else:
        counts_train, _ = build_matrices(split.train, mode="directed")
        counts_full, _ = build_matrices(split.full, mode="directed")
        stats_train = block_pair_stats(counts_train, assignment)
        stats_full = block_pair_stats(counts_full, assignment)
        rate = np.maximum(
            np.where(np.isfinite(stats_train.mean), stats_train.mean, 0.0) / t_train,
            POISSON_RATE_FLOOR,
        )
        n_ab = stats_train.pair_counts.astype(np.float64)
        log_rate = np.log(rate)
        ll_full = float(
            np.sum(-rate * n_ab * t_full + stats_full.event_counts * log_rate)
        )
        ll_train = float(
            np.sum(-rate * n_ab * t_train + stats_train.event_counts * log_rate)
        )
    per_event = (ll_full - ll_train) / len(split.test)
    return EvalReport(
        model=model,
        k=k,
        test_loglik_per_event=per_event,
        loglik_full=ll_full,
        loglik_train=ll_train,
        n_train_events=len(split.train),
        n_test_events=len(split.test),
        n_nodes=split.full.n,
        seed=seed,
        train_horizon=t_train,
        full_horizon=t_full,
    )
