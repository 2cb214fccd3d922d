"""Shared data structures for event networks.

An event network is a set of timestamped directed interactions (sender,
receiver, time) among n nodes observed on a window [0, horizon].  Community
labels partition the nodes into k blocks.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

CSV_HEADER = ["sender", "receiver", "timestamp"]


@dataclass(frozen=True)
class EventLog:
    """Timestamped directed events among nodes 0..n-1, sorted by time.

    Construction coerces dtypes, validates ids and times, and stable-sorts by
    timestamp, so ties keep their input order.  Self edges are rejected; node
    pairs without events are simply absent and are treated as observed zeros
    by downstream statistics.
    """

    senders: np.ndarray
    receivers: np.ndarray
    times: np.ndarray
    n: int
    horizon: float

    def __post_init__(self):
        s = np.ascontiguousarray(self.senders, dtype=np.int64)
        r = np.ascontiguousarray(self.receivers, dtype=np.int64)
        t = np.ascontiguousarray(self.times, dtype=np.float64)
        if not (s.ndim == r.ndim == t.ndim == 1 and s.size == r.size == t.size):
            raise ValueError("senders, receivers and times must be 1-d and equal length")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be finite and > 0, got {self.horizon}")
        if s.size:
            if s.min() < 0 or r.min() < 0 or s.max() >= self.n or r.max() >= self.n:
                raise ValueError("node ids must lie in [0, n)")
            if np.any(s == r):
                raise ValueError("self edges are not allowed")
            if not np.all(np.isfinite(t)):
                raise ValueError("timestamps must be finite")
            if t.min() < 0 or t.max() > self.horizon:
                raise ValueError("timestamps must lie in [0, horizon]")
            if np.any(np.diff(t) < 0):
                order = np.argsort(t, kind="stable")
                s, r, t = s[order], r[order], t[order]
        object.__setattr__(self, "senders", s)
        object.__setattr__(self, "receivers", r)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "horizon", float(self.horizon))

    def __len__(self) -> int:
        return int(self.times.size)

    def equals(self, other: "EventLog") -> bool:
        return (
            self.n == other.n
            and self.horizon == other.horizon
            and np.array_equal(self.senders, other.senders)
            and np.array_equal(self.receivers, other.receivers)
            and np.array_equal(self.times, other.times)
        )

    def to_csv(self, path, write_meta: bool = True) -> None:
        """Write `sender,receiver,timestamp` rows plus a metadata sidecar.

        Timestamps use the shortest round-tripping decimal form.  The sidecar
        `<path>.meta.json` records n and horizon, which the CSV itself cannot
        carry (nodes without events, horizon past the last event).
        """
        path = Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            writer.writerows(
                (int(s), int(r), repr(float(t)))
                for s, r, t in zip(self.senders, self.receivers, self.times)
            )
        if write_meta:
            meta = {"n": self.n, "horizon": self.horizon}
            Path(f"{path}.meta.json").write_text(json.dumps(meta))

    @classmethod
    def from_csv(cls, path, n: int | None = None, horizon: float | None = None) -> "EventLog":
        """Read a canonical event CSV written by to_csv.

        Node ids must already be dense integers.  n and horizon are taken
        from explicit arguments first, then the metadata sidecar, then
        inferred from the data (max id + 1, max timestamp).
        """
        path = Path(path)
        senders, receivers, times = [], [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != CSV_HEADER:
                raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 3:
                    raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
                try:
                    senders.append(int(row[0]))
                    receivers.append(int(row[1]))
                    times.append(float(row[2]))
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
        meta_path = Path(f"{path}.meta.json")
        if (n is None or horizon is None) and meta_path.exists():
            meta = json.loads(meta_path.read_text())
            n = int(meta["n"]) if n is None else n
            horizon = float(meta["horizon"]) if horizon is None else horizon
        if n is None:
            n = max(max(senders, default=-1), max(receivers, default=-1)) + 1
        if horizon is None:
            horizon = max(times, default=0.0)
        return cls(
            senders=np.asarray(senders, dtype=np.int64),
            receivers=np.asarray(receivers, dtype=np.int64),
            times=np.asarray(times, dtype=np.float64),
            n=int(n),
            horizon=float(horizon),
        )


@dataclass(frozen=True)
class CommunityAssignment:
    """Node labels in [0, k); blocks may be empty."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValueError("labels must be a 1-d array")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ValueError("labels must lie in [0, k)")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "k", int(self.k))

    def __len__(self) -> int:
        return int(self.labels.size)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    def block_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k).astype(np.int64)

    def membership_matrix(self) -> sparse.csr_matrix:
        """n x k one-hot membership matrix."""
        n = self.labels.size
        return sparse.csr_matrix(
            (np.ones(n), (np.arange(n), self.labels)), shape=(n, self.k)
        )


def build_matrices(log: EventLog, mode: str = "directed"):
    """Aggregate an event log into count and adjacency matrices.

    Returns (N, A) as CSR matrices: N[i, j] counts events from i to j and A
    is its binarization.  mode="undirected" symmetrizes N as N + N^T before
    binarizing.
    """
    if mode not in ("directed", "undirected"):
        raise ValueError(f"mode must be 'directed' or 'undirected', got {mode!r}")
    counts = sparse.coo_matrix(
        (np.ones(len(log), dtype=np.int64), (log.senders, log.receivers)),
        shape=(log.n, log.n),
    ).tocsr()
    if mode == "undirected":
        counts = (counts + counts.T).tocsr()
    adjacency = counts.sign().astype(np.int64).tocsr()
    return counts, adjacency
