"""Reading raw interaction CSVs into canonical event logs.

Raw files carry opaque node tokens and arbitrary time units.  Ingestion
drops self edges, optionally restricts to the largest connected component
(undirected sense), shifts and scales times onto [0, normalize_to], breaks
exact per-pair timestamp ties by the smallest representable nudge, and maps
tokens to dense integer ids in order of first appearance in time order.
Re-ingesting a serialized ingested log reproduces it exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .network import CSV_HEADER, EventLog

DEFAULT_TIME_SCALE = 1000.0


@dataclass(frozen=True)
class IngestResult:
    """Canonical log plus provenance of the cleaning steps."""

    log: EventLog
    node_tokens: list
    dropped_self_edges: int
    components_found: int
    component_nodes_dropped: int
    component_events_dropped: int
    raw_time_min: float
    raw_time_max: float


def _parse_rows(path: Path):
    senders, receivers, times = [], [], []
    dropped = 0
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
            s, r = row[0].strip(), row[1].strip()
            try:
                t = float(row[2])
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: timestamp {row[2]!r} is not a number"
                ) from None
            if not np.isfinite(t):
                raise ValueError(f"{path}:{lineno}: timestamp must be finite")
            if not s or not r:
                raise ValueError(f"{path}:{lineno}: empty node token")
            if s == r:
                dropped += 1
                continue
            senders.append(s)
            receivers.append(r)
            times.append(t)
    return senders, receivers, times, dropped


def _largest_component_mask(senders, receivers):
    """Boolean event mask for the largest undirected component; ties go to
    the component appearing first."""
    tokens = {}
    for tok in senders + receivers:
        if tok not in tokens:
            tokens[tok] = len(tokens)
    n = len(tokens)
    s_ids = np.fromiter((tokens[t] for t in senders), dtype=np.int64, count=len(senders))
    r_ids = np.fromiter((tokens[t] for t in receivers), dtype=np.int64, count=len(receivers))
    graph = sparse.coo_matrix(
        (np.ones(s_ids.size), (s_ids, r_ids)), shape=(n, n)
    ).tocsr()
    n_components, membership = connected_components(graph, directed=False)
    sizes = np.bincount(membership, minlength=n_components)
    keep = int(np.argmax(sizes))
    mask = membership[s_ids] == keep
    nodes_dropped = int(n - sizes[keep])
    return mask, n_components, nodes_dropped


def ingest(
    path,
    largest_component: bool = False,
    normalize_to: float = DEFAULT_TIME_SCALE,
) -> IngestResult:
    """Read a raw `sender,receiver,timestamp` CSV into an EventLog.

    Timestamps are mapped affinely so the earliest event lands at 0 and the
    latest at normalize_to; the horizon is normalize_to (or a whisker above
    when tie nudging pushes the last event past it).  A file whose kept
    events share a single timestamp cannot be scaled and is rejected.
    """
    path = Path(path)
    if normalize_to <= 0:
        raise ValueError(f"normalize_to must be > 0, got {normalize_to}")
    senders, receivers, times, dropped_self = _parse_rows(path)
    if not senders:
        raise ValueError(f"{path}: no usable events after dropping self edges")
    components_found, nodes_dropped, events_dropped = 1, 0, 0
    if largest_component:
        mask, components_found, nodes_dropped = _largest_component_mask(
            senders, receivers
        )
        events_dropped = int(mask.size - mask.sum())
        senders = [s for s, keep in zip(senders, mask) if keep]
        receivers = [r for r, keep in zip(receivers, mask) if keep]
        times = [t for t, keep in zip(times, mask) if keep]
    raw_times = np.asarray(times, dtype=np.float64)
    raw_min, raw_max = float(raw_times.min()), float(raw_times.max())
    if raw_max == raw_min:
        raise ValueError(f"{path}: all events share one timestamp; cannot scale")
    # divide by the span first so the extremes land exactly on 0 and the
    # target scale
    scaled = (raw_times - raw_min) / (raw_max - raw_min) * normalize_to

    # provisional ids just to group pairs for tie breaking
    prov = {}
    for tok in senders + receivers:
        if tok not in prov:
            prov[tok] = len(prov)
    s_prov = np.fromiter((prov[t] for t in senders), dtype=np.int64, count=len(senders))
    r_prov = np.fromiter((prov[t] for t in receivers), dtype=np.int64, count=len(receivers))
    pair = s_prov * np.int64(len(prov)) + r_prov
    order = np.lexsort((np.arange(pair.size), scaled, pair))
    t_sorted = scaled[order]
    pair_sorted = pair[order]
    while True:
        stuck = np.flatnonzero(
            (pair_sorted[1:] == pair_sorted[:-1]) & (t_sorted[1:] <= t_sorted[:-1])
        )
        if stuck.size == 0:
            break
        t_sorted[stuck + 1] = np.nextafter(t_sorted[stuck], np.inf)
    scaled[order] = t_sorted

    # final chronological order (stable in the input order for cross-pair ties)
    chrono = np.lexsort((np.arange(scaled.size), scaled))
    final_tokens: dict = {}
    for idx in chrono:
        for tok in (senders[idx], receivers[idx]):
            if tok not in final_tokens:
                final_tokens[tok] = len(final_tokens)
    s_ids = np.fromiter((final_tokens[t] for t in senders), dtype=np.int64, count=len(senders))
    r_ids = np.fromiter((final_tokens[t] for t in receivers), dtype=np.int64, count=len(receivers))
    horizon = max(float(normalize_to), float(scaled.max()))
    log = EventLog(
        senders=s_ids[chrono],
        receivers=r_ids[chrono],
        times=scaled[chrono],
        n=len(final_tokens),
        horizon=horizon,
    )
    return IngestResult(
        log=log,
        node_tokens=list(final_tokens),
        dropped_self_edges=dropped_self,
        components_found=components_found,
        component_nodes_dropped=nodes_dropped,
        component_events_dropped=events_dropped,
        raw_time_min=raw_min,
        raw_time_max=raw_max,
    )
