"""Command line front end: simulate, cluster, fit, eval, experiment, ingest.

Every subcommand works on the `sender,receiver,timestamp` CSV format of
EventLog.  Options may come from flags or from a YAML/JSON config file via
--config; flags win.  See the package README for worked examples.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from .estimation import fit_chip, m_confidence_intervals, mu_difference_intervals
from .evaluation import mean_test_loglik_per_event, split_by_count
from .experiments import fit_real, list_experiments, run_experiment
from .generator import (
    ChipModelSpec,
    SimplifiedSpec,
    balanced_assignment,
    expand_simplified,
    sample_communities,
    sample_network,
)
from .ingest import ingest
from .network import CommunityAssignment, EventLog, build_matrices
from .spectral import (
    eigengap_select_k,
    singular_values,
    spectral_cluster_directed,
    spectral_cluster_undirected,
)


def _load_config(path):
    text = Path(path).read_text()
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping")
    return data


def _numeric(token: str):
    try:
        return int(token)
    except ValueError:
        try:
            return float(token)
        except ValueError:
            return token


def _parse_kv(text: str, what: str):
    """'key=v1,v2' -> (key, [v1, v2]) with numeric coercion."""
    if "=" not in text:
        raise SystemExit(f"error: bad {what} {text!r}, expected key=value[,value...]")
    key, _, raw = text.partition("=")
    values = [_numeric(tok) for tok in raw.split(",") if tok != ""]
    if not values:
        raise SystemExit(f"error: bad {what} {text!r}, no values")
    return key.strip(), values


def _k_value(token: str):
    if token == "auto":
        return "auto"
    try:
        return int(token)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {token!r}")


def _write_labels(path, labels) -> None:
    with open(path, "w") as fh:
        fh.write("node,label\n")
        for node, label in enumerate(labels):
            fh.write(f"{node},{int(label)}\n")


def _read_labels(path) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "node,label":
        raise ValueError(f"{path}: expected header 'node,label'")
    pairs = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            node, label = line.split(",")
            pairs.append((int(node), int(label)))
        except ValueError:
            raise ValueError(f"{path}: line {ln}: expected 'node,label' integers")
    pairs.sort()
    nodes = [p[0] for p in pairs]
    if nodes != list(range(len(nodes))):
        raise ValueError(f"{path}: node column must cover 0..n-1 exactly once")
    return np.asarray([p[1] for p in pairs], dtype=np.int64)


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands


_SIMPLIFIED_KEYS = (
    "mu_diag",
    "mu_off",
    "alpha_diag",
    "alpha_off",
    "beta_diag",
    "beta_off",
)


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    merged = dict(cfg)
    for key in ("n", "k", "horizon", "assignment") + _SIMPLIFIED_KEYS:
        value = getattr(args, key)
        if value is not None:
            merged[key] = value
    if "n" not in merged or "k" not in merged or "horizon" not in merged:
        raise SystemExit("error: simulate needs n, k and horizon")
    rng = np.random.default_rng(args.seed)
    if "mu" in merged:
        spec = ChipModelSpec(
            n=int(merged["n"]),
            k=int(merged["k"]),
            pi=np.asarray(merged.get("pi", np.full(int(merged["k"]), 1.0 / int(merged["k"])))),
            mu=np.asarray(merged["mu"], dtype=np.float64),
            alpha=np.asarray(merged["alpha"], dtype=np.float64),
            beta=np.asarray(merged["beta"], dtype=np.float64),
            horizon=float(merged["horizon"]),
        )
    else:
        missing = [key for key in _SIMPLIFIED_KEYS if key not in merged]
        if missing:
            raise SystemExit(f"error: simulate config missing {', '.join(missing)}")
        spec = expand_simplified(
            SimplifiedSpec(
                n=int(merged["n"]),
                k=int(merged["k"]),
                horizon=float(merged["horizon"]),
                **{key: float(merged[key]) for key in _SIMPLIFIED_KEYS},
            )
        )
    how = merged.get("assignment", "balanced")
    if how == "balanced":
        assignment = balanced_assignment(spec.n, spec.k)
    elif how == "sampled":
        assignment = sample_communities(spec, rng)
    else:
        raise SystemExit(f"error: assignment must be 'balanced' or 'sampled', got {how!r}")
    sim_seed = int(rng.integers(0, 2**63 - 1))
    log = sample_network(spec, assignment, seed=sim_seed)
    log.to_csv(args.out)
    if args.labels_out:
        _write_labels(args.labels_out, assignment.labels)
    print(f"wrote {args.out}: n={log.n} events={len(log)} horizon={log.horizon:g}")
    return 0


def _clustering_target(log: EventLog, matrix: str, mode: str):
    counts, adjacency = build_matrices(log, mode=mode)
    return counts if matrix == "weighted" else adjacency


def cmd_cluster(args) -> int:
    log = EventLog.from_csv(args.events)
    target = _clustering_target(log, args.matrix, args.mode)
    k = args.k
    values = None
    if k == "auto":
        k, values = eigengap_select_k(target, min(args.k_max, log.n))
    if args.singular_values:
        if values is None:
            values = singular_values(target, min(args.k_max, log.n))
        with open(args.singular_values, "w") as fh:
            fh.write("rank,value\n")
            for i, v in enumerate(values):
                fh.write(f"{i + 1},{float(v)}\n")
    cluster = (
        spectral_cluster_directed if args.mode == "directed" else spectral_cluster_undirected
    )
    assignment = cluster(target, int(k), seed=args.seed)
    _write_labels(args.out, assignment.labels)
    sizes = assignment.block_sizes().tolist()
    print(f"wrote {args.out}: k={int(k)} block_sizes={sizes}")
    return 0


def cmd_fit(args) -> int:
    log = EventLog.from_csv(args.events)
    assignment = None
    k = args.k
    if args.labels:
        labels = _read_labels(args.labels)
        if labels.size != log.n:
            raise SystemExit(
                f"error: labels cover {labels.size} nodes, the log has {log.n}"
            )
        found_k = int(labels.max()) + 1 if labels.size else 1
        if k not in (None, "auto") and int(k) != found_k:
            raise SystemExit(f"error: labels imply k={found_k}, got --k {k}")
        k = found_k
        assignment = CommunityAssignment(labels=labels, k=k)
    elif k == "auto":
        target = _clustering_target(log, args.matrix, "directed")
        k, _ = eigengap_select_k(target, min(args.k_max, log.n))
        print(f"eigengap selected k={k}")
    elif k is None:
        raise SystemExit("error: fit needs --k (or --labels)")
    fit = fit_chip(log, int(k), seed=args.seed, matrix=args.matrix, assignment=assignment)
    payload = fit.params_dict()
    payload["block_sizes"] = fit.assignment.block_sizes().tolist()
    if args.ci:
        half, z = m_confidence_intervals(fit.stats, fit.m, theta=args.theta)
        table = mu_difference_intervals(fit.stats, fit.mu, log.horizon, theta=args.theta)
        payload["ci"] = {
            "theta": args.theta,
            "m_z": z,
            "m_half_width": np.where(np.isfinite(half), half, None).tolist(),
            "mu_differences": [
                {
                    "diagonal": list(row["diagonal"]),
                    "off_diagonal": list(row["off_diagonal"]),
                    "difference": row["difference"],
                    "half_width": row["half_width"],
                    "significant": row["significant"],
                }
                for row in table.rows
            ],
        }
    if args.out:
        _write_json(args.out, payload)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_eval(args) -> int:
    if args.test_fraction is not None and args.test_count is not None:
        raise SystemExit("error: give only one of --test-fraction and --test-count")
    if args.raw:
        if not args.out:
            raise SystemExit("error: --raw needs --out DIRECTORY")
        report = fit_real(
            args.events,
            args.out,
            k=None if args.k in (None, "auto") else int(args.k),
            k_max=args.k_max,
            test_fraction=args.test_fraction,
            test_count=args.test_count,
            matrix=args.matrix,
            seed=args.seed,
            largest_component=args.largest_component,
        )
        per_event = report["test_loglik_per_event"]
        print(
            f"k={report['k']} chip={per_event['chip']:.3g} "
            f"poisson={per_event['poisson']:.3g} (test LL per event)"
        )
        print(f"wrote {args.out}/report.json")
        return 0
    log = EventLog.from_csv(args.events)
    split = _split(log, args)
    if args.k in (None, "auto"):
        target = _clustering_target(split.train, args.matrix, "directed")
        k, _ = eigengap_select_k(target, min(args.k_max, log.n))
        print(f"eigengap selected k={k}")
    else:
        k = int(args.k)
    models = ("chip", "poisson") if args.model == "both" else (args.model,)
    payload = {}
    for model in models:
        report = mean_test_loglik_per_event(
            split, k, seed=args.seed, model=model, matrix=args.matrix
        )
        payload[model] = report.to_dict()
        print(f"{model} test LL per event: {report.test_loglik_per_event:.3g}")
    if args.out:
        _write_json(args.out, payload)
        print(f"wrote {args.out}")
    return 0


def _split(log, args):
    if args.test_count is not None:
        return split_by_count(log, test_count=args.test_count)
    fraction = 0.2 if args.test_fraction is None else args.test_fraction
    return split_by_count(log, test_fraction=fraction)


def cmd_experiment(args) -> int:
    if args.list:
        for name, description in list_experiments():
            print(f"{name}: {description}")
        return 0
    cfg = _load_config(args.config) if args.config else {}
    name = args.name or cfg.get("experiment")
    if not name:
        raise SystemExit("error: experiment needs a name (or --list)")
    out = args.out or cfg.get("out")
    if not out:
        raise SystemExit("error: experiment needs --out")
    grid = dict(cfg.get("grid", {}))
    for item in args.grid or []:
        key, values = _parse_kv(item, "--grid")
        grid[key] = values
    base = dict(cfg.get("base", {}))
    for item in args.base or []:
        key, values = _parse_kv(item, "--base")
        base[key] = values[0] if len(values) == 1 else values
    replicates = args.replicates if args.replicates is not None else cfg.get("replicates")
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    result = run_experiment(
        name,
        out,
        replicates=replicates,
        seed=seed,
        grid=grid or None,
        base=base or None,
        workers=args.workers,
    )
    failed = result.manifest["n_failed"]
    print(
        f"{result.name}: {result.manifest['n_rows']} rows "
        f"({failed} failed), wrote {result.replicate_path}, "
        f"{result.summary_path}, {result.manifest_path}"
    )
    return 0


def cmd_ingest(args) -> int:
    result = ingest(
        args.events,
        largest_component=args.largest_component,
        normalize_to=args.scale,
    )
    result.log.to_csv(args.out)
    if args.tokens:
        with open(args.tokens, "w") as fh:
            fh.write("node,token\n")
            for node, token in enumerate(result.node_tokens):
                fh.write(f"{node},{token}\n")
    print(
        f"wrote {args.out}: n={result.log.n} events={len(result.log)} "
        f"self_edges_dropped={result.dropped_self_edges} "
        f"component_events_dropped={result.component_events_dropped}"
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chip",
        description="Simulate, cluster, fit and evaluate block Hawkes event networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a network and write its event CSV")
    p.add_argument("--config", help="YAML/JSON with model parameters (flags win)")
    p.add_argument("--n", type=int, help="number of nodes")
    p.add_argument("--k", type=int, help="number of blocks")
    p.add_argument("--horizon", type=float, help="observation window length")
    for key in _SIMPLIFIED_KEYS:
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float)
    p.add_argument("--assignment", choices=("balanced", "sampled"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="events CSV to write")
    p.add_argument("--labels-out", help="also write the planted labels")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cluster", help="spectral community detection on an event CSV")
    p.add_argument("events")
    p.add_argument("--k", type=_k_value, required=True, help="block count or 'auto'")
    p.add_argument("--k-max", type=int, default=10, help="candidates for --k auto")
    p.add_argument("--matrix", choices=("weighted", "binary"), default="weighted")
    p.add_argument("--mode", choices=("directed", "undirected"), default="directed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="labels CSV to write")
    p.add_argument("--singular-values", help="also write leading singular values")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("fit", help="estimate block parameters from an event CSV")
    p.add_argument("events")
    p.add_argument("--k", type=_k_value, help="block count or 'auto'")
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--labels", help="use these labels instead of clustering")
    p.add_argument("--matrix", choices=("weighted", "binary"), default="weighted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ci", action="store_true", help="include confidence intervals")
    p.add_argument("--theta", type=float, default=0.05, help="joint CI level")
    p.add_argument("--out", help="JSON to write (default: stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="held-out test log-likelihood per event")
    p.add_argument("events")
    p.add_argument("--k", type=_k_value, help="block count or 'auto'")
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--test-fraction", type=float, help="held-out share (default 0.2)")
    p.add_argument("--test-count", type=int, help="held-out event count")
    p.add_argument("--matrix", choices=("weighted", "binary"), default="weighted")
    p.add_argument("--model", choices=("chip", "poisson", "both"), default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--raw", action="store_true", help="ingest first, emit full report")
    p.add_argument("--largest-component", action="store_true")
    p.add_argument("--out", help="JSON path, or report directory with --raw")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="run a named simulation study")
    p.add_argument("name", nargs="?", help="experiment name (see --list)")
    p.add_argument("--list", action="store_true", help="list experiments and exit")
    p.add_argument("--config", help="YAML/JSON config (flags win)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--grid", action="append", metavar="KEY=V1,V2,...")
    p.add_argument("--base", action="append", metavar="KEY=VALUE")
    p.add_argument("--workers", type=int, help="default CHIP_THREADS or 1")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("ingest", help="normalize a raw sender,receiver,timestamp CSV")
    p.add_argument("events")
    p.add_argument("--out", required=True, help="normalized events CSV to write")
    p.add_argument("--largest-component", action="store_true")
    p.add_argument("--scale", type=float, default=1000.0, help="map times to [0, scale]")
    p.add_argument("--tokens", help="also write the node id to token table")
    p.set_defaults(func=cmd_ingest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
