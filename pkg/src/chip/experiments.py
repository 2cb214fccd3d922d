"""Named simulation studies and the real-data fitting pipeline.

Each registered experiment sweeps a parameter grid of the two-level model,
simulates `replicates` networks per grid point, runs community detection
(and, where relevant, full parameter estimation), and writes three files
into the output directory:

    <name>_replicates.csv   one row per replicate (and per matrix)
    <name>_summary.csv      per-grid-point means and standard errors,
                            with theoretical bound columns where defined
    <name>_manifest.json    config echo, versions, seed derivation, column
                            documentation

Replicate seeds derive from SeedSequence(master, spawn_key=(grid_index,
replicate)), so serial and parallel runs of the same (name, config, seed)
produce byte-identical CSVs.  Failures inside a replicate are recorded in
its row's error column and the run continues.
"""

import csv
import itertools
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .bounds import (
    SimplifiedRates,
    binary_misclustering_bound,
    weighted_misclustering_bound,
)
from .estimation import (
    fit_chip,
    m_confidence_intervals,
    mu_difference_intervals,
)
from .evaluation import mean_test_loglik_per_event, split_by_count
from .generator import (
    SimplifiedSpec,
    balanced_assignment,
    expand_simplified,
    sample_network,
)
from .ingest import ingest
from .network import EventLog, build_matrices
from .spectral import (
    adjusted_rand,
    best_label_alignment,
    eigengap_select_k,
    misclustering_rate,
    singular_values,
    spectral_cluster_directed,
)

MSE_KEYS = ("mse_mu", "mse_m", "mse_alpha", "mse_beta")


def _versions() -> dict:
    out = {}
    for dist in ("chip", "numpy", "scipy", "numba"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = "unknown"
    return out


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class ExperimentSpec:
    """Static description of one named study."""

    name: str
    description: str
    base: dict
    grid: dict
    replicates: int
    matrices: tuple
    values: tuple
    runner: object
    transform: object = None
    bounds: object = None
    extra_values: tuple = ()

    @property
    def axes(self) -> tuple:
        return tuple(self.grid)

    @property
    def has_matrix_column(self) -> bool:
        return len(self.matrices) > 1


@dataclass(frozen=True)
class ExperimentResult:
    """In-memory rows plus the paths of the emitted files."""

    name: str
    rows: list
    summary: list
    replicate_path: Path
    summary_path: Path
    manifest_path: Path
    manifest: dict = field(repr=False, default_factory=dict)


def _two_level_spec(eff: dict) -> SimplifiedSpec:
    return SimplifiedSpec(
        n=int(eff["n"]),
        k=int(eff["k"]),
        mu_diag=float(eff["mu_diag"]),
        mu_off=float(eff["mu_off"]),
        alpha_diag=float(eff["alpha_diag"]),
        alpha_off=float(eff["alpha_off"]),
        beta_diag=float(eff["beta_diag"]),
        beta_off=float(eff["beta_off"]),
        horizon=float(eff["T"]),
    )


def _two_level_rates(eff: dict) -> SimplifiedRates:
    return SimplifiedRates(
        n=int(eff["n"]),
        k=int(eff["k"]),
        mu_diag=float(eff["mu_diag"]),
        mu_off=float(eff["mu_off"]),
        m_diag=float(eff["alpha_diag"]) / float(eff["beta_diag"]),
        m_off=float(eff["alpha_off"]) / float(eff["beta_off"]),
        horizon=float(eff["T"]),
    )


def _bound_columns(eff: dict) -> dict:
    rates = _two_level_rates(eff)
    return {
        "binary_bound": binary_misclustering_bound(rates).value,
        "weighted_bound": weighted_misclustering_bound(rates).value,
    }


def _simulate_point(eff: dict, sim_seed: int):
    spec = _two_level_spec(eff)
    truth = balanced_assignment(spec.n, spec.k)
    log = sample_network(expand_simplified(spec), truth, seed=sim_seed)
    return spec, truth, log


def _detection_runner(eff, matrices, sim_seed, cluster_seeds, with_density=False):
    """ARI of spectral clustering per requested matrix on one simulation."""
    _, truth, log = _simulate_point(eff, sim_seed)
    counts, adjacency = build_matrices(log, mode="directed")
    target = {"N": counts, "A": adjacency}
    extra = {}
    if with_density:
        extra["density"] = adjacency.nnz / (log.n * log.n)
    rows = []
    for name in matrices:
        pred = spectral_cluster_directed(
            target[name], int(eff["k"]), seed=cluster_seeds[name]
        )
        rows.append(
            {
                "matrix": name,
                "ari": adjusted_rand(truth.labels, pred.labels),
                "misclustering": misclustering_rate(truth.labels, pred.labels),
                **extra,
            }
        )
    return rows


def _density_runner(eff, matrices, sim_seed, cluster_seeds):
    return _detection_runner(eff, matrices, sim_seed, cluster_seeds, with_density=True)


def _mse_runner(eff, matrices, sim_seed, cluster_seeds):
    """Full pipeline error per estimator, aligned to the planted labels."""
    spec, truth, log = _simulate_point(eff, sim_seed)
    k = spec.k
    fit = fit_chip(log, k, seed=cluster_seeds["N"], matrix="weighted")
    perm = best_label_alignment(truth.labels, fit.assignment.labels, k)
    idx = np.ix_(perm, perm)

    def aligned(est):
        out = np.empty_like(est)
        out[idx] = est
        return out

    model = expand_simplified(spec)
    true_m = model.alpha / model.beta
    row = {
        "ari": adjusted_rand(truth.labels, fit.assignment.labels),
        "mse_mu": float(np.mean((aligned(fit.mu) - model.mu) ** 2)),
        "mse_m": float(np.mean((aligned(fit.m) - true_m) ** 2)),
        "mse_alpha": float(np.mean((aligned(fit.alpha) - model.alpha) ** 2)),
        "mse_beta": float(np.mean((aligned(fit.beta) - model.beta) ** 2)),
        "n_unidentified": int(np.isnan(fit.beta).sum()),
    }
    return [row]


def _scale_both(eff: dict) -> dict:
    out = dict(eff)
    out["mu_diag"] = eff["mu_diag"] * eff["scale"]
    out["mu_off"] = eff["mu_off"] * eff["scale"]
    return out


def _scale_diag(eff: dict) -> dict:
    out = dict(eff)
    out["mu_diag"] = eff["mu_diag"] * eff["scale"]
    return out


_DETECTION_VALUES = ("ari", "misclustering")

_REGISTRY = {}


def _register(spec: ExperimentSpec) -> None:
    _REGISTRY[spec.name] = spec


_register(
    ExperimentSpec(
        name="detection-rates",
        description=(
            "Community detection while only the baseline rates carry the "
            "community signal (mu_diag > mu_off, identical excitation); "
            "binary and weighted spectral clustering over growing n."
        ),
        base={
            "k": 4,
            "T": 400.0,
            "mu_diag": 0.002,
            "mu_off": 0.001,
            "alpha_diag": 7.0,
            "alpha_off": 7.0,
            "beta_diag": 8.0,
            "beta_off": 8.0,
        },
        grid={"n": [64, 128, 256, 512]},
        replicates=20,
        matrices=("A", "N"),
        values=_DETECTION_VALUES,
        runner=_detection_runner,
        bounds=_bound_columns,
    )
)

_register(
    ExperimentSpec(
        name="detection-excitation",
        description=(
            "Community detection while only the excitation carries the "
            "community signal (alpha_diag > alpha_off, identical baseline "
            "rates); binary and weighted spectral clustering over growing n."
        ),
        base={
            "k": 4,
            "T": 400.0,
            "mu_diag": 0.001,
            "mu_off": 0.001,
            "alpha_diag": 0.006,
            "alpha_off": 0.001,
            "beta_diag": 0.008,
            "beta_off": 0.008,
        },
        grid={"n": [64, 128, 256, 512]},
        replicates=20,
        matrices=("A", "N"),
        values=_DETECTION_VALUES,
        runner=_detection_runner,
        bounds=_bound_columns,
    )
)

_HEATMAP_BASE = {
    "mu_diag": 0.085,
    "mu_off": 0.065,
    "alpha_diag": 0.06,
    "alpha_off": 0.06,
    "beta_diag": 0.08,
    "beta_off": 0.08,
}

_register(
    ExperimentSpec(
        name="heatmap-fixed-n",
        description=(
            "Weighted spectral clustering accuracy over a (T, k) grid at "
            "fixed n; companion studies hold T or k fixed instead."
        ),
        base={"n": 256, **_HEATMAP_BASE},
        grid={"T": [16.0, 32.0, 64.0, 128.0], "k": [2, 4, 8, 16]},
        replicates=20,
        matrices=("N",),
        values=_DETECTION_VALUES,
        runner=_detection_runner,
        bounds=_bound_columns,
    )
)

_register(
    ExperimentSpec(
        name="heatmap-fixed-t",
        description=(
            "Weighted spectral clustering accuracy over an (n, k) grid at "
            "fixed observation window T."
        ),
        base={"T": 64.0, **_HEATMAP_BASE},
        grid={"n": [64, 128, 256, 512], "k": [2, 4, 8, 16]},
        replicates=20,
        matrices=("N",),
        values=_DETECTION_VALUES,
        runner=_detection_runner,
        bounds=_bound_columns,
    )
)

_register(
    ExperimentSpec(
        name="heatmap-fixed-k",
        description=(
            "Weighted spectral clustering accuracy over an (n, T) grid at "
            "fixed block count k."
        ),
        base={"k": 8, **_HEATMAP_BASE},
        grid={"n": [64, 128, 256, 512], "T": [16.0, 32.0, 64.0, 128.0]},
        replicates=20,
        matrices=("N",),
        values=_DETECTION_VALUES,
        runner=_detection_runner,
        bounds=_bound_columns,
    )
)

_register(
    ExperimentSpec(
        name="mse-decay",
        description=(
            "Mean squared error of the mu, m, alpha and beta estimators "
            "under the full pipeline (weighted spectral clustering, then "
            "moment and line-search estimation) as n grows; all four block "
            "parameters differ between diagonal and off-diagonal pairs."
        ),
        base={
            "k": 4,
            "T": 10000.0,
            "mu_diag": 0.0011,
            "mu_off": 0.0010,
            "alpha_diag": 0.11,
            "alpha_off": 0.09,
            "beta_diag": 0.14,
            "beta_off": 0.16,
        },
        grid={"n": [90, 130, 180, 260, 370, 500]},
        replicates=30,
        matrices=("N",),
        values=("ari",) + MSE_KEYS + ("n_unidentified",),
        runner=_mse_runner,
    )
)

_SCALING_BASE = {
    "n": 128,
    "k": 4,
    "T": 50.0,
    "mu_diag": 0.075,
    "mu_off": 0.065,
    "alpha_diag": 0.05,
    "alpha_off": 0.05,
    "beta_diag": 0.08,
    "beta_off": 0.08,
}

_register(
    ExperimentSpec(
        name="mu-scale-both",
        description=(
            "Weighted spectral clustering accuracy while both baseline "
            "rates are scaled up together, keeping their ratio fixed; the "
            "network densifies as the scale grows."
        ),
        base=dict(_SCALING_BASE),
        grid={"scale": [1.0, 2.0, 4.0, 8.0, 16.0, 30.0]},
        replicates=20,
        matrices=("N",),
        values=_DETECTION_VALUES,
        runner=_detection_runner,
        transform=_scale_both,
        bounds=_bound_columns,
    )
)

_register(
    ExperimentSpec(
        name="mu-scale-diag",
        description=(
            "Weighted spectral clustering accuracy while only the diagonal "
            "baseline rate is scaled up, widening the within- versus "
            "between-block gap."
        ),
        base=dict(_SCALING_BASE),
        grid={"scale": [1.0, 1.1, 1.2, 1.3, 1.4]},
        replicates=20,
        matrices=("N",),
        values=_DETECTION_VALUES,
        runner=_detection_runner,
        transform=_scale_diag,
        bounds=_bound_columns,
    )
)

_register(
    ExperimentSpec(
        name="density-scan",
        description=(
            "Binary versus weighted spectral clustering as a sparse "
            "network is densified by scaling both baseline rates; rows "
            "carry the realized adjacency density."
        ),
        base={
            "n": 256,
            "k": 4,
            "T": 50.0,
            "mu_diag": 7.5e-4,
            "mu_off": 3.5e-4,
            "alpha_diag": 0.05,
            "alpha_off": 0.05,
            "beta_diag": 0.08,
            "beta_off": 0.08,
        },
        grid={"scale": [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]},
        replicates=20,
        matrices=("A", "N"),
        values=_DETECTION_VALUES + ("density",),
        runner=_density_runner,
        transform=_scale_both,
        bounds=_bound_columns,
    )
)

# short ids accepted wherever an experiment name is; outputs use canonical names
ALIASES = {
    "fig2a": "detection-rates",
    "fig2b": "detection-excitation",
    "fig3a": "heatmap-fixed-n",
    "fig3b": "heatmap-fixed-t",
    "fig3c": "heatmap-fixed-k",
    "fig4": "mse-decay",
}


def get_experiment(name: str) -> ExperimentSpec:
    """Resolve a registered experiment by canonical name or short alias."""
    key = ALIASES.get(name, name)
    if key not in _REGISTRY:
        known = ", ".join(sorted(_REGISTRY))
        raise KeyError(f"unknown experiment {name!r}; known: {known}")
    return _REGISTRY[key]


def list_experiments() -> list:
    """(name, description) pairs in registration order."""
    return [(s.name, s.description) for s in _REGISTRY.values()]


# ---------------------------------------------------------------------------
# engine


def _run_replicate(name, base, grid_idx, point, rep, master_seed):
    """One replicate of one grid point; returns finished row dicts."""
    spec = get_experiment(name)
    eff = {**base, **point}
    if spec.transform is not None:
        eff = spec.transform(eff)
    ss = np.random.SeedSequence(master_seed, spawn_key=(grid_idx, rep))
    rng = np.random.default_rng(ss)
    # fixed draw order so the seeds do not depend on which matrices run
    sim_seed = int(rng.integers(0, 2**63 - 1))
    cluster_seeds = {
        "A": int(rng.integers(0, 2**63 - 1)),
        "N": int(rng.integers(0, 2**63 - 1)),
    }
    try:
        value_rows = spec.runner(eff, spec.matrices, sim_seed, cluster_seeds)
        error = ""
    except Exception as exc:
        value_rows = [{v: None for v in spec.values}]
        if spec.has_matrix_column:
            value_rows[0]["matrix"] = None
        error = f"{type(exc).__name__}: {exc}"
    rows = []
    for values in value_rows:
        row = {axis: point[axis] for axis in spec.axes}
        row.update(grid_index=grid_idx, replicate=rep, seed=sim_seed)
        if spec.has_matrix_column:
            row["matrix"] = values.get("matrix")
        row.update({v: values.get(v) for v in spec.values})
        row["error"] = error
        rows.append(row)
    return rows


def _row_fieldnames(spec: ExperimentSpec) -> list:
    names = list(spec.axes) + ["grid_index", "replicate", "seed"]
    if spec.has_matrix_column:
        names.append("matrix")
    return names + list(spec.values) + ["error"]


def _mean_and_se(values: list):
    arr = np.asarray([v for v in values if v is not None], dtype=np.float64)
    arr = arr[~np.isnan(arr)]
    if arr.size == 0:
        return float("nan"), float("nan")
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else float("nan")
    return mean, se


def _summarize(spec, base, points, rows):
    ok = [r for r in rows if not r["error"]]
    failed_by_point = {}
    for r in rows:
        if r["error"]:
            key = r["grid_index"]
            failed_by_point[key] = failed_by_point.get(key, 0) + 1
    grouped = {}
    for r in ok:
        key = (r["grid_index"], r.get("matrix"))
        grouped.setdefault(key, []).append(r)
    summary = []
    matrix_keys = spec.matrices if spec.has_matrix_column else (None,)
    for grid_idx, point in enumerate(points):
        bound_cols = {}
        if spec.bounds is not None:
            eff = {**base, **point}
            if spec.transform is not None:
                eff = spec.transform(eff)
            try:
                bound_cols = spec.bounds(eff)
            except Exception:
                # parameters that cannot even be simulated have no bounds
                bound_cols = {
                    "binary_bound": float("nan"),
                    "weighted_bound": float("nan"),
                }
        for matrix in matrix_keys:
            members = grouped.get((grid_idx, matrix), [])
            row = dict(point)
            if spec.has_matrix_column:
                row["matrix"] = matrix
            for v in spec.values:
                mean, se = _mean_and_se([m[v] for m in members])
                row[f"{v}_mean"] = mean
                row[f"{v}_se"] = se
            row["replicates"] = len(members)
            row["n_failed"] = failed_by_point.get(grid_idx, 0)
            row.update(bound_cols)
            summary.append(row)
    fieldnames = list(spec.axes)
    if spec.has_matrix_column:
        fieldnames.append("matrix")
    for v in spec.values:
        fieldnames += [f"{v}_mean", f"{v}_se"]
    fieldnames += ["replicates", "n_failed"]
    if spec.bounds is not None:
        fieldnames += ["binary_bound", "weighted_bound"]
    return summary, fieldnames


def _write_csv(path: Path, fieldnames, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def _grid_points(grid: dict) -> list:
    axes = list(grid)
    return [
        dict(zip(axes, combo))
        for combo in itertools.product(*(grid[axis] for axis in axes))
    ]


def run_experiment(
    name: str,
    out_dir,
    replicates: int | None = None,
    seed: int = 0,
    grid: dict | None = None,
    base: dict | None = None,
    workers: int | None = None,
) -> ExperimentResult:
    """Run a registered experiment and write its three output files.

    grid and base override the registered defaults key by key; unknown keys
    are rejected so typos do not silently fall through.  workers > 1 farms
    replicates out to processes; results are identical to a serial run
    because every replicate's seed depends only on (master seed, grid
    index, replicate index).  workers=None reads CHIP_THREADS, default 1.
    """
    spec = get_experiment(name)
    eff_grid = dict(spec.grid)
    for key, values in (grid or {}).items():
        if key not in eff_grid:
            raise KeyError(f"{spec.name} has no grid axis {key!r}")
        values = list(values)
        if not values:
            raise ValueError(f"grid axis {key!r} must be nonempty")
        eff_grid[key] = values
    eff_base = dict(spec.base)
    for key, value in (base or {}).items():
        if key not in eff_base:
            raise KeyError(f"{spec.name} has no base parameter {key!r}")
        eff_base[key] = value
    replicates = spec.replicates if replicates is None else int(replicates)
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    if workers is None:
        workers = int(os.environ.get("CHIP_THREADS", "1") or 1)
    workers = max(1, workers)

    points = _grid_points(eff_grid)
    tasks = [
        (spec.name, eff_base, grid_idx, point, rep, seed)
        for grid_idx, point in enumerate(points)
        for rep in range(replicates)
    ]
    if workers == 1:
        results = [_run_replicate(*task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_replicate_star, tasks))
    rows = [row for chunk in results for row in chunk]

    summary, summary_fields = _summarize(spec, eff_base, points, rows)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    replicate_path = out_dir / f"{spec.name}_replicates.csv"
    summary_path = out_dir / f"{spec.name}_summary.csv"
    manifest_path = out_dir / f"{spec.name}_manifest.json"
    _write_csv(replicate_path, _row_fieldnames(spec), rows)
    _write_csv(summary_path, summary_fields, summary)

    n_failed = sum(1 for r in rows if r["error"])
    manifest = {
        "experiment": spec.name,
        "description": spec.description,
        "base": eff_base,
        "grid": eff_grid,
        "replicates": replicates,
        "seed": seed,
        "matrices": list(spec.matrices),
        "seed_derivation": (
            "SeedSequence(seed, spawn_key=(grid_index, replicate)); the "
            "replicate draws, in order, the simulation seed and one "
            "clustering seed each for matrices A and N"
        ),
        "files": {
            "replicates": replicate_path.name,
            "summary": summary_path.name,
        },
        "row_columns": _row_fieldnames(spec),
        "summary_columns": summary_fields,
        "n_rows": len(rows),
        "n_failed": n_failed,
        "versions": _versions(),
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return ExperimentResult(
        name=spec.name,
        rows=rows,
        summary=summary,
        replicate_path=replicate_path,
        summary_path=summary_path,
        manifest_path=manifest_path,
        manifest=manifest,
    )


def _run_replicate_star(task):
    return _run_replicate(*task)


def mse_decay_slopes(summary_rows) -> dict:
    """Log-log decay rate of each estimator's MSE against n.

    Fits log(mse_mean) on log(n) by least squares over the summary rows and
    returns positive decay rates keyed mu, m, alpha, beta (an exact 1/n^2
    decay gives 2.0).  Rows whose mean is NaN or <= 0 are dropped per key.
    """
    slopes = {}
    for key in MSE_KEYS:
        xs, ys = [], []
        for row in summary_rows:
            value = float(row[f"{key}_mean"])
            if np.isfinite(value) and value > 0:
                xs.append(float(row["n"]))
                ys.append(value)
        if len(xs) < 2:
            slopes[key[len("mse_") :]] = float("nan")
            continue
        coef = np.polyfit(np.log(np.asarray(xs)), np.log(np.asarray(ys)), 1)
        slopes[key[len("mse_") :]] = float(-coef[0])
    return slopes


# ---------------------------------------------------------------------------
# real-data pipeline


def fit_real(
    path,
    out_dir,
    k: int | None = None,
    k_max: int = 10,
    test_fraction: float | None = None,
    test_count: int | None = None,
    matrix: str = "weighted",
    seed: int = 0,
    largest_component: bool = False,
    normalize_to: float = 1000.0,
    theta: float = 0.05,
) -> dict:
    """Ingest a raw event file, fit the model, and score a held-out tail.

    With k=None the block count is chosen by the eigengap of the training
    counts (k_max candidates).  The held-out tail is the last test_count
    events, or a test_fraction share; with neither given, 20% is held out.
    Writes report.json, params.json, singular_values.csv, block_stats.csv,
    ci_m.csv and ci_mu_diff.csv into out_dir and returns the report dict.
    """
    started = time.perf_counter()
    result = ingest(
        path, largest_component=largest_component, normalize_to=normalize_to
    )
    log = result.log
    if test_fraction is None and test_count is None:
        test_fraction = 0.2
    split = split_by_count(log, test_count=test_count, test_fraction=test_fraction)

    counts_train, _ = build_matrices(split.train, mode="directed")
    k_max = min(k_max, log.n)
    if k is None:
        if k_max < 2:
            k = 1
            svals = singular_values(counts_train, 1)
        else:
            k, svals = eigengap_select_k(counts_train, k_max)
        k_auto = True
    else:
        k = int(k)
        if not 1 <= k <= log.n:
            raise ValueError(f"k must lie in [1, {log.n}], got {k}")
        svals = singular_values(counts_train, k_max if k_max >= 1 else 1)
        k_auto = False

    chip_report = mean_test_loglik_per_event(split, k, seed=seed, matrix=matrix)
    poisson_report = mean_test_loglik_per_event(
        split, k, seed=seed, model="poisson", matrix=matrix
    )

    fit = fit_chip(log, k, seed=seed, matrix=matrix, isolated_to_largest=True)
    m_half, m_z = m_confidence_intervals(fit.stats, fit.m, theta=theta)
    mu_table = mu_difference_intervals(fit.stats, fit.mu, log.horizon, theta=theta)
    elapsed = time.perf_counter() - started

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    _write_csv(
        out_dir / "singular_values.csv",
        ["rank", "value"],
        [{"rank": i + 1, "value": float(v)} for i, v in enumerate(svals)],
    )
    block_rows = []
    for a in range(k):
        for b in range(k):
            mean = fit.stats.mean[a, b]
            var = fit.stats.var[a, b]
            block_rows.append(
                {
                    "a": a,
                    "b": b,
                    "pair_count": int(fit.stats.pair_counts[a, b]),
                    "event_count": float(fit.stats.event_counts[a, b]),
                    "mean": float(mean) if np.isfinite(mean) else "",
                    "variance": float(var) if np.isfinite(var) else "",
                }
            )
    _write_csv(
        out_dir / "block_stats.csv",
        ["a", "b", "pair_count", "event_count", "mean", "variance"],
        block_rows,
    )
    ci_rows = []
    for a in range(k):
        for b in range(k):
            half = m_half[a, b]
            est = fit.m[a, b]
            usable = np.isfinite(half) and np.isfinite(est)
            ci_rows.append(
                {
                    "a": a,
                    "b": b,
                    "m_hat": float(est) if np.isfinite(est) else "",
                    "half_width": float(half) if usable else "",
                    "lower": float(est - half) if usable else "",
                    "upper": float(est + half) if usable else "",
                }
            )
    _write_csv(
        out_dir / "ci_m.csv",
        ["a", "b", "m_hat", "half_width", "lower", "upper"],
        ci_rows,
    )
    _write_csv(
        out_dir / "ci_mu_diff.csv",
        [
            "diag_a",
            "off_a",
            "off_b",
            "difference",
            "half_width",
            "significant",
        ],
        [
            {
                "diag_a": row["diagonal"][0],
                "off_a": row["off_diagonal"][0],
                "off_b": row["off_diagonal"][1],
                "difference": row["difference"],
                "half_width": row["half_width"],
                "significant": row["significant"],
            }
            for row in mu_table.rows
        ],
    )
    params = fit.params_dict()
    params["block_sizes"] = fit.assignment.block_sizes().tolist()
    (out_dir / "params.json").write_text(
        json.dumps(params, indent=2, sort_keys=True) + "\n"
    )

    report = {
        "source": str(path),
        "n_nodes": log.n,
        "n_events": len(log),
        "n_train_events": len(split.train),
        "n_test_events": len(split.test),
        "dropped_self_edges": result.dropped_self_edges,
        "component_nodes_dropped": result.component_nodes_dropped,
        "component_events_dropped": result.component_events_dropped,
        "horizon": log.horizon,
        "train_horizon": split.train.horizon,
        "k": k,
        "k_auto": k_auto,
        "matrix": matrix,
        "seed": seed,
        "test_loglik_per_event": {
            "chip": chip_report.test_loglik_per_event,
            "poisson": poisson_report.test_loglik_per_event,
        },
        "ci_theta": theta,
        "m_ci_z": m_z,
        "wall_seconds": elapsed,
        "versions": _versions(),
    }
    (out_dir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n"
    )
    return report
