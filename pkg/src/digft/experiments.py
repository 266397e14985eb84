"""Desk-scale experiment harness.

Every experiment is a pure function of its :class:`ExperimentSpec`: the
seed list is ``range(seeds)`` and all solver randomness is derived from
it.  Results are written as CSV plus a ``manifest.json`` that lists the
spec, its digest and the SHA-256 of every deterministic output file.
Wall-clock measurements are kept in files flagged non-deterministic.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .graph import gen_random_geometric, gen_scale_free, gen_three_cluster, laplacian
from .io import format_float, save_trace, write_json
from .methods import build_basis, config_digest, make_config
from .variation import gav, gdv, gqv

log = logging.getLogger(__name__)

EXPERIMENTS = ("convergence-spread", "gav-vs-mindegree", "gqv-invariance", "zero-gdv-counts", "timing")
SOLVERS = ("soc", "pamal")
ZERO_GDV_THRESHOLD = 1e-5


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    out_dir: str
    seeds: int = 20
    n: int = 20
    d_min: tuple[int, ...] = (2, 3, 4)
    variants: tuple[str, ...] = ("A", "B", "C")
    methods: tuple[str, ...] = SOLVERS
    sizes: tuple[int, ...] = (10, 15, 20, 25)
    overrides: dict = field(default_factory=dict)  # method -> {option: value}

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
        if self.seeds < 1:
            raise ValueError("seeds must be at least 1")
        if not self.methods:
            raise ValueError("methods must be non-empty")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        d = self.to_dict()
        d.pop("out_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("DIGFT_THREADS", "1")))
    except ValueError:
        return 1


def _pool_map(fn, jobs):
    jobs = list(jobs)
    workers = min(worker_count(), len(jobs)) or 1
    if workers == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def _config(spec: ExperimentSpec, method: str, **extra):
    opts = dict(spec.overrides.get(method, {}))
    opts.update(extra)
    return make_config(method, opts)


def _solve(job):
    """One ensemble member; failures are returned, never raised."""
    graph, method, cfg = job
    t0 = time.perf_counter()
    try:
        basis = build_basis(graph, method, cfg)
        return {"basis": basis, "seconds": time.perf_counter() - t0, "error": ""}
    except Exception as exc:  # recorded per seed, the ensemble goes on
        return {"basis": None, "seconds": time.perf_counter() - t0, "error": f"{type(exc).__name__}: {exc}"}


def _write_rows(path: Path, header, rows) -> None:
    out = [",".join(header)]
    for r in rows:
        out.append(",".join(format_float(v) if isinstance(v, float) else str(v) for v in r))
    path.write_text("\n".join(out) + "\n", encoding="utf-8")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# -- experiments ---------------------------------------------------------------

def _solver_options(method):
    return {"init": "random"} if method in SOLVERS else {}


def convergence_spread(spec: ExperimentSpec, out: Path) -> list[str]:
    variant = spec.variants[0]
    g = gen_three_cluster(variant)
    (out / "traces").mkdir(exist_ok=True)
    written = []
    summary = []
    for method in spec.methods:
        jobs = [(g, method, _config(spec, method, seed=s, **_solver_options(method))) for s in range(spec.seeds)]
        results = _pool_map(_solve, jobs)
        curves = []
        for s, res in enumerate(results):
            b = res["basis"]
            if b is None:
                summary.append((method, s, "nan", False, "nan", res["error"]))
                continue
            name = f"traces/{method}_seed{s}.csv"
            save_trace(out / name, b.trace)
            written.append(name)
            curves.append(b.trace.column("gdv_x") if "gdv_x" in b.trace.columns else b.trace.column("E"))
            summary.append((method, s, float(b.column_variation.sum()), b.converged, b.orthonormality_error(), ""))
        if curves:
            m, mean, std = spread_curve(curves)
            rows = [(int(i), float(a), float(b), len(curves)) for i, a, b in zip(m, mean, std)]
            _write_rows(out / f"curve_{method}.csv", ("m", "mean", "std", "runs"), rows)
            written.append(f"curve_{method}.csv")
    _write_rows(out / "summary.csv", ("method", "seed", "final_gdv", "converged", "orthonormality_error", "error"), summary)
    return written + ["summary.csv"]


def spread_curve(curves) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean and population std across runs, each held at its last value once finished."""
    length = max(len(c) for c in curves)
    M = np.array([np.concatenate([c, np.full(length - len(c), c[-1])]) for c in curves])
    return np.arange(1, length + 1), M.mean(axis=0), M.std(axis=0)


def _undirected_ensemble(spec: ExperimentSpec):
    for d in spec.d_min:
        for s in range(spec.seeds):
            yield d, s, gen_scale_free(spec.n, d, s)


def gav_vs_mindegree(spec: ExperimentSpec, out: Path) -> list[str]:
    rows = []
    table = {}
    members = list(_undirected_ensemble(spec))
    methods = tuple(spec.methods) + tuple(m for m in ("adjacency", "laplacian") if m not in spec.methods)
    for method in methods:
        jobs = [(g, method, _config(spec, method)) for _, _, g in members]
        for (d, s, g), res in zip(members, _pool_map(_solve, jobs)):
            b = res["basis"]
            total = float(gav(g, b.X).sum()) if b is not None else float("nan")
            rows.append((d, s, method, total, res["error"]))
            table.setdefault((d, method), []).append(total)
    _write_rows(out / "instances.csv", ("d_min", "seed", "method", "total_gav", "error"), rows)
    mean_rows = []
    for d in spec.d_min:
        mean_rows.append((d, *[float(np.nanmean(table[(d, m)])) for m in methods]))
    _write_rows(out / "gav_vs_mindegree.csv", ("d_min", *[f"gav_{m}" for m in methods]), mean_rows)
    return ["instances.csv", "gav_vs_mindegree.csv"]


def gqv_invariance(spec: ExperimentSpec, out: Path) -> list[str]:
    rows = []
    members = list(_undirected_ensemble(spec))
    for method in spec.methods:
        jobs = [(g, method, _config(spec, method)) for _, _, g in members]
        for (d, s, g), res in zip(members, _pool_map(_solve, jobs)):
            b = res["basis"]
            tr = float(np.trace(laplacian(g)))
            if b is None:
                rows.append((d, s, method, tr, float("nan"), float("nan"), float("nan"), res["error"]))
                continue
            total = float(gqv(g, b.X).sum())
            dev = abs(total - tr)
            rows.append((d, s, method, tr, total, dev, dev / max(1.0, tr), ""))
    header = ("d_min", "seed", "method", "trace_L", "sum_gqv", "abs_deviation", "rel_deviation", "error")
    _write_rows(out / "gqv_invariance.csv", header, rows)
    return ["gqv_invariance.csv"]


def zero_gdv_counts(spec: ExperimentSpec, out: Path) -> list[str]:
    rows = []
    for variant in spec.variants:
        g = gen_three_cluster(variant)
        for method in spec.methods:
            jobs = [(g, method, _config(spec, method, seed=s, **_solver_options(method))) for s in range(spec.seeds)]
            for s, res in enumerate(_pool_map(_solve, jobs)):
                b = res["basis"]
                if b is None:
                    rows.append((variant, method, s, -1, float("nan"), False, res["error"]))
                    continue
                count = int((b.column_variation < ZERO_GDV_THRESHOLD).sum())
                rows.append((variant, method, s, count, float(b.column_variation.sum()), b.converged, ""))
    header = ("variant", "method", "seed", "zero_gdv_columns", "total_gdv", "converged", "error")
    _write_rows(out / "zero_gdv_counts.csv", header, rows)
    return ["zero_gdv_counts.csv"]


TIMING_DEFAULTS = {"soc": {"beta": 20.0}, "pamal": {"rho1": 20.0}}


def timing_graph(n: int, seed: int):
    # radius keeps the expected degree near 2 log n; a quarter of the links one-way
    radius = float(np.sqrt(2.0 * np.log(n) / (np.pi * n)))
    return gen_random_geometric(n, min(radius * 1.5, 1.5), 0.25, seed)


def timing(spec: ExperimentSpec, out: Path) -> list[str]:
    rows, clock = [], []
    for n in spec.sizes:
        for method in spec.methods:
            base = dict(TIMING_DEFAULTS.get(method, {}))
            base.update(spec.overrides.get(method, {}))
            for s in range(spec.seeds):
                g = timing_graph(n, s)
                res = _solve((g, method, make_config(method, base)))
                b = res["basis"]
                if b is None:
                    rows.append((n, method, s, g.num_edges, float("nan"), False, res["error"]))
                else:
                    rows.append((n, method, s, g.num_edges, float(gdv(g, b.X).sum()), b.converged, ""))
                clock.append((n, method, s, res["seconds"]))
    _write_rows(out / "timing_results.csv", ("n", "method", "seed", "edges", "total_gdv", "converged", "error"), rows)
    _write_rows(out / "wallclock.csv", ("n", "method", "seed", "seconds"), clock)
    return ["timing_results.csv"]


RUNNERS = {
    "convergence-spread": convergence_spread,
    "gav-vs-mindegree": gav_vs_mindegree,
    "gqv-invariance": gqv_invariance,
    "zero-gdv-counts": zero_gdv_counts,
    "timing": timing,
}
NONDETERMINISTIC = {"timing": ["wallclock.csv"]}


def run_experiment(spec: ExperimentSpec) -> Path:
    """Run ``spec`` and return the path of its manifest."""
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = RUNNERS[spec.experiment](spec, out)
    configs = {m: config_digest(m, _config(spec, m)) for m in spec.methods}
    manifest = {
        "experiment": spec.experiment,
        "spec": {k: v for k, v in spec.to_dict().items() if k != "out_dir"},
        "spec_digest": spec.digest(),
        "config_digests": configs,
        "seeds": list(range(spec.seeds)),
        "artifact_version": __version__,
        "files": {name: _sha256(out / name) for name in sorted(files)},
        "nondeterministic_files": NONDETERMINISTIC.get(spec.experiment, []),
    }
    path = out / "manifest.json"
    write_json(path, manifest)
    return path
