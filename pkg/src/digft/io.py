"""Flat-file persistence: basis CSV, signals and JSON sidecars."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .basis import ConvergenceTrace, FourierBasis

SIDECAR_SUFFIX = ".json"


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def write_matrix_csv(path, M: np.ndarray) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lines = [",".join(format_float(v) for v in row) for row in M]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            rows.append([float(v) for v in line.split(",")])
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    if len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: ragged rows")
    return np.array(rows)


def write_vector(path, v) -> None:
    v = np.asarray(v, dtype=float).ravel()
    Path(path).write_text("".join(format_float(x) + "\n" for x in v), encoding="utf-8")


def read_vector(path) -> np.ndarray:
    M = read_matrix_csv(path)
    if M.shape[1] != 1 and M.shape[0] != 1:
        raise ValueError(f"{path}: expected a single row or column")
    return M.ravel()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        # keep JSON strict; repr round-trips the exact double
        return f if np.isfinite(f) else repr(f)
    return obj


def sidecar_path(path) -> Path:
    return Path(str(path) + SIDECAR_SUFFIX)


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def save_basis(path, basis: FourierBasis, metadata: dict | None = None) -> None:
    """Write the matrix (row-major, 17 significant digits) plus a JSON sidecar."""
    write_matrix_csv(path, basis.X)
    side = {
        "method": basis.method,
        "n": basis.n,
        "converged": basis.converged,
        "column_variation": [format_float(v) for v in basis.column_variation],
        "orthonormality_error": basis.orthonormality_error(),
        "info": {k: v for k, v in basis.info.items() if k not in ("median_centred", "restart_histories", "found")},
    }
    side.update(metadata or {})
    write_json(sidecar_path(path), side)


def load_basis(path) -> FourierBasis:
    X = read_matrix_csv(path)
    if X.shape[0] != X.shape[1]:
        raise ValueError(f"{path}: basis must be square, got {X.shape}")
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
        values = np.array([float(v) for v in meta["column_variation"]])
        return FourierBasis(X, values, meta["method"], None, bool(meta["converged"]), meta.get("info", {}))
    return FourierBasis(X, np.full(X.shape[0], np.nan), "unknown")


def save_trace(path, trace: ConvergenceTrace) -> None:
    Path(path).write_text(trace.to_csv(), encoding="utf-8")


def read_trace(path) -> ConvergenceTrace:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    columns = tuple(lines[0].split(","))
    trace = ConvergenceTrace(columns)
    for line in lines[1:]:
        if line:
            vals = line.split(",")
            trace.append(int(vals[0]), *(float(v) for v in vals[1:]))
    return trace
