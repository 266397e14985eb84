"""Balanced-variation basis by the explicit-implicit ratio descent.

Each vector minimizes ``E(x) = f(x) / B(x)`` with ``B(x) = sum |x - m(x)|``
over unit vectors orthogonal to the vectors already found.  A step takes
an explicit subgradient of ``B`` and an implicit (proximal) step on ``f``;
the proximal weight ``E(x)/alpha`` folds in the step size
``tau = alpha B / E``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .basis import ConvergenceTrace, FourierBasis, constant_vector, gram_schmidt
from .graph import DirectedGraph, laplacian, symmetrize
from .proxcore import GdvProx, ProxGdvConfig, project_complement
from .variation import cheeger_eval, median

log = logging.getLogger(__name__)

BALANCED_TRACE_COLUMNS = ("iteration", "vector", "step", "E", "B", "f", "median")


class DegenerateIterate(RuntimeError):
    """Median-centred iterate vanished and retries ran out."""


@dataclass(frozen=True)
class BalancedConfig:
    alpha: float = 1.0
    eps: float = 1e-6
    max_iter: int = 2000
    kind: str = "auto"  # "GDV", "GAV", or pick by symmetry
    # "balance": zero entries share whatever makes sum(w) = 0; "fixed": they take sign0
    zero_sign: str = "balance"
    sign0: float = 0.0
    seed: int | None = 0
    max_retries: int = 5
    # independent seeded starts per vector; the lowest final E is kept
    restarts: int = 4
    # one extra start from the lowest Laplacian eigenvector left in the feasible subspace
    spectral_start: bool = True
    prox: ProxGdvConfig = field(default_factory=ProxGdvConfig)

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.kind.upper() not in ("AUTO", "GDV", "GAV"):
            raise ValueError("kind must be auto, GDV or GAV")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.zero_sign not in ("balance", "fixed"):
            raise ValueError("zero_sign must be 'balance' or 'fixed'")
        if not -1.0 <= self.sign0 <= 1.0:
            raise ValueError("sign0 must lie in [-1, 1]")

    def resolve_kind(self, g: DirectedGraph) -> str:
        kind = self.kind.upper()
        if kind == "AUTO":
            return "GAV" if g.is_symmetric else "GDV"
        return kind


@dataclass
class VectorRun:
    x: np.ndarray  # emitted vector, x_hat / ||x_hat||
    centred: np.ndarray  # median-centred variant y / ||y||
    E: float
    iterations: int
    converged: bool
    retries: int
    history: list = field(default_factory=list)  # (E, B, f, median) per iterate
    restart_values: tuple = ()
    restart_histories: tuple = ()


def subgradient_sign(x: np.ndarray, sign0: float | None = 0.0) -> np.ndarray:
    """Selection from the set-valued sign of ``x``.

    With ``sign0=None`` the zero entries split the imbalance between the
    positive and negative entries, so ``sum(w) = 0``.  For a zero-median
    ``x`` this value lies in ``[-1, 1]`` and ``w`` is then a subgradient of
    ``sum |x_i - m(x)|``; with ties at the median a fixed value is not.
    """
    w = np.sign(x)
    zero = x == 0
    if sign0 is None:
        if zero.any():
            w[zero] = np.clip(-w.sum() / zero.sum(), -1.0, 1.0)
    else:
        w[zero] = sign0
    return w


def _initial(n, prefix, rng):
    x = project_complement(rng.standard_normal(n), prefix)
    y = x - median(x)
    norm = np.linalg.norm(y)
    return y / norm if norm > 0 else None


def _spectral_start(g: DirectedGraph, prefix: np.ndarray):
    _, V = np.linalg.eigh(laplacian(symmetrize(g)))
    for j in range(V.shape[1]):
        x = project_complement(V[:, j], prefix)
        if np.linalg.norm(x) > 1e-8:
            y = x - median(x)
            norm = np.linalg.norm(y)
            if norm > 0:
                return y / norm
    return None


def balanced_vector(
    g: DirectedGraph, prefix: np.ndarray, cfg: BalancedConfig, rng: np.random.Generator, kind: str | None = None
) -> VectorRun:
    """Minimize the balanced ratio over unit vectors orthogonal to ``prefix``.

    Runs ``cfg.restarts`` seeded random starts, preceded by a spectral
    start when ``cfg.spectral_start`` is set, and keeps the run with the
    lowest final ratio (the first on ties).
    """
    kind = kind or cfg.resolve_kind(g)
    # on symmetric graphs GDV and GAV coincide, so one prox serves both
    gp = symmetrize(g) if kind == "GAV" else g
    prox = GdvProx(gp, cfg.prox, prefix=prefix)
    starts = [None] * cfg.restarts
    if cfg.spectral_start:
        starts.insert(0, _spectral_start(g, prefix))
    runs = [_descend(g, prox, prefix, cfg, rng, kind, x0) for x0 in starts]
    best = min(range(len(runs)), key=lambda i: runs[i].E)
    run = runs[best]
    run.restart_values = tuple(r.E for r in runs)
    run.restart_histories = tuple(r.history for r in runs)
    return run


def _descend(g, prox, prefix, cfg, rng, kind, x0=None) -> VectorRun:
    n = g.n
    for attempt in range(cfg.max_retries + 1):
        x = x0 if attempt == 0 and x0 is not None else _initial(n, prefix, rng)
        if x is None:
            continue
        obj = cheeger_eval(g, x, kind)
        if obj.undefined:
            continue
        history = [(obj.value, obj.balance, obj.numerator, obj.median)]
        x_hat = project_complement(x, prefix)
        converged = False
        degenerate = False
        it = 0
        E = obj.value
        while it < cfg.max_iter:
            if E == 0.0:
                converged = True
                break
            it += 1
            w = subgradient_sign(x, None if cfg.zero_sign == "balance" else cfg.sign0)
            h = x + cfg.alpha * (w - w.mean())
            prox.reset()
            x_hat = prox(h, E / cfg.alpha).x
            y = x_hat - median(x_hat)
            norm = np.linalg.norm(y)
            if norm == 0.0:
                degenerate = True
                break
            x = y / norm
            obj = cheeger_eval(g, x, kind)
            history.append((obj.value, obj.balance, obj.numerator, obj.median))
            done = abs(obj.value - E) < cfg.eps
            E = obj.value
            if done:
                converged = True
                break
        if degenerate:
            log.info("degenerate balanced iterate, retry %d", attempt + 1)
            continue
        out = x_hat / np.linalg.norm(x_hat) if np.linalg.norm(x_hat) > 0 else x_hat
        return VectorRun(out, x, E, it, converged, attempt, history)
    raise DegenerateIterate(f"no usable iterate after {cfg.max_retries} retries")


def balanced_basis(g: DirectedGraph, cfg: BalancedConfig | None = None) -> FourierBasis:
    cfg = cfg or BalancedConfig()
    n = g.n
    if n < 2:
        raise ValueError("need at least two nodes")
    kind = cfg.resolve_kind(g)
    rng = np.random.default_rng(cfg.seed)
    cols = [constant_vector(n)]
    centred = [constant_vector(n)]
    trace = ConvergenceTrace(BALANCED_TRACE_COLUMNS)
    runs = []
    counter = 0
    for k in range(1, n):
        run = balanced_vector(g, np.column_stack(cols), cfg, rng, kind)
        for step, row in enumerate(run.history):
            counter += 1
            trace.append(counter, k + 1, step, *row)
        cols.append(run.x)
        centred.append(run.centred)
        runs.append(run)
    X = np.column_stack(cols)
    pre = float(np.abs(X.T @ X - np.eye(n)).max())
    Xs = gram_schmidt(X, n)
    if Xs.shape[1] < n:
        raise DegenerateIterate("balanced vectors are linearly dependent")
    Xs[:, 0] = constant_vector(n)
    post = float(np.abs(Xs.T @ Xs - np.eye(n)).max())
    if pre > 1e-6:
        log.warning("balanced basis needed a large re-orthonormalization (%.2e)", pre)
    values = np.array([0.0] + [cheeger_eval(g, Xs[:, j], kind).value for j in range(1, n)])
    order = np.concatenate([[0], 1 + np.argsort(values[1:], kind="stable")])
    return FourierBasis(
        Xs[:, order],
        values[order],
        "balanced",
        trace,
        all(r.converged for r in runs),
        info={
            "kind": kind,
            "orthonormality_before": pre,
            "orthonormality_after": post,
            "flagged": pre > 1e-6,
            "median_centred": np.column_stack(centred)[:, order],
            # emitted vectors in the order they were found, before stabilization
            "found": X,
            "iterations": [r.iterations for r in runs],
            "retries": sum(r.retries for r in runs),
            "restart_values": [r.restart_values for r in runs],
            "restart_histories": [r.restart_histories for r in runs],
        },
    )
